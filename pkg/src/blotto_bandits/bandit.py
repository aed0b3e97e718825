"""The two bandit learners: an exact reference over explicit paths and an
efficient variant over edge weights.

Both mix an exploitation distribution (exponential weights normalized over
paths) with a fixed exploration distribution, estimate the full edge-loss
vector from the single observed scalar through the pseudo-inverse of the
co-occurrence matrix of the mixture, and update multiplicatively.  The
reference learner materializes every path and is the oracle the efficient
learner is checked against; the efficient learner keeps one weight per edge
and relies on weight pushing for sampling and matrix computation, so its
per-stage cost is polynomial in the edge count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
import scipy.linalg

from . import weight_push as wp
from .explore_opt import (
    EIGEN_TOL,
    ExplicitExploration,
    ExplorationSpec,
    UniformExploration,
    exploration_cooccurrence,
    exploration_edge_weights,
    exploration_path_distribution,
    span_basis,
    zero_eigen_count,
)
from .layered_graph import (
    DEFAULT_ENUMERATION_CAP,
    LayeredGraph,
    edge_count,
    enumerate_paths,
)

LossOracle = Callable[[np.ndarray], float]


@dataclass
class BanditConfig:
    gamma: float
    eta: float
    horizon: int
    exploration: ExplorationSpec = field(default_factory=UniformExploration)
    pinv_tol: float = EIGEN_TOL
    renorm_every: int = 100  # rescale weights periodically; the sampling law is scale-free
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        if not self.eta > 0.0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")


class TunedParameters(NamedTuple):
    gamma: float
    eta: float
    feasible: bool


def tune_parameters(m: int, n: int, horizon: int, lambda_star: float) -> TunedParameters:
    """Default mixing weight and learning rate for a given smallest nonzero
    eigenvalue of the exploration co-occurrence matrix.

    The shapes follow the known regret bound (eta balances the bound's two
    terms, gamma keeps the estimator covariance controlled); the bound only
    kicks in once the horizon clears a threshold growing like 1/lambda^2, so
    the returned flag marks shorter horizons as infeasible.  Both values are
    heuristics and remain user-overridable.
    """
    if lambda_star <= 0.0:
        raise ValueError("lambda_star must be positive")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    e = edge_count(m, n)
    log_p = math.log(math.comb(n + m - 1, n - 1))
    eta = math.sqrt(log_p / (horizon * e * (2.0 * n / (e * lambda_star) + 1.0)))
    gamma = min(1.0, eta * n / lambda_star)
    threshold = n * log_p / (lambda_star**2 * (e / n + 2.0 / lambda_star))
    return TunedParameters(gamma=gamma, eta=eta, feasible=horizon >= threshold)


def estimate_loss(
    cooc: np.ndarray, incidence: np.ndarray, observed: float, tol: float = EIGEN_TOL
) -> np.ndarray:
    """Estimated edge-loss vector observed * pinv(C) @ p.

    The co-occurrence matrix is rank-deficient (paths span a strict subspace
    of edge space), so the pseudo-inverse inverts only eigenvalues above
    ``tol`` times the largest; the estimate lies in the row space of C, which
    is all the exponential update ever evaluates.
    """
    eigs, vecs = np.linalg.eigh(cooc)
    top = eigs[-1]
    if not np.isfinite(top) or top <= 0.0:
        raise ValueError("co-occurrence matrix is numerically zero")
    keep = eigs > tol * top
    coeffs = (vecs[:, keep].T @ incidence) / eigs[keep]
    return float(observed) * (vecs[:, keep] @ coeffs)


def _sample_index(weights: np.ndarray, rng: np.random.Generator) -> int:
    cum = np.cumsum(weights)
    k = int(np.searchsorted(cum, rng.random() * cum[-1]))
    return min(k, weights.shape[0] - 1)


class ComBand:
    """Reference learner over explicitly enumerated paths.

    Keeps one weight per path, samples from the explicit mixture, and builds
    the co-occurrence matrix by the full sum over paths.  Exponential in the
    instance size; intended for small instances and as the correctness oracle
    for the edge-weight learner.
    """

    def __init__(self, g: LayeredGraph, cfg: BanditConfig):
        self.g = g
        self.cfg = cfg
        self.paths = enumerate_paths(g, cfg.enumeration_cap)
        self.log_w = np.zeros(self.paths.shape[0])
        self.mu = exploration_path_distribution(cfg.exploration, g, cfg.enumeration_cap)
        if isinstance(cfg.exploration, ExplicitExploration):
            self._check_spanning()
        self.t = 0

    def _check_spanning(self):
        m_mu = self.paths.T @ (self.mu[:, None] * self.paths)
        eigs = np.linalg.eigvalsh(m_mu)
        rank = int(np.count_nonzero(eigs > EIGEN_TOL * eigs[-1]))
        full = self.g.num_edges - zero_eigen_count(self.g)
        if rank != full:
            raise ValueError(
                "exploration distribution does not span the path set "
                f"(rank {rank} < {full})"
            )

    @property
    def path_weights(self) -> np.ndarray:
        """Current positive path weights (up to a common scale)."""
        return np.exp(self.log_w - self.log_w.max())

    def distribution(self) -> np.ndarray:
        """Sampling distribution over paths in enumeration order."""
        w = self.path_weights
        nu = w / w.sum()
        return (1.0 - self.cfg.gamma) * nu + self.cfg.gamma * self.mu

    def _update(self, incidence: np.ndarray, observed: float) -> None:
        d = self.distribution()
        cooc = self.paths.T @ (d[:, None] * self.paths)
        lhat = estimate_loss(cooc, incidence, observed, self.cfg.pinv_tol)
        self.log_w -= self.cfg.eta * (self.paths @ lhat)
        self.t += 1
        if self.t % self.cfg.renorm_every == 0:
            self.log_w -= self.log_w.max()

    def step(
        self, loss_oracle: LossOracle, rng: np.random.Generator
    ) -> tuple[np.ndarray, float]:
        """Play one stage: sample a path, observe only its scalar loss, update."""
        idx = _sample_index(self.distribution(), rng)
        incidence = self.paths[idx]
        observed = float(loss_oracle(incidence))
        self._update(incidence, observed)
        return incidence, observed

    def force_step(self, incidence: np.ndarray, observed: float) -> None:
        """Update as if ``incidence`` had been sampled (replay / cross-checks)."""
        self._update(incidence, float(observed))


class EdgeCB:
    """Efficient learner over edge weights.

    The path-weight table is never materialized: weights live on edges (in
    log space, since the multiplicative update is additive there), sampling
    goes through the weight-pushing walk, and the mixture co-occurrence
    matrix comes from the closed-form per-edge-pair computation.  The loss
    estimate solves on a precomputed orthonormal basis of the path span,
    where the mixture matrix is positive definite, with the eigendecomposition
    pseudo-inverse as fallback; both agree on the span.
    """

    def __init__(self, g: LayeredGraph, cfg: BanditConfig):
        self.g = g
        self.cfg = cfg
        self.explore_w = exploration_edge_weights(cfg.exploration, g)  # rejects explicit specs
        self._explore_h = wp.compute_h(g, self.explore_w)
        self.m_mu = wp.cooccurrence(g, self.explore_w, self._explore_h)
        self.log_w = np.zeros(g.num_edges)
        self.basis = span_basis(g)
        self._reduced_mu = self.basis.T @ self.m_mu @ self.basis
        self._explore_factor = None  # lazy Cholesky reuse for gamma == 1
        self.t = 0
        # linear-domain tables are safe while every path's weight product
        # stays within double range
        self._linear_limit = 600.0 / g.n

    @property
    def edge_weights(self) -> np.ndarray:
        """Current positive edge weights (up to a common scale)."""
        return np.exp(self.log_w - self.log_w.max())

    def _table(self) -> tuple[np.ndarray, wp.PushTable]:
        if np.abs(self.log_w).max() < self._linear_limit:
            w = np.exp(self.log_w)
            return w, wp.compute_h(self.g, w)
        return self.log_w, wp.compute_h_log(self.g, self.log_w)

    def _estimate(self, cooc: np.ndarray, incidence: np.ndarray, observed: float) -> np.ndarray:
        b = self.basis
        try:
            if self.cfg.gamma == 1.0:
                if self._explore_factor is None:
                    self._explore_factor = scipy.linalg.cho_factor(self._reduced_mu)
                factor = self._explore_factor
            else:
                factor = scipy.linalg.cho_factor(b.T @ cooc @ b)
            return float(observed) * (b @ scipy.linalg.cho_solve(factor, b.T @ incidence))
        except scipy.linalg.LinAlgError:
            return estimate_loss(cooc, incidence, observed, self.cfg.pinv_tol)

    def _mixture_cooccurrence(self, values, table) -> np.ndarray:
        gamma = self.cfg.gamma
        if gamma == 1.0:
            return self.m_mu
        if table.log_domain:
            m_nu = wp.cooccurrence_log(self.g, values, table)
        else:
            m_nu = wp.cooccurrence(self.g, values, table)
        if gamma == 0.0:
            return m_nu
        return (1.0 - gamma) * m_nu + gamma * self.m_mu

    def _update_weights(self, lhat: np.ndarray) -> None:
        self.log_w -= self.cfg.eta * lhat
        self.t += 1
        if self.t % self.cfg.renorm_every == 0:
            self.log_w -= self.log_w.mean()

    def step(
        self, loss_oracle: LossOracle, rng: np.random.Generator
    ) -> tuple[np.ndarray, float]:
        """Play one stage: explore with probability gamma, exploit otherwise,
        observe only the scalar loss, estimate, and update every edge weight."""
        values, table = self._table()
        if rng.random() < self.cfg.gamma:
            incidence = wp.wp_sample(self.g, self.explore_w, self._explore_h, rng)
        elif table.log_domain:
            incidence = wp.wp_sample_log(self.g, values, table, rng)
        else:
            incidence = wp.wp_sample(self.g, values, table, rng)
        observed = float(loss_oracle(incidence))
        cooc = self._mixture_cooccurrence(values, table)
        self._update_weights(self._estimate(cooc, incidence, observed))
        return incidence, observed

    def force_step(self, incidence: np.ndarray, observed: float) -> None:
        """Update as if ``incidence`` had been sampled (replay / cross-checks)."""
        values, table = self._table()
        cooc = self._mixture_cooccurrence(values, table)
        self._update_weights(self._estimate(cooc, incidence, float(observed)))

    def distribution(self, cap: int | None = None) -> np.ndarray:
        """Exact sampling distribution over enumerated paths (diagnostics on
        small instances): the Bernoulli mixture's marginal law."""
        cap = self.cfg.enumeration_cap if cap is None else cap
        paths = enumerate_paths(self.g, cap)
        values, table = self._table()
        if table.log_domain:
            log_hsd = table.table[self.g.source, self.g.destination]
            nu = np.asarray(
                [math.exp(float(values[p > 0].sum()) - log_hsd) for p in paths]
            )
        else:
            nu = np.asarray(
                [wp.path_probability(self.g, values, table, p) for p in paths]
            )
        mu = exploration_path_distribution(self.cfg.exploration, self.g, cap)
        return (1.0 - self.cfg.gamma) * nu + self.cfg.gamma * mu
