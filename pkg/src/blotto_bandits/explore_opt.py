"""Exploration distributions and the smallest-nonzero-eigenvalue objective.

The regret guarantee of the learners improves with the smallest nonzero
eigenvalue of the co-occurrence matrix of the exploration distribution, so
this module provides: the zero-eigenvalue count K (fixed across all spanning
distributions by rank-nullity), extraction of that eigenvalue, a
derivative-free search over edge-weight-factored distributions (the factored
form is what keeps sampling and matrix computation efficient), and a textual
export of the equivalent semidefinite program for external solvers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from .layered_graph import (
    DEFAULT_ENUMERATION_CAP,
    LayeredGraph,
    enumerate_paths,
    path_edge_ids,
)
from .weight_push import compute_h, cooccurrence, path_probability

EIGEN_TOL = 1e-9  # relative threshold shared with the loss-estimator pseudo-inverse


@dataclass(frozen=True)
class UniformExploration:
    """Uniform over paths; realized by unit edge weights since every path has
    the same number of edges."""


@dataclass(frozen=True)
class FactoredExploration:
    """Path probability proportional to the product of per-edge weights."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise ValueError("factored exploration weights must be positive and finite")
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class ExplicitExploration:
    """Explicit path distribution in enumeration order; small instances only."""

    probabilities: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise ValueError("explicit exploration must be a probability vector")
        object.__setattr__(self, "probabilities", p)


ExplorationSpec = UniformExploration | FactoredExploration | ExplicitExploration


def exploration_edge_weights(spec: ExplorationSpec, g: LayeredGraph) -> np.ndarray:
    """Edge weights realizing the spec, for specs with the factored form."""
    if isinstance(spec, UniformExploration):
        return np.ones(g.num_edges)
    if isinstance(spec, FactoredExploration):
        if spec.weights.shape != (g.num_edges,):
            raise ValueError(
                f"exploration weights must have length {g.num_edges}, "
                f"got {spec.weights.shape}"
            )
        return spec.weights
    raise ValueError(
        "explicit path distributions lack the edge-weight-factored form "
        "required for weight-pushed sampling"
    )


def exploration_path_distribution(
    spec: ExplorationSpec, g: LayeredGraph, cap: int = DEFAULT_ENUMERATION_CAP
) -> np.ndarray:
    """The spec as an explicit distribution over enumerated paths."""
    if isinstance(spec, ExplicitExploration):
        if spec.probabilities.shape[0] != g.path_count():
            raise ValueError(
                f"explicit distribution must have {g.path_count()} entries"
            )
        return spec.probabilities
    w = exploration_edge_weights(spec, g)
    paths = enumerate_paths(g, cap)
    h = compute_h(g, w)
    return np.asarray([path_probability(g, w, h, p) for p in paths])


def exploration_cooccurrence(
    spec: ExplorationSpec, g: LayeredGraph, cap: int = DEFAULT_ENUMERATION_CAP
) -> np.ndarray:
    """Co-occurrence matrix of the exploration distribution."""
    if isinstance(spec, ExplicitExploration):
        paths = enumerate_paths(g, cap)
        return paths.T @ (spec.probabilities[:, None] * paths)
    return cooccurrence(g, exploration_edge_weights(spec, g))


@dataclass(frozen=True)
class SpectralReport:
    """Zero-eigenvalue count, the smallest nonzero eigenvalue, and the full
    ascending spectrum of a co-occurrence matrix; searches attach their
    best-so-far trace."""

    zero_count: int
    lambda_star: float
    spectrum: np.ndarray
    trace: tuple[float, ...] | None = None


def zero_eigen_count(g: LayeredGraph, tol: float = EIGEN_TOL) -> int:
    """Number of zero eigenvalues of the co-occurrence matrix, identical for
    every spanning distribution; computed from the uniform one."""
    eigs = np.linalg.eigvalsh(cooccurrence(g, np.ones(g.num_edges)))
    return int(g.num_edges - np.count_nonzero(eigs > tol * eigs[-1]))


def lambda_star(m: np.ndarray, zero_count: int, tol: float = EIGEN_TOL) -> float:
    """The (zero_count + 1)-th smallest eigenvalue of a symmetric PSD matrix,
    verifying that the zero_count smallest are numerically zero."""
    eigs = np.linalg.eigvalsh(m)
    cutoff = tol * max(eigs[-1], 0.0)
    if eigs[-1] <= 0.0:
        raise ValueError("matrix is numerically zero")
    if zero_count > 0 and eigs[zero_count - 1] > cutoff:
        raise ValueError(
            f"expected {zero_count} zero eigenvalues but the {zero_count}-th "
            f"smallest is {eigs[zero_count - 1]:.3e}; distribution may not span "
            "the path set or the count is wrong"
        )
    if zero_count >= eigs.shape[0]:
        raise ValueError("zero-eigenvalue count covers the whole spectrum")
    return float(eigs[zero_count])


def span_basis(g: LayeredGraph, tol: float = EIGEN_TOL) -> np.ndarray:
    """Orthonormal basis (E x r) of the span of all path incidence vectors,
    from the eigenvectors of the uniform co-occurrence matrix."""
    eigs, vecs = np.linalg.eigh(cooccurrence(g, np.ones(g.num_edges)))
    basis = vecs[:, eigs > tol * eigs[-1]]
    basis.setflags(write=False)
    return basis


def spectral_report(
    g: LayeredGraph, weights, zero_count: int | None = None
) -> SpectralReport:
    """Spectrum of the co-occurrence matrix of the given factored weights."""
    if zero_count is None:
        zero_count = zero_eigen_count(g)
    m = cooccurrence(g, weights)
    eigs = np.linalg.eigvalsh(m)
    return SpectralReport(
        zero_count=zero_count,
        lambda_star=lambda_star(m, zero_count),
        spectrum=eigs,
    )


def _default_proposal(
    rng: np.random.Generator, best: np.ndarray, radius: float
) -> np.ndarray:
    """Perturb the incumbent log-weights, either everywhere or on a random
    coordinate block."""
    x = best.copy()
    e = x.shape[0]
    if rng.random() < 0.5:
        idx = slice(None)
        count = e
    else:
        count = int(rng.integers(1, max(2, e // 2)))
        idx = rng.choice(e, size=count, replace=False)
    x[idx] = x[idx] + radius * rng.standard_normal(count)
    return x - x.mean()  # pin the geometric mean; scale does not change the distribution


def optimize_exploration(
    g: LayeredGraph,
    budget: int | None = None,
    rng: np.random.Generator | None = None,
    proposal: Callable[[np.random.Generator, np.ndarray, float], np.ndarray] | None = None,
) -> tuple[np.ndarray, SpectralReport]:
    """Derivative-free maximization of the smallest nonzero eigenvalue over
    edge-weight-factored distributions.

    Searches in log-weight space starting from unit weights (the uniform
    distribution), so the result is never worse than uniform.  The radius of
    the Gaussian proposals grows on improvement and shrinks after a run of
    rejections.  ``budget`` counts objective evaluations (default 100 per
    edge).  The eigenvalue is treated as a black box; nothing here assumes
    convexity or differentiability.
    """
    if budget is None:
        budget = 100 * g.num_edges
    if budget < 1:
        raise ValueError("evaluation budget must be >= 1")
    if rng is None:
        rng = np.random.default_rng()
    if proposal is None:
        proposal = _default_proposal

    basis = span_basis(g)
    zero_count = g.num_edges - basis.shape[1]

    def objective(log_w: np.ndarray) -> float:
        # restricting to the path span drops the K structural zeros, so the
        # smallest eigenvalue of the reduced matrix is the target eigenvalue
        m = cooccurrence(g, np.exp(log_w))
        return float(scipy.linalg.eigvalsh(basis.T @ m @ basis)[0])

    best_x = np.zeros(g.num_edges)
    best_f = objective(best_x)
    trace = [best_f]
    evals = 1
    radius = 0.5
    stall = 0
    while evals < budget:
        candidate = proposal(rng, best_x, radius)
        f = objective(candidate)
        evals += 1
        if f > best_f:
            best_x, best_f = candidate, f
            radius = min(radius * 1.3, 2.0)
            stall = 0
        else:
            stall += 1
            if stall >= 15:
                radius = max(radius * 0.6, 1e-3)
                stall = 0
        trace.append(best_f)

    weights = np.exp(best_x)
    report = spectral_report(g, weights, zero_count)
    report = SpectralReport(
        zero_count=report.zero_count,
        lambda_star=report.lambda_star,
        spectrum=report.spectrum,
        trace=tuple(trace),
    )
    return weights, report


def emit_sdp(g: LayeredGraph, cap: int = DEFAULT_ENUMERATION_CAP) -> str:
    """Textual problem data for the eigenvalue-maximization semidefinite
    program; solving it is left to external tools.

    Maximizing the smallest nonzero eigenvalue over path distributions x
    equals maximizing the sum of the K+1 smallest eigenvalues (the K zeros
    are structural), which is the SDP

        minimize    (K+1)*s + trace(Z)
        subject to  Z psd
                    Z + sum_i x[i] * outer(path_i) + s * I  psd
                    x in [0,1]^P, sum(x) = 1;  s real;  Z symmetric E x E.

    Each coefficient block outer(path_i) is written sparsely as the edge
    indices of path i (the block is 1 on every pair of those indices).
    Format: ``format sdp-v1`` header, ``key value`` lines, then one
    ``path <i>: <edge indices>`` line per path.
    """
    paths = enumerate_paths(g, cap)
    k = zero_eigen_count(g)
    lines = [
        "format sdp-v1",
        f"m {g.m}",
        f"n {g.n}",
        f"edges {g.num_edges}",
        f"paths {paths.shape[0]}",
        f"zero_eigs {k}",
        f"objective minimize ({k + 1})*s + trace(Z)",
        f"vars x[{paths.shape[0]}] in [0,1] sum_to 1 ; s real ; Z sym {g.num_edges}x{g.num_edges}",
        "constraint Z psd",
        "constraint Z + sum_i x[i]*outer(path_i) + s*I psd",
    ]
    for i, p in enumerate(paths):
        eids = " ".join(str(e) for e in path_edge_ids(g, p))
        lines.append(f"path {i}: {eids}")
    return "\n".join(lines) + "\n"
