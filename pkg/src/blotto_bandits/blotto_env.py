"""Battlefields, adversary models, and the per-stage loss rules of the game.

A battlefield is lost when some adversary puts strictly more troops on it;
ties are either shared equally among the top players (model default) or
awarded to the adversary (used by the extreme-strong replication, where it
makes the all-in path the unique low-loss action).  Battlefield values are
normalized to sum to one, so every path loss lies in [0, 1].
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .layered_graph import LayeredGraph


class TieRule(enum.Enum):
    SHARED_EQUALLY = "shared"
    ADVERSARY_WINS = "adversary-wins"


def normalize_values(raw: Sequence[float]) -> np.ndarray:
    """Normalize raw positive battlefield values so they sum to 1."""
    values = np.asarray(raw, dtype=float)
    if values.ndim != 1 or values.shape[0] < 2:
        raise ValueError("need at least two battlefield values")
    if np.any(values <= 0) or not np.all(np.isfinite(values)):
        raise ValueError("battlefield values must be positive and finite")
    return values / values.sum()


def random_values(n: int, rng: np.random.Generator, high: float = 8.0) -> np.ndarray:
    """Random battlefield values drawn uniformly from (0, high], normalized."""
    raw = rng.uniform(0.0, high, size=n)
    while np.any(raw <= 0):  # uniform draws of exactly 0 are measure-zero but cheap to guard
        raw = rng.uniform(0.0, high, size=n)
    return normalize_values(raw)


def extreme_strong_values(n: int, epsilon: float, hidden: int) -> np.ndarray:
    """Values with one high-value hidden battlefield (1 - eps) and n-1 blocked
    battlefields worth eps/(n-1) each."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie strictly between 0 and 1")
    if not 0 <= hidden < n:
        raise ValueError(f"hidden battlefield index must be in [0, {n - 1}]")
    values = np.full(n, epsilon / (n - 1))
    values[hidden] = 1.0 - epsilon
    return values


def extreme_strong_budget(m: int, n: int) -> int:
    """Troop budget the extreme-strong adversary needs: (n-1)(m+1) + (m-1)."""
    return (n - 1) * (m + 1) + (m - 1)


@dataclass(frozen=True)
class ExtremeStrong:
    """Deterministic adversary blocking every battlefield but one.

    Puts m+1 troops on each of the n-1 blocked battlefields (unbeatable) and
    m-1 on the hidden one, so only the learner's all-in allocation wins it.
    """

    hidden: int
    epsilon: float = 0.1
    m_a: int | None = None  # optional, validated against the required budget

    def allocation(
        self, values: np.ndarray, m: int, stage: int, rng: np.random.Generator
    ) -> np.ndarray:
        n = values.shape[0]
        required = extreme_strong_budget(m, n)
        if self.m_a is not None and self.m_a != required:
            raise ValueError(
                f"extreme-strong adversary needs exactly {required} troops "
                f"for m={m}, n={n}; got m_a={self.m_a}"
            )
        alloc = np.full(n, m + 1, dtype=np.int64)
        alloc[self.hidden] = m - 1
        return alloc


@dataclass(frozen=True)
class UniformRandomAdversary:
    """Allocates one troop at a time to a uniformly random battlefield."""

    m_a: int

    def allocation(
        self, values: np.ndarray, m: int, stage: int, rng: np.random.Generator
    ) -> np.ndarray:
        n = values.shape[0]
        return rng.multinomial(self.m_a, np.full(n, 1.0 / n)).astype(np.int64)


@dataclass(frozen=True)
class BattlefieldWiseAdversary:
    """Allocates one troop at a time to battlefield i with probability b_i."""

    m_a: int

    def allocation(
        self, values: np.ndarray, m: int, stage: int, rng: np.random.Generator
    ) -> np.ndarray:
        return rng.multinomial(self.m_a, values / values.sum()).astype(np.int64)


@dataclass(frozen=True)
class FixedSequenceAdversary:
    """Plays a prescribed allocation sequence, cycling past the end."""

    allocations: tuple[tuple[int, ...], ...]

    def allocation(
        self, values: np.ndarray, m: int, stage: int, rng: np.random.Generator
    ) -> np.ndarray:
        return np.asarray(self.allocations[stage % len(self.allocations)], dtype=np.int64)


AdversaryModel = (
    ExtremeStrong | UniformRandomAdversary | BattlefieldWiseAdversary | FixedSequenceAdversary
)


def adversary_allocations(
    models: Sequence[AdversaryModel],
    values: np.ndarray,
    m: int,
    stage: int,
    rng: np.random.Generator,
) -> list[np.ndarray]:
    """One allocation per adversary for the given stage."""
    return [model.allocation(values, m, stage, rng) for model in models]


def battlefield_loss(
    learner_troops: int,
    adversary_troops: Sequence[int],
    value: float,
    rule: TieRule,
) -> float:
    """Loss suffered on one battlefield: the full value when outgunned, zero on
    a strict win, and a tie share otherwise."""
    strongest = max(adversary_troops)
    if learner_troops < strongest:
        return value
    if learner_troops > strongest:
        return 0.0
    if rule is TieRule.ADVERSARY_WINS:
        return value
    tied = 1 + sum(1 for a in adversary_troops if a == strongest)
    return value * (1.0 - 1.0 / tied)


def edge_losses(
    g: LayeredGraph,
    values: np.ndarray,
    adversaries: Sequence[np.ndarray],
    rule: TieRule,
) -> np.ndarray:
    """Per-edge loss vector: the edge for (battlefield i, k troops) carries the
    battlefield loss of playing k troops there.  By construction the inner
    product with any path incidence vector equals that allocation's game loss."""
    if len(adversaries) < 1:
        raise ValueError("need at least one adversary allocation")
    table = np.empty((g.n, g.m + 1))
    for i in range(g.n):
        troops_on_i = [int(a[i]) for a in adversaries]
        for k in range(g.m + 1):
            table[i, k] = battlefield_loss(k, troops_on_i, float(values[i]), rule)
    return table[g.edge_battlefield - 1, g.edge_troops].copy()


def path_loss(losses: np.ndarray, incidence: np.ndarray) -> float:
    """Scalar loss of a path: sum of its edges' losses."""
    return float(np.dot(losses, incidence))
