"""Layered DAG whose source-to-destination paths encode troop allocations.

For a budget of ``m`` troops over ``n`` battlefields, the graph has n+1 node
layers: a single source (0, 0), interior layers i = 1..n-1 each holding the
m+1 nodes (i, 0)..(i, m), and a single destination (n, m).  A node (i, j)
means "j troops spent after battlefield i"; the edge (i, j1) -> (i+1, j2)
allocates j2 - j1 troops to battlefield i+1.  Every s->d path therefore has
exactly n edges and corresponds to exactly one allocation summing to m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

DEFAULT_ENUMERATION_CAP = 10**6


class EnumerationCapError(RuntimeError):
    """Raised when explicit path enumeration would exceed the configured cap."""


@dataclass(frozen=True)
class LayeredGraph:
    """Immutable layered graph for budget m over n battlefields.

    Nodes are indexed in topological order (layer-major, troops ascending);
    index 0 is the source, index N-1 the destination.  Edges are indexed
    layer-major, then lexicographically by (tail troops, head troops), so
    matrices and CSV output built on edge indices are reproducible.
    """

    m: int
    n: int
    nodes: tuple[tuple[int, int], ...]          # (layer, troops_used)
    edge_tail: np.ndarray                        # node index, shape (E,)
    edge_head: np.ndarray
    edge_battlefield: np.ndarray                 # 1-based battlefield, shape (E,)
    edge_troops: np.ndarray                      # troops put on that battlefield
    out_edges: tuple[np.ndarray, ...]            # edge ids per node, head troops ascending
    node_index: dict[tuple[int, int], int] = field(repr=False)
    edge_index: dict[tuple[int, int], int] = field(repr=False)  # (tail, head) -> edge id

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_edges(self) -> int:
        return int(self.edge_tail.shape[0])

    @property
    def source(self) -> int:
        return 0

    @property
    def destination(self) -> int:
        return len(self.nodes) - 1

    def path_count(self) -> int:
        """Number of s->d paths, exact (big integer)."""
        return math.comb(self.n + self.m - 1, self.n - 1)


def node_count(m: int, n: int) -> int:
    return 2 + (m + 1) * (n - 1)


def edge_count(m: int, n: int) -> int:
    return (m + 1) * (4 + (n - 2) * (m + 2)) // 2


def build_graph(m: int, n: int) -> LayeredGraph:
    """Construct the layered graph for m troops over n battlefields."""
    if m < 1:
        raise ValueError(f"troop budget must be >= 1, got {m}")
    if n < 2:
        raise ValueError(f"battlefield count must be >= 2, got {n}")

    nodes: list[tuple[int, int]] = [(0, 0)]
    for layer in range(1, n):
        nodes.extend((layer, j) for j in range(m + 1))
    nodes.append((n, m))
    node_index = {node: i for i, node in enumerate(nodes)}

    tails: list[int] = []
    heads: list[int] = []
    fields: list[int] = []
    troops: list[int] = []

    def add(tail: tuple[int, int], head: tuple[int, int]) -> None:
        tails.append(node_index[tail])
        heads.append(node_index[head])
        fields.append(head[0])
        troops.append(head[1] - tail[1])

    for j in range(m + 1):
        add((0, 0), (1, j))
    for layer in range(1, n - 1):
        for j1 in range(m + 1):
            for j2 in range(j1, m + 1):
                add((layer, j1), (layer + 1, j2))
    for j in range(m + 1):
        add((n - 1, j), (n, m))

    edge_tail = np.asarray(tails, dtype=np.int64)
    edge_head = np.asarray(heads, dtype=np.int64)
    edge_battlefield = np.asarray(fields, dtype=np.int64)
    edge_troops = np.asarray(troops, dtype=np.int64)

    out: list[list[int]] = [[] for _ in nodes]
    for eid in range(edge_tail.shape[0]):
        out[edge_tail[eid]].append(eid)
    # build order already yields head troops ascending within each node
    out_edges = tuple(np.asarray(eids, dtype=np.int64) for eids in out)
    edge_index = {
        (int(edge_tail[e]), int(edge_head[e])): e for e in range(edge_tail.shape[0])
    }

    for arr in (edge_tail, edge_head, edge_battlefield, edge_troops):
        arr.setflags(write=False)

    g = LayeredGraph(
        m=m,
        n=n,
        nodes=tuple(nodes),
        edge_tail=edge_tail,
        edge_head=edge_head,
        edge_battlefield=edge_battlefield,
        edge_troops=edge_troops,
        out_edges=out_edges,
        node_index=node_index,
        edge_index=edge_index,
    )
    assert g.num_nodes == node_count(m, n)
    assert g.num_edges == edge_count(m, n)
    return g


def allocation_to_path(g: LayeredGraph, allocation: Sequence[int]) -> np.ndarray:
    """Map an allocation (p_1..p_n summing to m) to its 0/1 edge-incidence vector."""
    alloc = np.asarray(allocation)
    if alloc.shape != (g.n,):
        raise ValueError(f"allocation must have length {g.n}, got shape {alloc.shape}")
    if np.any(alloc != np.floor(alloc)) or np.any(alloc < 0):
        raise ValueError("allocation entries must be nonnegative integers")
    if int(alloc.sum()) != g.m:
        raise ValueError(f"allocation must sum to the budget {g.m}, got {int(alloc.sum())}")

    incidence = np.zeros(g.num_edges)
    used = 0
    node = g.source
    for i in range(g.n):
        used += int(alloc[i])
        nxt = g.node_index[(i + 1, used) if i + 1 < g.n else (g.n, g.m)]
        incidence[g.edge_index[(node, nxt)]] = 1.0
        node = nxt
    return incidence


def path_nodes(g: LayeredGraph, incidence: np.ndarray) -> list[int]:
    """Node sequence s..d of a path given as an incidence vector; validates shape."""
    p = np.asarray(incidence)
    if p.shape != (g.num_edges,):
        raise ValueError(f"incidence vector must have length {g.num_edges}")
    if not np.all((p == 0) | (p == 1)):
        raise ValueError("incidence entries must be 0 or 1")
    chosen = set(np.flatnonzero(p).tolist())
    if len(chosen) != g.n:
        raise ValueError(f"a path has exactly {g.n} edges, got {len(chosen)} set bits")
    seq = [g.source]
    node = g.source
    for _ in range(g.n):
        nxt = [e for e in g.out_edges[node] if e in chosen]
        if len(nxt) != 1:
            raise ValueError("set bits do not form a connected source-to-destination path")
        node = int(g.edge_head[nxt[0]])
        seq.append(node)
    if node != g.destination:
        raise ValueError("path does not end at the destination")
    return seq


def path_edge_ids(g: LayeredGraph, incidence: np.ndarray) -> np.ndarray:
    """Edge ids of a path in battlefield order; validates connectivity."""
    seq = path_nodes(g, incidence)
    return np.asarray(
        [g.edge_index[(seq[i], seq[i + 1])] for i in range(g.n)], dtype=np.int64
    )


def path_to_allocation(g: LayeredGraph, incidence: np.ndarray) -> np.ndarray:
    """Inverse of allocation_to_path: troops per battlefield along the path."""
    eids = path_edge_ids(g, incidence)
    return g.edge_troops[eids].copy()


def iter_allocations(m: int, n: int) -> Iterator[tuple[int, ...]]:
    """All length-n compositions of m, lexicographically ascending."""
    if n == 1:
        yield (m,)
        return
    for first in range(m + 1):
        for rest in iter_allocations(m - first, n - 1):
            yield (first,) + rest


def enumerate_paths(
    g: LayeredGraph, cap: int = DEFAULT_ENUMERATION_CAP
) -> np.ndarray:
    """All s->d paths as a (P, E) incidence matrix, in allocation order.

    Refuses instances whose path count exceeds ``cap``; large instances should
    use the edge-weight machinery instead of explicit enumeration.
    """
    count = g.path_count()
    if count > cap:
        raise EnumerationCapError(
            f"{count} paths exceed the enumeration cap {cap}; "
            "use the edge-weight machinery for instances this large"
        )
    paths = np.zeros((count, g.num_edges))
    for i, alloc in enumerate(iter_allocations(g.m, g.n)):
        paths[i] = allocation_to_path(g, alloc)
    return paths


def min_cost_path(
    g: LayeredGraph, edge_costs: np.ndarray
) -> tuple[np.ndarray, float]:
    """Cheapest s->d path under additive per-edge costs, by backward DP.

    Ties are broken toward the lexicographically smallest allocation, which
    makes the hindsight oracle deterministic.
    """
    costs = np.asarray(edge_costs, dtype=float)
    if costs.shape != (g.num_edges,):
        raise ValueError(f"edge costs must have length {g.num_edges}")
    if not np.all(np.isfinite(costs)):
        raise ValueError("edge costs must be finite")

    best = np.full(g.num_nodes, np.inf)
    best[g.destination] = 0.0
    for u in range(g.num_nodes - 2, -1, -1):
        eids = g.out_edges[u]
        best[u] = np.min(costs[eids] + best[g.edge_head[eids]])

    incidence = np.zeros(g.num_edges)
    node = g.source
    total = 0.0
    for _ in range(g.n):
        eids = g.out_edges[node]
        through = costs[eids] + best[g.edge_head[eids]]
        # out-edges are ordered by head troops ascending, so argmin picks the
        # smallest allocation for this battlefield among exact ties
        k = int(np.argmin(through))
        eid = int(eids[k])
        incidence[eid] = 1.0
        total += float(costs[eid])
        node = int(g.edge_head[eid])
    return incidence, total
