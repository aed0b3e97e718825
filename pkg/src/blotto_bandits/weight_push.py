"""Weight pushing: path-weight sums, exact sampling, and edge co-occurrence.

Everything here is driven by the table H(u, v) = sum over u->v paths of the
product of edge weights along the path, with H(u, u) = 1 and H(u, v) = 0
when v is unreachable from u.  The table is computed once per weight vector
by a reverse-topological recursion in O(N*E) and then supports

  * sampling a path with probability proportional to its weight product,
    one layer at a time (the step probabilities telescope exactly),
  * evaluating that path probability in closed form, and
  * assembling the E x E co-occurrence matrix M[e1, e2] = probability that a
    sampled path contains both edges.

Exponential weight updates over long horizons can push H beyond double
precision, so the table transparently switches to a log-domain
representation; ratios are exponentiated only where probabilities are formed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .layered_graph import LayeredGraph, path_edge_ids

H_OVERFLOW = 1e300


@dataclass(frozen=True)
class PushTable:
    """All-pairs path-weight sums; ``table[u, v]`` is H(u, v), or log H(u, v)
    (with -inf for unreachable pairs) when ``log_domain`` is set."""

    table: np.ndarray
    log_domain: bool


def _validate_weights(g: LayeredGraph, w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape != (g.num_edges,):
        raise ValueError(f"expected {g.num_edges} edge weights, got shape {w.shape}")
    if np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise ValueError("edge weights must be strictly positive and finite")
    return w


def _h_linear(g: LayeredGraph, w: np.ndarray) -> np.ndarray:
    N = g.num_nodes
    h = np.zeros((N, N))
    for u in range(N - 1, -1, -1):
        eids = g.out_edges[u]
        if eids.shape[0]:
            h[u] = w[eids] @ h[g.edge_head[eids]]
        h[u, u] = 1.0
    return h


def _h_log(g: LayeredGraph, log_w: np.ndarray) -> np.ndarray:
    N = g.num_nodes
    h = np.full((N, N), -np.inf)
    for u in range(N - 1, -1, -1):
        eids = g.out_edges[u]
        if eids.shape[0]:
            rows = log_w[eids][:, None] + h[g.edge_head[eids]]
            mx = np.max(rows, axis=0)
            finite = mx > -np.inf
            out = np.full(N, -np.inf)
            if np.any(finite):
                out[finite] = mx[finite] + np.log(
                    np.sum(np.exp(rows[:, finite] - mx[finite]), axis=0)
                )
            h[u] = out
        h[u, u] = 0.0
    return h


def compute_h(g: LayeredGraph, w) -> PushTable:
    """Path-weight sums H(u, v) for all node pairs.

    Falls back to the log-domain representation when any sum would exceed
    the floating-point range.
    """
    w = _validate_weights(g, w)
    h = _h_linear(g, w)
    if not np.all(np.isfinite(h)) or h.max() > H_OVERFLOW:
        return PushTable(_h_log(g, np.log(w)), log_domain=True)
    return PushTable(h, log_domain=False)


def compute_h_log(g: LayeredGraph, log_w) -> PushTable:
    """Log-domain table directly from log edge weights (for learners whose
    weights live in log space)."""
    log_w = np.asarray(log_w, dtype=float)
    if log_w.shape != (g.num_edges,):
        raise ValueError(f"expected {g.num_edges} log weights, got shape {log_w.shape}")
    if not np.all(np.isfinite(log_w)):
        raise ValueError("log edge weights must be finite")
    return PushTable(_h_log(g, log_w), log_domain=True)


def _step_probabilities(
    g: LayeredGraph, log_or_lin_w: np.ndarray, h: PushTable, u: int
) -> tuple[np.ndarray, np.ndarray]:
    """Transition probabilities over the out-edges of node u toward d."""
    eids = g.out_edges[u]
    heads = g.edge_head[eids]
    d = g.destination
    if h.log_domain:
        pr = np.exp(log_or_lin_w[eids] + h.table[heads, d] - h.table[u, d])
    else:
        pr = log_or_lin_w[eids] * h.table[heads, d] / h.table[u, d]
    return eids, pr


def _walk(g, weights_repr, h, rng) -> np.ndarray:
    incidence = np.zeros(g.num_edges)
    u = g.source
    for _ in range(g.n):
        eids, pr = _step_probabilities(g, weights_repr, h, u)
        total = pr.sum()
        k = int(np.searchsorted(np.cumsum(pr), rng.random() * total))
        k = min(k, len(eids) - 1)  # guard against roundoff at the right edge
        incidence[eids[k]] = 1.0
        u = int(g.edge_head[eids[k]])
    return incidence


def wp_sample(
    g: LayeredGraph, w, h: PushTable, rng: np.random.Generator
) -> np.ndarray:
    """Sample a path with probability prod(w_e for e on path) / H(s, d).

    Walks layer by layer from the source; each step picks a child with
    probability w_e * H(child, d) / H(node, d), so the chain product
    telescopes to the exact path probability.
    """
    w = _validate_weights(g, w)
    return _walk(g, np.log(w) if h.log_domain else w, h, rng)


def wp_sample_log(
    g: LayeredGraph, log_w, h: PushTable, rng: np.random.Generator
) -> np.ndarray:
    if not h.log_domain:
        raise ValueError("wp_sample_log needs a log-domain table")
    return _walk(g, np.asarray(log_w, dtype=float), h, rng)


def path_probability(g: LayeredGraph, w, h: PushTable, incidence) -> float:
    """Probability of a specific path under the weight-factored distribution."""
    w = _validate_weights(g, w)
    eids = path_edge_ids(g, incidence)
    d = g.destination
    if h.log_domain:
        return float(np.exp(np.sum(np.log(w[eids])) - h.table[g.source, d]))
    return float(np.prod(w[eids]) / h.table[g.source, d])


def _cooccurrence_from_parts(
    g: LayeredGraph, log_a: np.ndarray, log_b: np.ndarray, log_h: np.ndarray, log_hsd: float
) -> np.ndarray:
    """Assemble M from log-domain pieces.

    log_a[e] = log(H(s, tail_e) * w_e) and log_b[e] = log(w_e * H(head_e, d));
    the off-diagonal entry for e2 reachable after e1 multiplies in the
    connecting sum H(head_e1, tail_e2), and the transpose covers e1 after e2
    (in a DAG at most one direction is reachable, so the sum is disjoint).
    """
    d = g.destination
    with np.errstate(invalid="ignore"):
        upper = np.exp(
            log_a[:, None] + log_h[g.edge_head][:, g.edge_tail] + log_b[None, :] - log_hsd
        )
    upper = np.nan_to_num(upper, nan=0.0, posinf=0.0)
    m = upper + upper.T
    np.fill_diagonal(m, np.exp(log_a + log_h[g.edge_head, d] - log_hsd))
    return m


def cooccurrence(g: LayeredGraph, w, h: PushTable | None = None) -> np.ndarray:
    """E x E matrix whose (e1, e2) entry is the probability that a path drawn
    from the weight-factored distribution contains both edges."""
    w = _validate_weights(g, w)
    if h is None:
        h = compute_h(g, w)
    if h.log_domain:
        return cooccurrence_log(g, np.log(w), h)
    t = h.table
    s, d = g.source, g.destination
    a = t[s, g.edge_tail] * w                 # weight of reaching and taking e
    b = w * t[g.edge_head, d]                 # taking e and finishing at d
    upper = a[:, None] * t[g.edge_head][:, g.edge_tail] * b[None, :] / t[s, d]
    m = upper + upper.T
    np.fill_diagonal(m, a * t[g.edge_head, d] / t[s, d])
    return m


def cooccurrence_log(
    g: LayeredGraph, log_w, h: PushTable | None = None
) -> np.ndarray:
    """Co-occurrence matrix from log edge weights (log-domain table)."""
    log_w = np.asarray(log_w, dtype=float)
    if h is None:
        h = compute_h_log(g, log_w)
    if not h.log_domain:
        raise ValueError("cooccurrence_log needs a log-domain table")
    t = h.table
    s, d = g.source, g.destination
    log_a = t[s, g.edge_tail] + log_w
    log_b = log_w + t[g.edge_head, d]
    return _cooccurrence_from_parts(g, log_a, log_b, t, float(t[s, d]))
