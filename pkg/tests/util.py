"""Shared test helpers: graph builders and independent oracles.

The oracles here deliberately avoid the library's own code paths: brute-force
subset enumeration for cliques, direct sampling for expectations, and
projected-gradient entropy maximization for fitted marginals.
"""
from __future__ import annotations

import numpy as np

from chainminer.graph import Graph
from chainminer.maxent import EdgeProbabilityModel


def index_graph(n: int, edges, directed: bool = False) -> Graph:
    """Graph over n vertices labeled v000..v{n-1} (zero-padded so label order
    equals index order)."""
    return Graph([f"v{i:03d}" for i in range(n)], edges, directed)


def random_graph(n: int, p: float, rng, directed: bool = False) -> Graph:
    edges = []
    if directed:
        for u in range(n):
            for v in range(n):
                if u != v and rng.random() < p:
                    edges.append((u, v))
    else:
        for u in range(n):
            for v in range(u + 1, n):
                if rng.random() < p:
                    edges.append((u, v))
    return index_graph(n, edges, directed)


def brute_force_maximal_cliques(g: Graph, min_size: int) -> set[tuple[int, ...]]:
    """Enumerate maximal cliques by checking every vertex subset (n <= ~14).

    Uses adjacency bitmasks: S is a clique iff every member is adjacent to all
    other members, and maximal iff no outside vertex is adjacent to all of S.
    """
    n = g.n
    adj = [0] * n
    for u, v in g.edges:
        if u == v:
            continue
        adj[u] |= 1 << v
        adj[v] |= 1 << u
    result = set()
    for mask in range(1, 1 << n):
        members = [v for v in range(n) if mask >> v & 1]
        if len(members) < min_size:
            continue
        if any(mask & ~adj[v] & ~(1 << v) for v in members):
            continue
        if any(mask & adj[u] == mask for u in range(n) if not mask >> u & 1):
            continue
        result.add(tuple(members))
    return result


def sample_graphs_mean(m: EdgeProbabilityModel, stat, n_samples: int, seed: int):
    """Monte-Carlo mean and standard error of ``stat(edge_matrix)``.

    Samples each edge variable independently; undirected models sample the
    upper triangle and mirror it.
    """
    rng = np.random.default_rng(seed)
    n = m.n
    values = np.empty(n_samples)
    for i in range(n_samples):
        u = rng.random((n, n))
        present = (u < m.probs).astype(float)
        if not m.directed:
            upper = np.triu(present, k=1)
            present = upper + upper.T
        np.fill_diagonal(present, 0.0)
        values[i] = stat(present)
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(n_samples))


def projected_gradient_maxent(
    A: np.ndarray,
    b: np.ndarray,
    n_vars: int,
    step: float = 0.05,
    iters: int = 30000,
    tol: float = 1e-12,
) -> np.ndarray:
    """Maximize sum of Bernoulli entropies subject to A p = b, 0 <= p <= 1.

    Projected gradient ascent with a decaying step. The projection onto the
    polytope (affine set intersected with the box) is computed by alternating
    projections, which matters when the constraints force components onto the
    box boundary. Independent of the iterative-scaling path.
    """
    gram_pinv = np.linalg.pinv(A @ A.T)

    def affine(v):
        return v - A.T @ (gram_pinv @ (A @ v - b))

    def onto_polytope(v):
        for _ in range(300):
            w = np.clip(affine(v), 1e-12, 1 - 1e-12)
            if np.max(np.abs(w - v)) < 1e-14:
                return w
            v = w
        return v

    p = onto_polytope(np.full(n_vars, 0.5))
    for k in range(iters):
        q = np.clip(p, 1e-9, 1 - 1e-9)  # bound the entropy gradient
        grad = np.log((1.0 - q) / q)
        eta = step / (1.0 + k / 2000.0)
        p_next = onto_polytope(p + eta * grad)
        if np.max(np.abs(p_next - p)) < tol:
            p = p_next
            break
        p = p_next
    return p


PLANTED_CLIQUES = [
    (0, 1, 2, 3),
    (3, 4, 5, 6),
    (6, 7, 8, 9),
    (9, 10, 11, 12),
    (12, 13, 14, 15),
]


def planted_chain_graph(seed: int, n: int = 60, noise: float = 0.03) -> Graph:
    """Five 4-cliques overlapping in a path (one shared vertex per adjacent
    pair) embedded in sparse random noise over n vertices."""
    rng = np.random.default_rng(seed)
    edges = set()
    for clique in PLANTED_CLIQUES:
        for i, u in enumerate(clique):
            for v in clique[i + 1:]:
                edges.add((u, v))
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < noise:
                edges.add((u, v))
    return index_graph(n, sorted(edges))


def degree_density_system(g: Graph, density_sets=()):
    """Linear system A p = b over the canonical directed pair order whose
    solution set is exactly the degree (+ optional density) constraints."""
    n = g.n
    pairs = [(u, v) for u in range(n) for v in range(n) if u != v]
    col = {pair: i for i, pair in enumerate(pairs)}
    rows = []
    rhs = []
    for v in range(n):
        row = np.zeros(len(pairs))
        for u in range(n):
            if u != v:
                row[col[(v, u)]] = 1.0 / n
        rows.append(row)
        rhs.append(len(g.neighbors(v, "out")) / n)
        row = np.zeros(len(pairs))
        for u in range(n):
            if u != v:
                row[col[(u, v)]] = 1.0 / n
        rows.append(row)
        rhs.append(len(g.neighbors(v, "in")) / n)
    for s in density_sets:
        row = np.zeros(len(pairs))
        k = len(s)
        for u in s:
            for v in s:
                if u != v:
                    row[col[(u, v)]] = 1.0 / k**2
        rows.append(row)
        count = sum(1 for u in s for v in s if u != v and g.has_edge(u, v))
        rhs.append(count / k**2)
    return np.array(rows), np.array(rhs), pairs
