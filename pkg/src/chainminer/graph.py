"""Vertex-labeled graphs, degree/density statistics, and maximal clique
enumeration.

Graphs are immutable after construction and safe to share across threads.
Undirected edges are stored once as an unordered pair but all density
bookkeeping is done over ordered pairs, so the directed formulas apply
verbatim (an undirected edge contributes both orientations).
"""
from __future__ import annotations

from dataclasses import dataclass, field

__all__ = [
    "Graph",
    "VertexSet",
    "CliquePattern",
    "ChainPattern",
    "GraphError",
    "vertex_set",
    "build_graph",
    "normalized_degree",
    "subgraph_density",
    "enumerate_maximal_cliques",
    "parse_edge_list",
    "format_edge_list",
    "to_dot",
]

# A vertex set is a sorted tuple of vertex indices.
VertexSet = tuple[int, ...]


class GraphError(ValueError):
    """Invalid graph construction or query."""


def vertex_set(members) -> VertexSet:
    """Normalize an iterable of vertex indices into a sorted, deduplicated tuple."""
    return tuple(sorted(set(members)))


class Graph:
    """A vertex-labeled graph, directed or undirected.

    Adjacency is queryable both ways. For undirected graphs an edge is a
    single unordered pair; ``has_edge(u, v)`` and ``has_edge(v, u)`` agree.
    """

    __slots__ = ("labels", "directed", "allow_self_loops", "edges", "_index",
                 "_out", "_in")

    def __init__(self, labels, edges, directed, allow_self_loops=False):
        labels = tuple(labels)
        if len(set(labels)) != len(labels):
            dupes = sorted({l for l in labels if labels.count(l) > 1})
            raise GraphError(f"duplicate vertex labels: {dupes}")
        self.labels = labels
        self.directed = bool(directed)
        self.allow_self_loops = bool(allow_self_loops)
        self._index = {label: i for i, label in enumerate(labels)}

        n = len(labels)
        canonical = set()
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge endpoint out of range: ({u}, {v})")
            if u == v and not self.allow_self_loops:
                raise GraphError(f"self-loop on vertex {u} ({labels[u]!r}) not allowed")
            canonical.add((u, v) if self.directed else (min(u, v), max(u, v)))
        self.edges = frozenset(canonical)

        out = [set() for _ in range(n)]
        inc = [set() for _ in range(n)]
        for u, v in self.edges:
            out[u].add(v)
            inc[v].add(u)
            if not self.directed and u != v:
                out[v].add(u)
                inc[u].add(v)
        self._out = tuple(frozenset(s) for s in out)
        self._in = tuple(frozenset(s) for s in inc)

    @property
    def n(self) -> int:
        return len(self.labels)

    def index_of(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise GraphError(f"unknown vertex label {label!r}") from None

    def has_edge(self, u: int, v: int) -> bool:
        if self.directed:
            return (u, v) in self.edges
        return (min(u, v), max(u, v)) in self.edges

    def neighbors(self, v: int, direction: str = "undirected") -> frozenset:
        self._check_direction(direction)
        if direction == "in":
            return self._in[v]
        return self._out[v]

    def _check_direction(self, direction: str) -> None:
        if self.directed and direction not in ("in", "out"):
            raise GraphError(f"direction {direction!r} invalid for a directed graph")
        if not self.directed and direction != "undirected":
            raise GraphError(f"direction {direction!r} invalid for an undirected graph")

    def symmetric_adjacency(self) -> tuple[frozenset, ...]:
        """Neighbor sets with edge direction ignored and self-loops dropped."""
        adj = [set() for _ in range(self.n)]
        for u, v in self.edges:
            if u == v:
                continue
            adj[u].add(v)
            adj[v].add(u)
        return tuple(frozenset(s) for s in adj)

    def __repr__(self) -> str:
        kind = "directed" if self.directed else "undirected"
        return f"Graph({kind}, n={self.n}, edges={len(self.edges)})"


@dataclass
class CliquePattern:
    """A maximal clique with an optional cached interestingness score.

    ``score_epoch`` records the background-model version the cached score was
    computed against; a smaller value than the current model epoch means the
    score is stale.
    """

    id: int
    vertices: VertexSet
    score: float | None = None
    score_epoch: int = -1

    def labels(self, g: Graph) -> tuple[str, ...]:
        return tuple(g.labels[v] for v in self.vertices)


@dataclass
class ChainPattern:
    """An ordered tuple of cliques where every adjacent pair overlaps.

    ``connectors[i]`` holds the shared vertices between ``cliques[i]`` and
    ``cliques[i + 1]``; it is never empty.
    """

    cliques: list[int] = field(default_factory=list)
    connectors: list[VertexSet] = field(default_factory=list)

    def __post_init__(self):
        if len(self.cliques) != len(set(self.cliques)):
            raise GraphError("a clique id appears twice in the chain")
        if self.cliques and len(self.connectors) != len(self.cliques) - 1:
            raise GraphError("chain needs exactly one connector per adjacent pair")
        if any(not c for c in self.connectors):
            raise GraphError("adjacent cliques in a chain must share at least one vertex")

    def __len__(self) -> int:
        return len(self.cliques)


def build_graph(labels, edges, directed: bool, allow_self_loops: bool = False) -> Graph:
    """Construct a graph from labels and label pairs.

    Edges are deduplicated; for undirected graphs (a, b) and (b, a) denote the
    same element. Raises :class:`GraphError` on duplicate labels, unknown
    endpoints, or self-loops when disallowed.
    """
    labels = list(labels)
    index = {}
    for i, label in enumerate(labels):
        if label in index:
            raise GraphError(f"duplicate vertex label {label!r}")
        index[label] = i
    index_edges = []
    for a, b in edges:
        if a not in index:
            raise GraphError(f"edge endpoint {a!r} is not a declared vertex")
        if b not in index:
            raise GraphError(f"edge endpoint {b!r} is not a declared vertex")
        index_edges.append((index[a], index[b]))
    return Graph(labels, index_edges, directed, allow_self_loops)


def normalized_degree(g: Graph, v: int, direction: str) -> float:
    """Degree of ``v`` in the given direction divided by the vertex count."""
    if not 0 <= v < g.n:
        raise GraphError(f"vertex index {v} out of range")
    return len(g.neighbors(v, direction)) / g.n


def subgraph_density(g: Graph, s) -> float:
    """Ordered-pair edge count inside ``s`` divided by ``|s|**2``.

    For undirected graphs each undirected edge inside ``s`` counts as two
    ordered pairs (a self-loop, when allowed, counts once).
    """
    s = vertex_set(s)
    if not s:
        raise GraphError("subgraph density of an empty vertex set is undefined")
    for v in s:
        if not 0 <= v < g.n:
            raise GraphError(f"vertex index {v} out of range")
    members = set(s)
    count = 0
    if g.directed:
        for u in s:
            count += len(g._out[u] & members)
    else:
        for u, v in g.edges:
            if u in members and v in members:
                count += 1 if u == v else 2
    return count / len(s) ** 2


def _degeneracy_order(adj) -> list[int]:
    """Order vertices by repeatedly removing a minimum-degree vertex.

    Bucket queue implementation; ties broken by vertex index for determinism.
    """
    n = len(adj)
    degree = [len(adj[v]) for v in range(n)]
    buckets = [set() for _ in range(n)]
    for v in range(n):
        buckets[degree[v]].add(v)
    removed = [False] * n
    order = []
    d = 0
    while len(order) < n:
        while d < n and not buckets[d]:
            d += 1
        v = min(buckets[d])
        buckets[d].remove(v)
        removed[v] = True
        order.append(v)
        for u in adj[v]:
            if not removed[u]:
                buckets[degree[u]].remove(u)
                degree[u] -= 1
                buckets[degree[u]].add(u)
        d = max(d - 1, 0)
    return order


def _bron_kerbosch_pivot(adj, r, p, x, out):
    if not p and not x:
        out.append(frozenset(r))
        return
    pivot = max(p | x, key=lambda u: len(p & adj[u]))
    for v in sorted(p - adj[pivot]):
        _bron_kerbosch_pivot(adj, r | {v}, p & adj[v], x & adj[v], out)
        p.remove(v)
        x.add(v)


def enumerate_maximal_cliques(g: Graph, min_size: int = 3) -> list[CliquePattern]:
    """All maximal cliques of size >= ``min_size``, with stable ids.

    Directed graphs are symmetrized first: an edge in either direction counts
    as adjacency. Ids are assigned after sorting cliques by their sorted
    vertex-label sequences, which makes runs reproducible regardless of
    enumeration order. Scores are left unset.
    """
    adj = g.symmetric_adjacency()
    order = _degeneracy_order(adj)
    pos = {v: i for i, v in enumerate(order)}
    found: list[frozenset] = []
    for v in order:
        later = {u for u in adj[v] if pos[u] > pos[v]}
        earlier = {u for u in adj[v] if pos[u] < pos[v]}
        _bron_kerbosch_pivot(adj, {v}, later, earlier, found)
    keep = [vertex_set(c) for c in found if len(c) >= min_size]
    keep.sort(key=lambda vs: tuple(sorted(g.labels[v] for v in vs)))
    return [CliquePattern(id=i, vertices=vs) for i, vs in enumerate(keep)]


def parse_edge_list(text: str, directed: bool = False) -> Graph:
    """Parse the tab-separated edge-list exchange format.

    One ``label<TAB>label`` line per edge; labels are verbatim UTF-8 strings.
    Vertices appear in first-encounter order.
    """
    labels: list[str] = []
    seen: dict[str, int] = {}
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise GraphError(f"line {lineno}: expected two tab-separated labels")
        pair = []
        for label in parts:
            if label not in seen:
                seen[label] = len(labels)
                labels.append(label)
            pair.append(seen[label])
        edges.append(tuple(pair))
    return Graph(labels, edges, directed)


def format_edge_list(g: Graph) -> str:
    """Render a graph in the edge-list exchange format, sorted for determinism.

    Isolated vertices have no representation in this format.
    """
    lines = []
    for u, v in g.edges:
        a, b = g.labels[u], g.labels[v]
        if not g.directed and b < a:
            a, b = b, a
        lines.append(f"{a}\t{b}")
    lines.sort()
    return "\n".join(lines) + ("\n" if lines else "")


def _dot_quote(label: str) -> str:
    return '"' + label.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(g: Graph, name: str = "g") -> str:
    """Render the graph in DOT for external graph viewers."""
    kind, arrow = ("digraph", "->") if g.directed else ("graph", "--")
    lines = [f"{kind} {name} {{"]
    for label in sorted(g.labels):
        lines.append(f"  {_dot_quote(label)};")
    edge_lines = []
    for u, v in g.edges:
        a, b = g.labels[u], g.labels[v]
        if not g.directed and b < a:
            a, b = b, a
        edge_lines.append(f"  {_dot_quote(a)} {arrow} {_dot_quote(b)};")
    lines.extend(sorted(edge_lines))
    lines.append("}")
    return "\n".join(lines) + "\n"
