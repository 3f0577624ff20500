"""Finite weighted graphs whose edges are intervals of prescribed length.

Points live on edges as ``GraphPoint(edge, offset)`` with the offset measured
from the first endpoint of the edge as it was given to :func:`build_graph`.
Distances are computed on the graph obtained by subdividing at the query
points, so two points on the same edge are handled like any other pair.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

DIST_TOL = 1e-12


class GraphError(ValueError):
    """Invalid graph data or an invalid point on a graph."""


class DisconnectedError(GraphError):
    """Raised when a quantity needs a path that does not exist."""


@dataclass(frozen=True)
class WeightedGraph:
    n_vertices: int
    edges: tuple[tuple[int, int, float], ...]
    allow_multi: bool = False
    allow_loops: bool = False
    _adj: tuple = field(default=(), repr=False, compare=False)

    @property
    def vertices(self) -> range:
        return range(self.n_vertices)

    def length(self, edge: int) -> float:
        return self.edges[edge][2]

    def adjacency(self) -> tuple[tuple[tuple[int, float, int], ...], ...]:
        """Per-vertex tuples of ``(neighbour, length, edge id)``."""
        return self._adj


class GraphPoint(NamedTuple):
    edge: int
    offset: float


class Segment(NamedTuple):
    """One leg of a path: ``forward`` means travelling from the edge's first endpoint."""

    edge: int
    forward: bool
    length: float


@dataclass(frozen=True)
class PathDesc:
    segments: tuple[Segment, ...]

    @property
    def length(self) -> float:
        return math.fsum(s.length for s in self.segments)


def build_graph(vertex_count: int, edge_list: Sequence[tuple[int, int, float]],
                allow_multi: bool = False, allow_loops: bool = False) -> WeightedGraph:
    """Validate an edge list and return an immutable graph.

    Edges keep their input order as identifiers. Self-loops and parallel
    edges are rejected unless the corresponding flag is set.
    """
    if vertex_count < 0:
        raise GraphError("vertex count must be nonnegative")
    edges = []
    seen = set()
    for i, item in enumerate(edge_list):
        if len(item) != 3:
            raise GraphError(f"edge {i}: expected (u, v, length)")
        u, v, length = item
        u, v, length = int(u), int(v), float(length)
        if not (0 <= u < vertex_count and 0 <= v < vertex_count):
            raise GraphError(f"edge {i}: endpoint outside 0..{vertex_count - 1}")
        if not (length > 0 and math.isfinite(length)):
            raise GraphError(f"edge {i}: length must be positive and finite, got {length}")
        if u == v and not allow_loops:
            raise GraphError(f"edge {i}: self-loop at vertex {u}")
        key = (min(u, v), max(u, v))
        if key in seen and not allow_multi:
            raise GraphError(f"edge {i}: duplicate edge {key}")
        seen.add(key)
        edges.append((u, v, length))
    adj: list[list[tuple[int, float, int]]] = [[] for _ in range(vertex_count)]
    for i, (u, v, length) in enumerate(edges):
        adj[u].append((v, length, i))
        if u != v:
            adj[v].append((u, length, i))
    return WeightedGraph(vertex_count, tuple(edges), allow_multi, allow_loops,
                         tuple(tuple(a) for a in adj))


def _check_point(g: WeightedGraph, p: GraphPoint) -> None:
    if not 0 <= p.edge < len(g.edges):
        raise GraphError(f"no edge {p.edge}")
    if not 0.0 <= p.offset <= g.edges[p.edge][2]:
        raise GraphError(f"offset {p.offset} outside [0, {g.edges[p.edge][2]}] on edge {p.edge}")


class Subdivision(NamedTuple):
    graph: WeightedGraph
    point_vertices: tuple[int, ...]
    # new edge id -> (original edge, offset at new u, offset at new v)
    edge_origin: tuple[tuple[int, float, float], ...]


def subdivide_at(g: WeightedGraph, pts: Sequence[GraphPoint]) -> Subdivision:
    """Insert the given points as vertices.

    Endpoint offsets map to the existing endpoint; repeated points share a
    vertex. Each split edge is replaced by consecutive pieces whose lengths
    sum to the original length.
    """
    for p in pts:
        _check_point(g, p)
    cuts: dict[int, set[float]] = {}
    for p in pts:
        length = g.edges[p.edge][2]
        if 0.0 < p.offset < length:
            cuts.setdefault(p.edge, set()).add(float(p.offset))

    n = g.n_vertices
    new_edges: list[tuple[int, int, float]] = []
    origin: list[tuple[int, float, float]] = []
    cut_vertex: dict[tuple[int, float], int] = {}
    for i, (u, v, length) in enumerate(g.edges):
        offsets = sorted(cuts.get(i, ()))
        if not offsets:
            new_edges.append((u, v, length))
            origin.append((i, 0.0, length))
            continue
        prev_vertex, prev_offset = u, 0.0
        for off in offsets:
            cut_vertex[(i, off)] = n
            new_edges.append((prev_vertex, n, off - prev_offset))
            origin.append((i, prev_offset, off))
            prev_vertex, prev_offset = n, off
            n += 1
        new_edges.append((prev_vertex, v, length - prev_offset))
        origin.append((i, prev_offset, length))

    point_vertices = []
    for p in pts:
        u, v, length = g.edges[p.edge]
        if p.offset == 0.0:
            point_vertices.append(u)
        elif p.offset == length:
            point_vertices.append(v)
        else:
            point_vertices.append(cut_vertex[(p.edge, float(p.offset))])
    sub = build_graph(n, new_edges, allow_multi=True, allow_loops=g.allow_loops)
    return Subdivision(sub, tuple(point_vertices), tuple(origin))


def single_source_distances(g: WeightedGraph, source: int) -> tuple[np.ndarray, np.ndarray]:
    """Dijkstra from one vertex; returns distances (inf if unreachable) and predecessor edges."""
    dist = np.full(g.n_vertices, math.inf)
    pred = np.full(g.n_vertices, -1, dtype=np.int64)
    dist[source] = 0.0
    adj = g.adjacency()
    heap = [(0.0, source)]
    done = np.zeros(g.n_vertices, dtype=bool)
    while heap:
        d, x = heapq.heappop(heap)
        if done[x]:
            continue
        done[x] = True
        for y, length, eid in adj[x]:
            nd = d + length
            if nd < dist[y]:
                dist[y] = nd
                pred[y] = eid
                heapq.heappush(heap, (nd, y))
    return dist, pred


def geodesic_distance(g: WeightedGraph, p: GraphPoint, q: GraphPoint,
                      return_path: bool = False):
    """Length of a shortest path from ``p`` to ``q``, ``math.inf`` if none exists.

    With ``return_path=True`` a ``(distance, PathDesc | None)`` pair is returned.
    """
    sub = subdivide_at(g, [p, q])
    sp, sq = sub.point_vertices
    dist, pred = single_source_distances(sub.graph, sp)
    d = float(dist[sq])
    if not return_path:
        return d
    if math.isinf(d):
        return d, None
    segments = []
    x = sq
    while x != sp:
        eid = int(pred[x])
        u, v, length = sub.graph.edges[eid]
        orig, lo, hi = sub.edge_origin[eid]
        # walking backwards: we arrived at x along eid
        forward = (v == x)
        segments.append(Segment(orig, forward, length))
        x = u if v == x else v
    return d, PathDesc(tuple(reversed(segments)))


def all_pairs_vertex_distances(g: WeightedGraph) -> np.ndarray:
    return np.vstack([single_source_distances(g, s)[0] for s in g.vertices])


def lipschitz_sup_distance(g: WeightedGraph, p: GraphPoint, q: GraphPoint,
                           method: str = "dual") -> float:
    """Supremum of ``f(p) - f(q)`` over functions with slope at most 1 on every edge.

    After subdividing at ``p`` and ``q`` this is the linear program

        maximize f(p) - f(q)  subject to  |f(u) - f(v)| <= length(e)  for e = (u, v).

    ``method="dual"`` solves it through its shortest-path dual and certifies
    the optimum with the feasible witness ``f = distance to q``.
    ``method="lp"`` hands the same program to a generic LP solver.
    """
    sub = subdivide_at(g, [p, q])
    sp, sq = sub.point_vertices
    if method == "dual":
        return _lp_by_duality(sub.graph, sp, sq)
    if method == "lp":
        return _lp_generic(sub.graph, sp, sq)
    raise ValueError(f"unknown method {method!r}")


def _lp_by_duality(g: WeightedGraph, sp: int, sq: int) -> float:
    f, _ = single_source_distances(g, sq)
    if math.isinf(f[sp]):
        raise DisconnectedError("points lie in different components; the supremum is unbounded")
    # restrict the witness to the component; elsewhere any constant is feasible
    comp = np.isfinite(f)
    for u, v, length in g.edges:
        if comp[u] and abs(f[u] - f[v]) > length * (1 + 1e-12) + DIST_TOL:
            raise AssertionError("distance witness violates an edge constraint")
    return float(f[sp] - f[sq])


def _lp_generic(g: WeightedGraph, sp: int, sq: int) -> float:
    from scipy.optimize import linprog

    n = g.n_vertices
    rows, rhs = [], []
    for u, v, length in g.edges:
        if u == v:
            continue
        r = np.zeros(n)
        r[u], r[v] = 1.0, -1.0
        rows.append(r)
        rhs.append(length)
        rows.append(-r)
        rhs.append(length)
    c = np.zeros(n)
    c[sp] -= 1.0
    c[sq] += 1.0
    bounds = [(None, None)] * n
    bounds[sq] = (0.0, 0.0)
    res = linprog(c, A_ub=np.array(rows) if rows else None, b_ub=np.array(rhs) if rhs else None,
                  bounds=bounds, method="highs",
                  options={"primal_feasibility_tolerance": 1e-10,
                           "dual_feasibility_tolerance": 1e-10})
    if res.status == 3:
        raise DisconnectedError("points lie in different components; the LP is unbounded")
    if res.status != 0:
        raise RuntimeError(f"LP solver failed: {res.message}")
    return float(-res.fun)


# --- edge-list files -------------------------------------------------------

def parse_edge_list(text: str, allow_multi: bool = False, allow_loops: bool = False) -> WeightedGraph:
    """Parse the edge-list format.

    Grammar, one item per line::

        # comment            (ignored, as are blank lines)
        vertices N           (exactly once, before any edge)
        u v length           (integers u, v in 0..N-1; positive real length)
    """
    n = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if tokens[0] == "vertices":
            if n is not None:
                raise GraphError(f"line {lineno}: duplicate 'vertices' header")
            if len(tokens) != 2:
                raise GraphError(f"line {lineno}: expected 'vertices N'")
            try:
                n = int(tokens[1])
            except ValueError:
                raise GraphError(f"line {lineno}: vertex count is not an integer") from None
            continue
        if n is None:
            raise GraphError(f"line {lineno}: edge before 'vertices' header")
        if len(tokens) != 3:
            raise GraphError(f"line {lineno}: expected 'u v length', got {len(tokens)} tokens")
        try:
            u, v, length = int(tokens[0]), int(tokens[1]), float(tokens[2])
        except ValueError:
            raise GraphError(f"line {lineno}: malformed edge {line!r}") from None
        edges.append((u, v, length))
    if n is None:
        raise GraphError("missing 'vertices N' header")
    try:
        return build_graph(n, edges, allow_multi=allow_multi, allow_loops=allow_loops)
    except GraphError as exc:
        raise GraphError(f"invalid graph: {exc}") from None


def load_graph_file(path: str | Path, **kwargs) -> WeightedGraph:
    return parse_edge_list(Path(path).read_text(encoding="utf-8"), **kwargs)


def is_tree(g: WeightedGraph) -> bool:
    """True when the graph is connected and has exactly one path between any two vertices."""
    if g.n_vertices == 0 or len(g.edges) != g.n_vertices - 1:
        return False
    dist, _ = single_source_distances(g, 0)
    return bool(np.all(np.isfinite(dist)))


def random_connected_graph(n_vertices: int, rng: np.random.Generator, extra_edges: int | None = None,
                           length_range: tuple[float, float] = (0.1, 2.0)) -> WeightedGraph:
    """Random spanning tree plus random extra edges, with uniform random lengths."""
    if n_vertices < 2:
        raise GraphError("need at least two vertices")
    order = rng.permutation(n_vertices)
    edges = {}
    for k in range(1, n_vertices):
        u, v = int(order[k]), int(order[rng.integers(0, k)])
        edges[(min(u, v), max(u, v))] = None
    max_extra = n_vertices * (n_vertices - 1) // 2 - len(edges)
    if extra_edges is None:
        extra_edges = int(rng.integers(0, max_extra + 1))
    candidates = [(u, v) for u in range(n_vertices) for v in range(u + 1, n_vertices) if (u, v) not in edges]
    for i in rng.permutation(len(candidates))[:extra_edges]:
        edges[candidates[i]] = None
    lo, hi = length_range
    return build_graph(n_vertices, [(u, v, float(rng.uniform(lo, hi))) for u, v in edges])


def random_point(g: WeightedGraph, rng: np.random.Generator) -> GraphPoint:
    e = int(rng.integers(0, len(g.edges)))
    return GraphPoint(e, float(rng.uniform(0.0, g.edges[e][2])))
