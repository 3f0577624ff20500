"""Finitely summable trees: the Cayley tree of F2, l^p parameterizations and their metrics.

Trees are stored as parent arrays. Edge ``e`` joins ``parent[child[e]]`` to
``child[e]``; a :class:`TreePoint` offset is measured from the root-side end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .quantum_graph import WeightedGraph, build_graph, is_tree
from .spectrum import GeometricLengthFamily

DEPTH_CAP = 14
LETTERS = "abAB"
# compass rule: a east, b north, A west, B south
DIRECTIONS = np.array([(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)])


class TreeError(ValueError):
    pass


class TreePoint(NamedTuple):
    edge: int
    offset: float


@dataclass(frozen=True, eq=False)
class Tree:
    parent: np.ndarray         # vertex -> parent vertex (-1 at the root)
    parent_edge: np.ndarray    # vertex -> edge into it (-1 at the root)
    depth: np.ndarray          # vertex -> number of edges from the root
    child: np.ndarray          # edge -> its child vertex
    lengths: np.ndarray        # edge -> length
    root: int = 0
    positions: np.ndarray | None = None
    labels: tuple[str, ...] | None = None

    @property
    def n_vertices(self) -> int:
        return len(self.parent)

    @property
    def n_edges(self) -> int:
        return len(self.child)

    def edge_level(self, e: int) -> int:
        return int(self.depth[self.child[e]])

    def endpoints(self, e: int) -> tuple[int, int]:
        c = int(self.child[e])
        return int(self.parent[c]), c

    def vertex(self, label: str) -> int:
        if self.labels is None:
            raise TreeError("tree has no vertex labels")
        try:
            return self.labels.index(label)
        except ValueError:
            raise TreeError(f"no vertex {label!r}") from None

    def to_graph(self) -> WeightedGraph:
        return build_graph(self.n_vertices,
                           [(int(self.parent[c]), int(c), float(l)) for c, l in zip(self.child, self.lengths)])

    def edge_census(self) -> dict[int, int]:
        levels, counts = np.unique(self.depth[self.child], return_counts=True)
        return {int(k): int(v) for k, v in zip(levels, counts)}

    def vertex_point(self, w: int) -> TreePoint:
        if w == self.root:
            if self.n_edges == 0:
                raise TreeError("single-vertex tree has no points on edges")
            e = int(np.flatnonzero(self.parent[self.child] == self.root)[0])
            return TreePoint(e, 0.0)
        e = int(self.parent_edge[w])
        return TreePoint(e, float(self.lengths[e]))


def cayley_f2(depth: int, cap: int = DEPTH_CAP) -> Tree:
    """Reduced words of length <= depth over a, b, A, B; edges at level n have length 2^-n.

    Vertex ``w`` sits at sum_k 2^-k dir(w_k) in the plane, so each new edge is
    drawn at half the size of its parent edge in one of the three non-backtracking
    compass directions.
    """
    if depth < 1:
        raise TreeError("depth must be a positive integer")
    if depth > cap:
        raise TreeError(f"depth {depth} exceeds the cap {cap}")
    parent = [np.array([-1])]
    letter = [np.array([-1])]
    pos = [np.zeros((1, 2))]
    cur_letter = np.arange(4)
    cur_parent = np.zeros(4, dtype=np.int64)
    cur_pos = 0.5 * DIRECTIONS
    parent.append(cur_parent)
    letter.append(cur_letter)
    pos.append(cur_pos)
    start, count = 1, 4
    for n in range(2, depth + 1):
        ids = np.arange(start, start + count)
        # three non-backtracking letters per parent: L-1, L, L+1 (mod 4)
        new_letter = (np.repeat(cur_letter, 3) + np.tile([3, 0, 1], count)) % 4
        new_parent = np.repeat(ids, 3)
        new_pos = np.repeat(cur_pos, 3, axis=0) + 0.5**n * DIRECTIONS[new_letter]
        parent.append(new_parent)
        letter.append(new_letter)
        pos.append(new_pos)
        start += count
        count *= 3
        cur_letter, cur_pos = new_letter, new_pos
    parent_arr = np.concatenate(parent).astype(np.int64)
    letters_arr = np.concatenate(letter)
    nv = len(parent_arr)
    depth_arr = np.concatenate([np.full(len(p), k) for k, p in enumerate(parent)]).astype(np.int64)
    child = np.arange(1, nv, dtype=np.int64)
    parent_edge = np.arange(-1, nv - 1, dtype=np.int64)
    lengths = 0.5 ** depth_arr[1:].astype(float)
    labels = None
    if nv <= 200_000:
        lab = [""] * nv
        for v in range(1, nv):
            lab[v] = lab[parent_arr[v]] + LETTERS[letters_arr[v]]
        labels = tuple(lab)
    return Tree(parent_arr, parent_edge, depth_arr, child, lengths, 0, np.concatenate(pos), labels)


def tree_from_graph(g: WeightedGraph, root: int = 0) -> Tree:
    """Root a graph that is a tree. Edge ids and vertex ids are preserved."""
    if not is_tree(g):
        raise TreeError("graph is not a tree (needs connectivity and |E| = |V| - 1)")
    if not 0 <= root < g.n_vertices:
        raise TreeError(f"root {root} outside the vertex range")
    n = g.n_vertices
    parent = np.full(n, -1, dtype=np.int64)
    parent_edge = np.full(n, -1, dtype=np.int64)
    depth = np.zeros(n, dtype=np.int64)
    child = np.zeros(len(g.edges), dtype=np.int64)
    seen = np.zeros(n, dtype=bool)
    seen[root] = True
    stack = [root]
    adj = g.adjacency()
    while stack:
        x = stack.pop()
        for y, _, e in adj[x]:
            if not seen[y]:
                seen[y] = True
                parent[y], parent_edge[y], depth[y] = x, e, depth[x] + 1
                child[e] = y
                stack.append(y)
    lengths = np.array([length for _, _, length in g.edges])
    return Tree(parent, parent_edge, depth, child, lengths, root)


def graph_point_to_tree(t: Tree, g: WeightedGraph, edge: int, offset: float) -> TreePoint:
    """Convert an offset from the graph edge's first endpoint to a root-side offset."""
    u, _, length = g.edges[edge]
    return TreePoint(edge, offset if t.parent[t.child[edge]] == u else length - offset)


# --- paths and l^p coordinates ----------------------------------------------

def _check_point(t: Tree, x: TreePoint) -> None:
    if not 0 <= x.edge < t.n_edges:
        raise TreeError(f"no edge {x.edge}")
    if not -1e-15 <= x.offset <= t.lengths[x.edge] * (1 + 1e-15):
        raise TreeError(f"offset {x.offset} outside edge {x.edge}")


def _is_ancestor(t: Tree, a: int, v: int) -> bool:
    """True when ``a`` lies on the root path of ``v`` (including v itself)."""
    while t.depth[v] > t.depth[a]:
        v = t.parent[v]
    return v == a


def path_edges(t: Tree, u: int, w: int) -> list[int]:
    """Edges on the unique path from vertex u to vertex w."""
    up, down = [], []
    while t.depth[u] > t.depth[w]:
        up.append(int(t.parent_edge[u]))
        u = t.parent[u]
    while t.depth[w] > t.depth[u]:
        down.append(int(t.parent_edge[w]))
        w = t.parent[w]
    while u != w:
        up.append(int(t.parent_edge[u]))
        down.append(int(t.parent_edge[w]))
        u, w = t.parent[u], t.parent[w]
    return up + down[::-1]


@dataclass(frozen=True, eq=False)
class LpEmbedding:
    """T_u: vertex w -> sum of l(e) delta_e over the path from u to w."""

    tree: Tree
    base: int
    p: float

    def vertex_coords(self, w: int) -> dict[int, float]:
        return {e: float(self.tree.lengths[e]) for e in path_edges(self.tree, self.base, w)}

    def point_coords(self, x: TreePoint) -> dict[int, float]:
        t = self.tree
        _check_point(t, x)
        c = int(t.child[x.edge])
        length = float(t.lengths[x.edge])
        if _is_ancestor(t, c, self.base):
            near, dist = c, length - x.offset
        else:
            near, dist = int(t.parent[c]), float(x.offset)
        coords = self.vertex_coords(near)
        if dist > 0:
            coords[x.edge] = dist
        return coords

    def invert(self, coords: dict[int, float], tol: float = 1e-12) -> TreePoint:
        """T_u^{-1}: recover the tree point from its coordinates."""
        t = self.tree
        full = [e for e, c in coords.items() if abs(c - t.lengths[e]) <= tol * t.lengths[e]]
        partial = [e for e in coords if e not in full and coords[e] > tol]
        if len(partial) > 1:
            raise TreeError("coordinates are not in the image of T_u")
        # w is the far end of the full-edge path from u
        w = self.base
        remaining = set(full)
        while remaining:
            step = None
            for e in remaining:
                a, b = t.endpoints(e)
                if w in (a, b):
                    step = e
                    w = b if a == w else a
                    break
            if step is None:
                raise TreeError("full-length coordinates do not form a path from the base")
            remaining.discard(step)
        if not partial:
            return t.vertex_point(w)
        e = partial[0]
        a, b = t.endpoints(e)
        if w not in (a, b):
            raise TreeError("partial coordinate is not adjacent to the path end")
        s = coords[e]
        return TreePoint(e, s if w == a else float(t.lengths[e]) - s)


def embed_lp(t: Tree, u: int, p: float = 2.0) -> LpEmbedding:
    if p < 1:
        raise TreeError("p must be >= 1")
    if not 0 <= u < t.n_vertices:
        raise TreeError(f"no vertex {u}")
    return LpEmbedding(t, int(u), float(p))


def _diff(a: dict[int, float], b: dict[int, float]) -> np.ndarray:
    keys = a.keys() | b.keys()
    return np.array([a.get(k, 0.0) - b.get(k, 0.0) for k in keys])


def _norm(v: np.ndarray, p: float) -> float:
    if v.size == 0:
        return 0.0
    v = np.abs(v)
    if math.isinf(p):
        return float(v.max())
    m = v.max()
    if m == 0:
        return 0.0
    return float(m * np.sum((v / m) ** p) ** (1.0 / p))


def dp_distance(t: Tree, x: TreePoint, y: TreePoint, p: float = 2.0, base: int | None = None) -> float:
    """||T_u(x) - T_u(y)||_p (independent of the base vertex u)."""
    if p < 1:
        raise TreeError("p must be >= 1")
    emb = LpEmbedding(t, t.root if base is None else base, p)
    return _norm(_diff(emb.point_coords(x), emb.point_coords(y)), p)


def dinf_distance(t: Tree, x: TreePoint, y: TreePoint, base: int | None = None) -> float:
    return dp_distance(t, x, y, math.inf, base)


def tree_geodesic(t: Tree, x: TreePoint, y: TreePoint) -> float:
    """Path length, which is the l^1 distance of the parameterization."""
    return dp_distance(t, x, y, 1.0)


class RebaseReport(NamedTuple):
    max_discrepancy: float
    n_pairs: int
    ok: bool


def rebase_isometry_check(t: Tree, u: int, v: int, pairs: Sequence[tuple[TreePoint, TreePoint]],
                          p: float = 2.0, tol: float = 1e-12) -> RebaseReport:
    """Compare d_p in the u-parameterization with d_p after S_uv = T_v o T_u^{-1}."""
    if u == v:
        raise TreeError("rebase check needs two distinct vertices")
    eu, ev = embed_lp(t, u, p), embed_lp(t, v, p)
    worst = 0.0
    for x, y in pairs:
        cx, cy = eu.point_coords(x), eu.point_coords(y)
        du = _norm(_diff(cx, cy), p)
        sx, sy = ev.point_coords(eu.invert(cx)), ev.point_coords(eu.invert(cy))
        dv = _norm(_diff(sx, sy), p)
        worst = max(worst, abs(du - dv))
    return RebaseReport(worst, len(pairs), worst < tol)


def random_points(t: Tree, n: int, rng: np.random.Generator) -> list[TreePoint]:
    edges = rng.integers(0, t.n_edges, size=n)
    fracs = rng.random(n)
    return [TreePoint(int(e), float(f * t.lengths[e])) for e, f in zip(edges, fracs)]


# --- summability -----------------------------------------------------------

class SummabilityRow(NamedTuple):
    s: float
    partial_sums: tuple[float, ...]
    value: float | None
    divergent: bool


def summability_profile(fam: GeometricLengthFamily, s_values: Sequence[float],
                        levels: int = 30) -> list[SummabilityRow]:
    """Partial sums of sum_e l(e)^s by level, with the closed form when m rho^s < 1."""
    rows = []
    for s in s_values:
        if not s > 0:
            raise TreeError("s values must be positive")
        terms = [fam.count(n) * fam.length(n) ** s for n in range(1, levels + 1)]
        partial = tuple(np.cumsum(terms).tolist())
        ratio = fam.count_ratio * fam.length_ratio**s
        if ratio < 1 - 1e-12:
            value = fam.initial_count * fam.initial_length**s / (1 - ratio)
            rows.append(SummabilityRow(float(s), partial, value, False))
        else:
            rows.append(SummabilityRow(float(s), partial, None, True))
    return rows
