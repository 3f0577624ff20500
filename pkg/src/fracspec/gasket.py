"""Sierpinski gasket of side length 2 pi / 3.

The base triangle has corners v1 = (0, 0), v2 = (2 pi/3, 0), v3 = (pi/3, pi/sqrt 3)
and the contractions are F_i(p) = (p + v_i) / 2. A cell address is a word over
{0, 1, 2}; letter i selects F_{i+1}. Cell enumeration works on an integer
lattice (units of the level-m side along v1v2 and v1v3), so vertex sets are
deduplicated exactly.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .quantum_graph import WeightedGraph, build_graph

SIDE = 2 * math.pi / 3
HEIGHT = math.pi / math.sqrt(3)
VERTICES = np.array([(0.0, 0.0), (SIDE, 0.0), (SIDE / 2, HEIGHT)])
LATTICE = np.array([(0, 0), (1, 0), (0, 1)], dtype=np.int64)
GRAPH_LEVEL_CAP = 12
MEMBERSHIP_DEPTH = 48
MEMBERSHIP_TOL = 1e-9
PlaneFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]


class GasketError(ValueError):
    pass


# --- addressing and coordinates ---------------------------------------------

def _check_word(word: str | Sequence[int]) -> tuple[int, ...]:
    letters = tuple(int(c) for c in word) if isinstance(word, str) else tuple(int(c) for c in word)
    for c in letters:
        if c not in (0, 1, 2):
            raise GasketError(f"invalid address letter {c!r}; letters are 0, 1, 2")
    return letters


def triangle_vertices(word: str | Sequence[int] = ()) -> np.ndarray:
    """Corners (images of v1, v2, v3) of the cell with the given address, as a 3x2 array."""
    letters = _check_word(word)
    pts = VERTICES.copy()
    for i in reversed(letters):
        pts = (pts + VERTICES[i]) / 2
    return pts


def parameterize(word: str | Sequence[int], t: float) -> np.ndarray:
    """Arclength parameterization of a cell perimeter.

    ``t = 0`` is the lower right-hand corner (image of v2) and increasing ``t``
    runs counterclockwise, so one side length reaches the image of v3 and
    minus one side length reaches the image of v1. The domain is
    ``[-2^-n pi, 2^-n pi]``, one full period.
    """
    letters = _check_word(word)
    n = len(letters)
    half = math.pi * 2.0**-n
    if not -half * (1 + 1e-12) <= t <= half * (1 + 1e-12):
        raise GasketError(f"t = {t} outside [-{half}, {half}]")
    corners = triangle_vertices(letters)
    h = SIDE * 2.0**-n
    s = (t % (3 * h)) / h
    order = (1, 2, 0)  # v2 -> v3 -> v1 -> v2
    k = min(int(s), 2)
    frac = s - k
    a, b = corners[order[k]], corners[order[(k + 1) % 3]]
    return (1 - frac) * a + frac * b


_BARY = np.linalg.inv(np.vstack([VERTICES.T, np.ones(3)]))


def barycentric(p: Sequence[float], tol: float = 1e-9) -> np.ndarray:
    """Barycentric coordinates (x, y, z) of p with respect to v1, v2, v3."""
    lam = _BARY @ np.array([p[0], p[1], 1.0])
    if np.any(lam < -tol):
        raise GasketError(f"point {tuple(p)} lies outside the base triangle")
    return lam


def on_gasket(p: Sequence[float], tol: float = MEMBERSHIP_TOL) -> bool:
    """Membership by inverse contractions: a point is kept while it stays in a cell."""
    lam = _BARY @ np.array([p[0], p[1], 1.0])
    btol = tol / HEIGHT  # barycentric tolerance for an absolute distance at the base level
    for _ in range(MEMBERSHIP_DEPTH):
        if np.any(lam < -btol):
            return False
        if np.min(lam) <= btol:
            return True  # on a cell side
        i = int(np.argmax(lam))
        if lam[i] < 0.5 - btol:
            return False  # inside a removed middle triangle
        lam = 2 * lam
        lam[i] -= 1
        btol *= 2
    return True


def project_to_gasket(p: Sequence[float], depth: int = MEMBERSHIP_DEPTH) -> tuple[np.ndarray, float]:
    """A nearby gasket point and its distance from p (exact for gasket points).

    Coordinates below zero are clipped; a point in a removed middle triangle is
    pushed onto the side of the child cell it is closest to.
    """
    lam = _BARY @ np.array([p[0], p[1], 1.0])
    origin, scale = np.zeros(2), 1.0
    for _ in range(depth):
        lam = np.clip(lam, 0.0, None)
        lam /= lam.sum()
        if lam.min() <= 1e-15:
            break
        i = int(np.argmax(lam))
        if lam[i] < 0.5:
            rest = lam.sum() - lam[i]
            lam = lam * (0.5 / rest)
            lam[i] = 0.5
        origin = origin + scale * VERTICES[i] / 2
        scale /= 2
        lam = 2 * lam
        lam[i] -= 1
    q = origin + scale * (lam @ VERTICES)
    return q, float(math.hypot(q[0] - p[0], q[1] - p[1]))


def _require_on(p, name="point"):
    if not on_gasket(p):
        raise GasketError(f"{name} {tuple(p)} is not on the gasket")


# --- geodesics ---------------------------------------------------------------

# child-corner graph of one cell: nodes 0, 1, 2 are the cell corners, 3, 4, 5 the
# midpoints of sides 01, 12, 02; every child triangle contributes three unit edges
_MID = {(0, 1): 3, (1, 2): 4, (0, 2): 5}


def _child_corner_node(child: int, j: int) -> int:
    return child if child == j else _MID[tuple(sorted((child, j)))]


def _corner_graph_distances() -> np.ndarray:
    d = np.full((6, 6), np.inf)
    np.fill_diagonal(d, 0.0)
    for c in range(3):
        nodes = [_child_corner_node(c, j) for j in range(3)]
        for a in nodes:
            for b in nodes:
                if a != b:
                    d[a, b] = 1.0
    for k in range(6):
        d = np.minimum(d, d[:, [k]] + d[[k], :])
    return d


CORNER_DIST = _corner_graph_distances()


def vertex_geodesic(corner: int, p: Sequence[float]) -> float:
    """Geodesic distance from corner v1, v2 or v3 (``corner`` in 1..3): (1 - lambda_corner) * side."""
    if corner not in (1, 2, 3):
        raise GasketError("corner index must be 1, 2 or 3")
    _require_on(p)
    lam = barycentric(p)
    return float((1.0 - lam[corner - 1]) * SIDE)


def _children(lam: np.ndarray, tol: float) -> list[int]:
    return [i for i in range(3) if lam[i] >= 0.5 - tol]


def geodesic(p: Sequence[float], q: Sequence[float], check: bool = True) -> float:
    """Exact intrinsic distance between two gasket points.

    Descend while both points share a child cell. In the deepest common cell T
    the points lie in different children A and B, and any path leaves A and
    enters B through their corners, so

        d(p, q) = min_{a, b} d_A(p, a) + d_T(a, b) + d_B(b, q)

    where d_A is the corner formula rescaled to A and d_T is the exact
    shortest path among the six child corners of T. Paths leaving a cell
    cannot be shorter, because corners of a cell are joined inside it by a
    straight side.
    """
    if check:
        _require_on(p, "p")
        _require_on(q, "q")
    lp = _BARY @ np.array([p[0], p[1], 1.0])
    lq = _BARY @ np.array([q[0], q[1], 1.0])
    h = SIDE
    tol = 1e-12
    for _ in range(MEMBERSHIP_DEPTH):
        if h < 1e-9:
            break
        cp, cq = _children(lp, tol), _children(lq, tol)
        if not cp or not cq:
            raise GasketError("point left the gasket during descent")
        common = [c for c in cp if c in cq]
        if common:
            i = common[0]
            lp, lq = 2 * lp, 2 * lq
            lp[i] -= 1
            lq[i] -= 1
            h /= 2
            tol *= 2
            continue
        best = math.inf
        for A in cp:
            la = 2 * lp
            la[A] -= 1
            for B in cq:
                lb = 2 * lq
                lb[B] -= 1
                for ja in range(3):
                    da = (1 - la[ja]) * (h / 2)
                    na = _child_corner_node(A, ja)
                    for jb in range(3):
                        db = (1 - lb[jb]) * (h / 2)
                        nb = _child_corner_node(B, jb)
                        best = min(best, da + CORNER_DIST[na, nb] * (h / 2) + db)
        return float(best)
    return float(math.hypot(p[0] - q[0], p[1] - q[1]))


# --- level-m approximation -----------------------------------------------------

def cell_lattice_origins(n: int) -> np.ndarray:
    """Integer origins (units of the level-n side) of the 3^n cells, in address order."""
    if n < 0:
        raise GasketError("level must be >= 0")
    orig = np.zeros((1, 2), dtype=np.int64)
    for k in range(1, n + 1):
        orig = np.concatenate([orig + LATTICE[i] * 2 ** (k - 1) for i in range(3)])
    return orig


def lattice_to_plane(ab: np.ndarray, n: int) -> np.ndarray:
    """Map integer lattice points at level n (possibly half-integers via n+1) to the plane."""
    ab = np.asarray(ab, dtype=float)
    h = SIDE * 2.0**-n
    return np.column_stack([(ab[:, 0] + 0.5 * ab[:, 1]) * h, ab[:, 1] * (HEIGHT * 2.0**-n)])


@dataclass(frozen=True, eq=False)
class GasketApprox:
    """The graph SG_m: vertices V_m, one edge per side of each level-m cell."""

    level: int
    lattice: np.ndarray          # vertex -> integer lattice coordinates
    points: np.ndarray           # vertex -> plane coordinates
    edges: np.ndarray            # (3^(m+1), 2) vertex pairs
    cell_corners: np.ndarray     # (3^m, 3) vertex ids per cell, images of v1, v2, v3
    edge_length: float
    _csr: object = field(default=None, repr=False)
    _graph: list = field(default_factory=list, repr=False)

    @property
    def n_vertices(self) -> int:
        return len(self.points)

    def graph(self) -> WeightedGraph:
        """The same structure as a quantum_graph WeightedGraph (built on first use)."""
        if not self._graph:
            self._graph.append(build_graph(self.n_vertices,
                                           [(int(a), int(b), self.edge_length) for a, b in self.edges]))
        return self._graph[0]

    def vertex_index(self, ab: tuple[int, int]) -> int:
        key = np.array(ab, dtype=np.int64)
        hits = np.flatnonzero(np.all(self.lattice == key, axis=1))
        if len(hits) == 0:
            raise GasketError(f"lattice point {ab} is not a vertex of SG_{self.level}")
        return int(hits[0])

    def distances_from(self, sources: Sequence[int]) -> np.ndarray:
        from scipy.sparse.csgraph import dijkstra

        return dijkstra(self._csr, directed=False, indices=list(sources))

    def snap(self, p: Sequence[float]) -> int:
        """Nearest corner of a level-m cell containing p."""
        word = address(p, self.level)
        corners = self.cell_corners[_word_index(word)]
        d = np.hypot(self.points[corners, 0] - p[0], self.points[corners, 1] - p[1])
        return int(corners[int(np.argmin(d))])


_approx_lock = threading.Lock()


@lru_cache(maxsize=None)
def _build_approx(m: int) -> GasketApprox:
    from scipy.sparse import coo_matrix

    orig = cell_lattice_origins(m)
    corners = np.stack([orig + LATTICE[j] for j in range(3)], axis=1)  # (3^m, 3, 2)
    flat = corners.reshape(-1, 2)
    keys = flat[:, 0] * (2**m + 1) + flat[:, 1]
    uniq, first, inverse = np.unique(keys, return_index=True, return_inverse=True)
    lattice = flat[first]
    cell_ids = inverse.reshape(-1, 3)
    edges = np.concatenate([cell_ids[:, [0, 1]], cell_ids[:, [1, 2]], cell_ids[:, [0, 2]]])
    h = SIDE * 2.0**-m
    n = len(uniq)
    csr = coo_matrix((np.full(len(edges), h), (edges[:, 0], edges[:, 1])), shape=(n, n)).tocsr()
    return GasketApprox(m, lattice, lattice_to_plane(lattice, m), edges, cell_ids, h, csr)


def gasket_approx(m: int, cap: int = GRAPH_LEVEL_CAP) -> GasketApprox:
    if not 0 <= m <= cap:
        raise GasketError(f"level {m} outside 0..{cap}")
    with _approx_lock:
        return _build_approx(m)


def address(p: Sequence[float], n: int) -> tuple[int, ...]:
    """Address of a level-n cell containing p (first match at junction points)."""
    lam = _BARY @ np.array([p[0], p[1], 1.0])
    word = []
    tol = 1e-12
    for _ in range(n):
        cand = _children(lam, tol)
        if not cand:
            raise GasketError(f"point {tuple(p)} is not on the gasket")
        i = cand[0]
        word.append(i)
        lam = 2 * lam
        lam[i] -= 1
        tol *= 2
    return tuple(word)


def _word_index(word: Sequence[int]) -> int:
    idx = 0
    for c in word:
        idx = 3 * idx + c
    return idx


def geodesic_graph(p: Sequence[float], q: Sequence[float], m: int, cap: int = GRAPH_LEVEL_CAP) -> float:
    """Shortest-path distance on SG_m between the corners nearest to p and q.

    Exact for points of V_m; otherwise off by at most the two snapping distances.
    """
    _require_on(p, "p")
    _require_on(q, "q")
    g = gasket_approx(m, cap)
    a, b = g.snap(p), g.snap(q)
    return float(g.distances_from([a])[0, b])


def geodesic_graph_many(pairs: Sequence[tuple[Sequence[float], Sequence[float]]], m: int) -> np.ndarray:
    g = gasket_approx(m)
    src = [g.snap(p) for p, _ in pairs]
    dst = [g.snap(q) for _, q in pairs]
    uniq = sorted(set(src))
    row = {s: i for i, s in enumerate(uniq)}
    dist = g.distances_from(uniq)
    return np.array([dist[row[s], t] for s, t in zip(src, dst)])


def random_points(n: int, rng: np.random.Generator, depth: int = 24) -> np.ndarray:
    """Points on sides of random level-``depth`` cells, so exactly on the gasket."""
    words = rng.integers(0, 3, size=(n, depth))
    orig = np.zeros((n, 2))
    for k in range(depth):
        orig += VERTICES[words[:, k]] * 2.0 ** -(k + 1)
    scale = 2.0**-depth
    side = rng.integers(0, 3, size=n)
    t = rng.random(n)[:, None]
    a = VERTICES[side]
    b = VERTICES[(side + 1) % 3]
    return orig + scale * ((1 - t) * a + t * b)


# --- states ---------------------------------------------------------------------

def _evaluate(f: PlaneFunction, pts: np.ndarray) -> np.ndarray:
    vals = f(pts[:, 0], pts[:, 1])
    return np.broadcast_to(np.asarray(vals, dtype=float), (len(pts),))


def midpoint_points(n: int) -> np.ndarray:
    """The 3^(n+1) side midpoints of the level-n cells."""
    orig = 2 * cell_lattice_origins(n)
    mids = np.concatenate([orig + LATTICE[a] + LATTICE[b] for a, b in ((0, 1), (1, 2), (0, 2))])
    return lattice_to_plane(mids, n + 1)


def midpoint_state(f: PlaneFunction, n: int) -> float:
    """psi_n(f): average of f over the side midpoints of the level-n cells."""
    vals = _evaluate(f, midpoint_points(n))
    return math.fsum(vals) / len(vals)


def vertex_points(n: int) -> np.ndarray:
    g = _build_approx(n) if n <= GRAPH_LEVEL_CAP else None
    if g is None:
        raise GasketError(f"level {n} above {GRAPH_LEVEL_CAP}")
    return g.points


def vertex_state(f: PlaneFunction, n: int) -> float:
    """Average of f over V_n, |V_n| = (3^(n+1) + 3) / 2."""
    vals = _evaluate(f, vertex_points(n))
    return math.fsum(vals) / len(vals)


def compose_contraction(f: PlaneFunction, i: int) -> PlaneFunction:
    """f o F_i for the 0-based letter i."""
    vx, vy = VERTICES[i]
    return lambda x, y: f((x + vx) / 2, (y + vy) / 2)


def perimeter_average_sums(f: PlaneFunction, level_cap: int, quadrature_points: int = 12,
                           chunk: int = 1 << 15) -> list[float]:
    """For n = 0..level_cap, the sum over level-n cells of the perimeter average of f.

    Averages use the periodic trapezoidal rule in arclength with
    ``quadrature_points`` nodes per side, corners included, which is exact for
    functions that are affine along each side.
    """
    if quadrature_points < 1:
        raise GasketError("quadrature_points must be >= 1")
    q = quadrature_points
    s = np.arange(q) / q
    # node offsets on the unit-scale base triangle perimeter (v2 -> v3 -> v1)
    order = (1, 2, 0)
    nodes = np.concatenate([(1 - s)[:, None] * VERTICES[order[k]] + s[:, None] * VERTICES[order[(k + 1) % 3]]
                            for k in range(3)])
    sums = []
    for n in range(level_cap + 1):
        orig = lattice_to_plane(cell_lattice_origins(n), n)
        scale = 2.0**-n
        parts = []
        for start in range(0, len(orig), chunk):
            o = orig[start:start + chunk]
            pts = (o[:, None, :] + scale * nodes[None, :, :]).reshape(-1, 2)
            vals = _evaluate(f, pts).reshape(len(o), -1)
            parts.append(math.fsum(vals.mean(axis=1)))
        total = math.fsum(parts)
        sums.append(total)
    return sums


class HausdorffReport(NamedTuple):
    trace_residue: float       # lim (x-1) T(D x), T the localized trace
    predicted: float           # (4 / log 3) zeta(D) psi_n(f)
    state: float               # psi_n(f) at n = level_cap
    abs_discrepancy: float
    rel_discrepancy: float


def hausdorff_functional_check(f: PlaneFunction, z_margin: float = 1e-3, level_cap: int = 12,
                               quadrature_points: int = 12) -> HausdorffReport:
    """Compare the Dixmier-type residue of the localized trace with the Hausdorff state.

    The localized trace is completed above ``level_cap`` with the mean level-cap
    perimeter average, which carries the pole at D = log 3 / log 2. The limit
    (x - 1) T(D x) at x -> 1+ is Richardson-extrapolated from x - 1 = z_margin * 10^-k,
    k = 0..3.
    """
    from .dimensions import richardson_limit
    from .zeta import GASKET_DIMENSION, localized_gasket_trace_continued, riemann_zeta

    D = GASKET_DIMENSION
    sums = perimeter_average_sums(f, level_cap, quadrature_points)
    hs = [z_margin * 10.0**-k for k in range(4)]
    lim = richardson_limit(lambda h: h * localized_gasket_trace_continued(sums, D * (1 + h)), hs)
    if not math.isfinite(abs(lim)):
        raise GasketError("extrapolation failed")
    state = midpoint_state(f, level_cap)
    pred = 4.0 / math.log(3.0) * riemann_zeta(D).real * state
    diff = abs(lim.real - pred)
    rel = diff / abs(pred) if pred != 0 else math.inf
    return HausdorffReport(float(lim.real), float(pred), state, diff, rel)


# --- built-in test functions -----------------------------------------------------

def affine(a: float, b: float, c: float = 0.0) -> PlaneFunction:
    return lambda x, y: a * np.asarray(x) + b * np.asarray(y) + c


def coordinate(axis: str) -> PlaneFunction:
    if axis == "x":
        return lambda x, y: np.asarray(x, dtype=float)
    if axis == "y":
        return lambda x, y: np.asarray(y, dtype=float)
    raise GasketError("coordinate axis must be 'x' or 'y'")


def radial_bump(cx: float, cy: float, r: float) -> PlaneFunction:
    """Smooth bump exp(1 - 1/(1 - (d/r)^2)) inside radius r, zero outside."""
    if not r > 0:
        raise GasketError("bump radius must be positive")

    def f(x, y):
        d2 = ((np.asarray(x) - cx) ** 2 + (np.asarray(y) - cy) ** 2) / r**2
        out = np.zeros(np.broadcast(d2).shape)
        inside = d2 < 1
        out[inside] = np.exp(1 - 1 / (1 - d2[inside]))
        return out

    return f


def corner_cell_step(corner: int, width: float) -> PlaneFunction:
    """Smooth step in the barycentric coordinate of corner ``corner`` (0-based):
    1 on the level-1 cell at that corner, 0 where the coordinate is below 1/2 - width."""
    if not 0 < width < 0.5:
        raise GasketError("width must lie in (0, 1/2)")

    def f(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        lam = _BARY[corner, 0] * x + _BARY[corner, 1] * y + _BARY[corner, 2]
        s = np.clip((lam - (0.5 - width)) / width, 0.0, 1.0)
        return s * s * (3 - 2 * s)

    return f


FUNCTIONS = {
    "affine": lambda params: affine(*params),
    "coordinate": None,  # parsed separately, takes x or y
    "radial-bump": lambda params: radial_bump(*params),
}


def parse_function(spec: str) -> PlaneFunction:
    """``affine:a,b,c`` | ``coordinate:x`` | ``radial-bump:cx,cy,r``."""
    name, _, params = spec.partition(":")
    if name not in FUNCTIONS:
        raise GasketError(f"unknown function {name!r}; choose from {', '.join(FUNCTIONS)}")
    if name == "coordinate":
        return coordinate(params.strip())
    try:
        values = [float(v) for v in params.split(",")] if params else []
    except ValueError:
        raise GasketError(f"bad parameters {params!r}") from None
    expected = {"affine": (2, 3), "radial-bump": (3, 3)}[name]
    if not expected[0] <= len(values) <= expected[1]:
        raise GasketError(f"{name} takes {expected[0]}-{expected[1]} parameters")
    return FUNCTIONS[name](values)
