import itertools
import math

import numpy as np
import pytest

from fracspec.gasket import (
    SIDE,
    VERTICES,
    GasketError,
    affine,
    barycentric,
    compose_contraction,
    coordinate,
    corner_cell_step,
    gasket_approx,
    geodesic,
    geodesic_graph,
    geodesic_graph_many,
    hausdorff_functional_check,
    midpoint_state,
    on_gasket,
    parameterize,
    parse_function,
    project_to_gasket,
    radial_bump,
    random_points,
    triangle_vertices,
    vertex_geodesic,
    vertex_state,
)
from fracspec.quantum_graph import build_graph, single_source_distances

V1, V2, V3 = VERTICES
M23 = (V2 + V3) / 2


# --- oracles --------------------------------------------------------------------

def words(n):
    return list(itertools.product(range(3), repeat=n))


def sg_graph_oracle(m):
    """SG_m built from cell corners keyed by rounded coordinates; Dijkstra from quantum_graph."""
    index, coords, edges = {}, [], []
    for w in words(m):
        ids = []
        for p in triangle_vertices(w):
            key = (round(p[0], 9), round(p[1], 9))
            if key not in index:
                index[key] = len(coords)
                coords.append(p)
            ids.append(index[key])
        h = SIDE * 2.0**-m
        edges += [(ids[0], ids[1], h), (ids[1], ids[2], h), (ids[0], ids[2], h)]
    g = build_graph(len(coords), edges)
    pts = np.array(coords)
    return g, pts


def midpoint_state_oracle(f, n):
    pts = []
    for w in words(n):
        a, b, c = triangle_vertices(w)
        pts += [(a + b) / 2, (b + c) / 2, (a + c) / 2]
    pts = np.array(pts)
    return float(np.mean(f(pts[:, 0], pts[:, 1])))


TEST_FUNCTIONS = {
    "one": lambda x, y: np.ones_like(np.asarray(x, float)),
    "x": coordinate("x"),
    "affine": affine(2.0, 1.0, -0.5),
    "bump": radial_bump(1.0, 0.6, 0.7),
    "poly": lambda x, y: np.asarray(x) ** 2 * np.asarray(y) - np.cos(3 * np.asarray(y)),
}


# --- coordinates -----------------------------------------------------------------

def test_triangle_vertices():
    assert np.allclose(triangle_vertices(""), [(0, 0), (2 * math.pi / 3, 0), (math.pi / 3, math.pi / math.sqrt(3))])
    assert np.allclose(triangle_vertices("0"), triangle_vertices("") / 2)
    for n in (1, 3, 6):
        a, b, c = triangle_vertices("12" * n)
        for u, v in ((a, b), (b, c), (a, c)):
            assert np.linalg.norm(u - v) == pytest.approx(SIDE * 2.0 ** (-2 * n))
    with pytest.raises(GasketError):
        triangle_vertices("3")


def test_parameterize():
    assert np.allclose(parameterize("", 0.0), V2)
    assert np.allclose(parameterize("", SIDE), V3)
    assert np.allclose(parameterize("", -SIDE), V1)
    assert np.allclose(parameterize("", math.pi), parameterize("", -math.pi))
    assert np.allclose(parameterize("", SIDE / 2), M23)
    a, b, c = triangle_vertices("21")
    assert np.allclose(parameterize("21", 0.0), b)
    assert np.allclose(parameterize("21", SIDE / 4), c)
    with pytest.raises(GasketError):
        parameterize("", 3.2)


def test_parameterize_is_arclength():
    ts = np.linspace(-math.pi / 2, math.pi / 2, 601)
    pts = np.array([parameterize("0", t) for t in ts])
    steps = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    assert np.allclose(steps, ts[1] - ts[0], atol=1e-12)


def test_barycentric():
    assert np.allclose(barycentric(V1), (1, 0, 0))
    assert np.allclose(barycentric(VERTICES.mean(axis=0)), (1 / 3, 1 / 3, 1 / 3))
    assert np.allclose(barycentric(M23), (0, 0.5, 0.5))
    for w in ("", "0", "012"):
        lam = np.array([barycentric(p) for p in triangle_vertices(w)])
        assert np.allclose(lam.sum(axis=1), 1, atol=1e-12)
    assert np.allclose(np.array([barycentric(p) for p in VERTICES]), np.eye(3))
    with pytest.raises(GasketError):
        barycentric((-1.0, 0.0))


def test_membership():
    for p in (V1, V2, V3, M23, triangle_vertices("0120")[2]):
        assert on_gasket(p)
    assert all(on_gasket(p) for p in random_points(200, np.random.default_rng(0)))
    assert not on_gasket(VERTICES.mean(axis=0))
    assert not on_gasket((1.0, -0.1))
    assert not on_gasket(triangle_vertices("1").mean(axis=0))


def test_projection():
    q, d = project_to_gasket(M23)
    assert d == 0.0 and np.allclose(q, M23)
    q, d = project_to_gasket(VERTICES.mean(axis=0))
    assert on_gasket(q) and d > 0
    q, d = project_to_gasket((2.0944, 0.0))
    assert on_gasket(q) and d < 1e-4


# --- geodesics ------------------------------------------------------------------

def test_vertex_geodesic():
    assert vertex_geodesic(1, V2) == pytest.approx(SIDE)
    assert vertex_geodesic(1, M23) == pytest.approx(SIDE)
    assert vertex_geodesic(1, V1) == 0.0
    assert vertex_geodesic(3, V3) == 0.0
    with pytest.raises(GasketError):
        vertex_geodesic(4, V1)
    with pytest.raises(GasketError):
        vertex_geodesic(1, VERTICES.mean(axis=0))


def test_geodesic_examples():
    assert geodesic(V1, V2) == pytest.approx(SIDE, abs=1e-15)
    assert geodesic(V1, M23) == pytest.approx(SIDE, abs=1e-15)
    assert geodesic(M23, M23) == 0.0
    with pytest.raises(GasketError):
        geodesic(V1, VERTICES.mean(axis=0))


def test_vertex_geodesic_against_graph_oracle():
    g, pts = sg_graph_oracle(4)
    v1 = int(np.flatnonzero(np.all(np.abs(pts - V1) < 1e-9, axis=1))[0])
    dist, _ = single_source_distances(g, v1)
    for k, p in enumerate(pts):
        assert vertex_geodesic(1, p) == pytest.approx(dist[k], abs=1e-12)


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_geodesic_exhaustive_on_vertices(m):
    g, pts = sg_graph_oracle(m)
    for a in range(len(pts)):
        dist, _ = single_source_distances(g, a)
        for b in range(a, len(pts)):
            assert abs(geodesic(pts[a], pts[b]) - dist[b]) < 1e-12


def test_graph_counts():
    for m in range(6):
        ga = gasket_approx(m)
        assert ga.n_vertices == (3 ** (m + 1) + 3) // 2
        assert len(ga.edges) == 3 ** (m + 1)
    with pytest.raises(GasketError):
        gasket_approx(13)


@pytest.mark.parametrize("m", [2, 3])
def test_csgraph_matches_quantum_graph(m):
    ga = gasket_approx(m)
    for a in range(ga.n_vertices):
        dist, _ = single_source_distances(ga.graph(), a)
        assert np.allclose(ga.distances_from([a])[0], dist, atol=1e-13)


def test_graph_vertex_example():
    assert geodesic_graph(V1, V2, 3) == pytest.approx(SIDE, abs=1e-13)


def test_exact_equals_graph_on_level8_vertices():
    ga = gasket_approx(8)
    rng = np.random.default_rng(1)
    idx = rng.integers(0, ga.n_vertices, size=(100, 2))
    pairs = [(ga.points[a], ga.points[b]) for a, b in idx]
    graph_d = geodesic_graph_many(pairs, 8)
    exact = np.array([geodesic(p, q) for p, q in pairs])
    assert np.max(np.abs(graph_d - exact)) < 1e-12


def test_exact_against_level10_graph():
    rng = np.random.default_rng(2)
    pts = random_points(60, rng)
    pairs = list(zip(pts[::2], pts[1::2]))
    graph_d = geodesic_graph_many(pairs, 10)
    exact = np.array([geodesic(p, q) for p, q in pairs])
    assert np.max(np.abs(graph_d - exact)) <= 3 * SIDE * 2.0**-10


def test_metric_properties():
    rng = np.random.default_rng(3)
    pts = random_points(90, rng)
    for p, q, r in zip(pts[::3], pts[1::3], pts[2::3]):
        dpq = geodesic(p, q)
        euc = float(np.linalg.norm(p - q))
        assert dpq == pytest.approx(geodesic(q, p), abs=1e-14)
        assert dpq <= geodesic(p, r) + geodesic(r, q) + 1e-12
        assert euc - 1e-12 <= dpq <= 8 * euc + 1e-12
        assert geodesic(p, p) == 0.0


@pytest.mark.parametrize("m, word", [(3, (0, 1, 2)), (5, (2, 2, 0, 1, 1)), (4, (1, 0, 2, 2))])
def test_slopes_along_edges(m, word):
    rng = np.random.default_rng(m)
    q = random_points(1, rng)[0]
    corners = triangle_vertices(word)
    for a, b in ((0, 1), (1, 2), (0, 2)):
        t = np.linspace(0, 1, 257)
        pts = (1 - t)[:, None] * corners[a] + t[:, None] * corners[b]
        vals = np.array([geodesic(p, q) for p in pts])
        slopes = np.diff(vals) / (np.linalg.norm(corners[b] - corners[a]) * np.diff(t))
        assert np.all(np.abs(slopes) <= 1 + 1e-6)


# --- states -----------------------------------------------------------------------

@pytest.mark.parametrize("name", list(TEST_FUNCTIONS))
@pytest.mark.parametrize("n", [0, 2, 4])
def test_midpoint_state_matches_oracle(name, n):
    f = TEST_FUNCTIONS[name]
    assert midpoint_state(f, n) == pytest.approx(midpoint_state_oracle(f, n), rel=1e-12, abs=1e-14)


@pytest.mark.parametrize("name", list(TEST_FUNCTIONS))
@pytest.mark.parametrize("n", [0, 3, 6])
def test_self_similarity(name, n):
    f = TEST_FUNCTIONS[name]
    rhs = sum(midpoint_state(compose_contraction(f, i), n) for i in range(3)) / 3
    assert midpoint_state(f, n + 1) == pytest.approx(rhs, rel=1e-12, abs=1e-14)


def test_state_symmetry_values():
    for n in (0, 3, 8):
        assert midpoint_state(TEST_FUNCTIONS["one"], n) == 1.0
        assert midpoint_state(coordinate("x"), n) == pytest.approx(math.pi / 3, abs=1e-12)
    assert vertex_state(coordinate("x"), 10) == pytest.approx(math.pi / 3, abs=1e-12)
    assert vertex_state(TEST_FUNCTIONS["one"], 4) == 1.0
    ones = []
    vertex_state(lambda x, y: ones.append(len(x)) or np.ones(len(x)), 1)
    assert ones == [6]


def test_states_cauchy():
    f = affine(2.0, 1.0)
    lip = math.sqrt(5)
    for n0 in (2, 4, 6):
        base = midpoint_state(f, n0)
        for n in range(n0 + 1, 11):
            assert abs(midpoint_state(f, n) - base) <= lip * SIDE * 2.0**-n0


def test_vertex_and_midpoint_states_agree_in_the_limit():
    f = TEST_FUNCTIONS["poly"]
    assert vertex_state(f, 10) == pytest.approx(midpoint_state(f, 10), abs=1e-3)


# --- Hausdorff functional -----------------------------------------------------------

def test_hausdorff_constant():
    rep = hausdorff_functional_check(TEST_FUNCTIONS["one"], level_cap=8)
    assert rep.rel_discrepancy <= 1e-6
    assert rep.state == 1.0


def test_hausdorff_x_coordinate():
    rep = hausdorff_functional_check(coordinate("x"), level_cap=12)
    assert rep.rel_discrepancy <= 1e-3
    assert rep.state == pytest.approx(math.pi / 3, abs=1e-12)


def test_hausdorff_corner_bump_ratio():
    one = hausdorff_functional_check(TEST_FUNCTIONS["one"], level_cap=10)
    bump = hausdorff_functional_check(corner_cell_step(0, 2.0**-8), level_cap=10)
    assert abs(bump.trace_residue / one.trace_residue - 1 / 3) <= 5e-3


# --- function registry ------------------------------------------------------------

def test_parse_function():
    f = parse_function("affine:2,1,0.5")
    assert f(np.array([1.0]), np.array([2.0]))[0] == 4.5
    assert parse_function("coordinate:y")(np.array([1.0]), np.array([3.0]))[0] == 3.0
    b = parse_function("radial-bump:0,0,1")
    assert b(np.array([0.0, 2.0]), np.array([0.0, 0.0])).tolist() == [1.0, 0.0]
    for bad in ("sin:1", "affine:1", "affine:a,b", "coordinate:z", "radial-bump:0,0,-1"):
        with pytest.raises(GasketError):
            parse_function(bad)
