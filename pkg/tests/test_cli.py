import csv
import io
import json
import math
import subprocess
import sys

import pytest

from fracspec.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    data = json.loads(out)
    assert data["schema"] == 1
    return data


def run_csv(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    return list(csv.DictReader(io.StringIO(out)))


@pytest.fixture
def edge_file(tmp_path):
    path = tmp_path / "edge.txt"
    path.write_text("vertices 2\n0 1 1.0\n")
    return path


@pytest.fixture
def cycle_file(tmp_path):
    path = tmp_path / "cycle.txt"
    path.write_text("# triangle\nvertices 3\n0 1 1\n1 2 1\n2 0 1\n")
    return path


# --- spectrum ----------------------------------------------------------------

def test_spectrum_gasket(capsys):
    rows = run_csv(capsys, "spectrum", "--shape", "gasket", "--max-magnitude", "4")
    assert list(rows[0]) == ["magnitude", "multiplicity", "cumulative_count"]
    assert rows[-1]["cumulative_count"] == "92"
    mult = {float(r["magnitude"]): int(r["multiplicity"]) for r in rows}
    assert mult[1.0] == 6 and mult[4.0] == 54


def test_spectrum_edge_count(capsys):
    rows = run_csv(capsys, "spectrum", "--shape", f"edge:{math.pi / 2}", "--count", "3")
    assert [round(float(r["magnitude"]), 12) for r in rows] == [1.0, 3.0, 5.0]


def test_spectrum_needs_limit(capsys):
    assert run(capsys, "spectrum", "--shape", "gasket")[0] == 2


# --- zeta ---------------------------------------------------------------------

def test_zeta_gasket_at_two(capsys):
    data = run_json(capsys, "zeta", "--shape", "gasket", "--z", "2,0")
    assert data["records"][0]["value_re"] == pytest.approx(4 * math.pi**2, abs=1e-9)


def test_zeta_compare_grid(capsys):
    data = run_json(capsys, "zeta", "--shape", "gasket", "--grid", "1.8,3,3,-20,20,3",
                    "--method", "truncated", "--target", "1e-6", "--compare", "--threads", "2")
    assert len(data["records"]) == 9
    assert data["all_within_bound"]


def test_zeta_tree(capsys):
    data = run_json(capsys, "zeta", "--shape", "tree:f2", "--z", "2,0")
    assert data["records"][0]["value_re"] == pytest.approx(4.0, abs=1e-9)


def test_zeta_domain_error(capsys):
    code, _, err = run(capsys, "zeta", "--shape", "gasket", "--z", "1,0")
    assert code == 3 and "pole" in err
    code, _, _ = run(capsys, "zeta", "--shape", "gasket", "--z", "1.2,0", "--method", "truncated")
    assert code == 3


def test_zeta_bad_arguments(capsys):
    assert run(capsys, "zeta", "--shape", "gasket", "--z", "2")[0] == 2
    assert run(capsys, "zeta", "--shape", "gasket")[0] == 2
    assert run(capsys, "zeta", "--shape", "moon", "--z", "2,0")[0] == 2
    assert run(capsys, "zeta", "--bogus")[0] == 2


# --- dims and dixmier -------------------------------------------------------------

def test_dims_poles(capsys):
    rows = run_csv(capsys, "dims", "--shape", "gasket", "--window", "0.5,2,-30,30")
    assert list(rows[0]) == ["re", "im", "order", "res_re", "res_im"]
    assert len(rows) == 8
    assert any(abs(float(r["re"]) - 1.5849625007) < 1e-9 and float(r["im"]) == 0 for r in rows)


def test_dims_metric(capsys):
    data = run_json(capsys, "dims", "--shape", "gasket", "--mode", "metric")
    assert abs(data["empirical"] - data["analytic"]) <= 0.03
    assert data["analytic"] == pytest.approx(1.584962500721156, abs=1e-15)


def test_dims_bad_window(capsys):
    assert run(capsys, "dims", "--shape", "gasket", "--window", "2,1,-1,1")[0] == 3
    assert run(capsys, "dims", "--shape", "gasket", "--window", "2,1")[0] == 2


def test_dixmier(capsys):
    data = run_json(capsys, "dixmier", "--n", "1000,10000")
    assert data["residue_value"] == pytest.approx(8.474712884908, abs=1e-8)
    assert abs(data["numeric_limit"] - data["residue_value"]) < 1e-6
    assert [p["n"] for p in data["partial_sums"]] == [1000, 10000]
    assert run(capsys, "dixmier", "--n", "1")[0] == 3


# --- geodesic and measure ---------------------------------------------------------

def test_geodesic_example(capsys):
    data = run_json(capsys, "geodesic", "--p", "0,0", "--q", "2.0944,0", "--method", "exact")
    assert data["distance"] == pytest.approx(2.0943951, abs=1e-6)
    assert data["snap_distance"]["q"] < 1e-5


def test_geodesic_graph_method(capsys):
    data = run_json(capsys, "geodesic", "--p", "0,0", "--q", "2.0943951023931953,0",
                    "--method", "graph", "--level", "3")
    assert data["distance"] == pytest.approx(2 * math.pi / 3, abs=1e-12)


def test_geodesic_off_gasket(capsys):
    code, _, err = run(capsys, "geodesic", "--p", "0,0", "--q", "1.0472,0.6")
    assert code == 3 and "gasket" in err


def test_geodesic_random(capsys):
    data = run_json(capsys, "geodesic", "--random", "20", "--level", "8", "--seed", "3")
    assert data["max_abs_diff_exact_graph"] <= data["bound"]
    assert 1 - 1e-12 <= data["min_ratio_to_euclidean"] <= data["max_ratio_to_euclidean"] <= 8


def test_measure(capsys):
    data = run_json(capsys, "measure", "--level", "5", "--function", "coordinate:x")
    assert data["midpoint_state"] == pytest.approx(math.pi / 3, abs=1e-12)
    assert data["vertex_state"] == pytest.approx(math.pi / 3, abs=1e-12)
    data = run_json(capsys, "measure", "--level", "8", "--function", "affine:1,2", "--hausdorff")
    assert data["hausdorff"]["rel_discrepancy"] <= 1e-3
    assert run(capsys, "measure", "--level", "3", "--function", "sin:1")[0] == 2


# --- tree and graph --------------------------------------------------------------

def test_tree_edges_table(capsys):
    rows = run_csv(capsys, "tree", "--depth", "3")
    assert list(rows[0]) == ["edge", "parent", "child", "level", "length"]
    levels = [int(r["level"]) for r in rows]
    assert [levels.count(k) for k in (1, 2, 3)] == [4, 12, 36]


def test_tree_vertices_table(capsys):
    rows = run_csv(capsys, "tree", "--depth", "2", "--table", "vertices")
    pos = {r["label"]: (float(r["x"]), float(r["y"])) for r in rows}
    assert pos["a"] == (0.5, 0.0) and pos["ab"] == (0.5, 0.25)


def test_tree_distance_and_rebase(capsys):
    data = run_json(capsys, "tree", "--depth", "2", "--distance", "0,0.5", "1,0.5")
    assert data["d_p"] == pytest.approx(math.sqrt(0.5)) and data["d_inf"] == 0.5
    data = run_json(capsys, "tree", "--depth", "6", "--rebase-check", "200", "--seed", "1")
    assert data["max_rebase_discrepancy"] < 1e-12 and data["dq_le_dp"]
    assert data["max_dp_over_dinf"] <= 2


def test_tree_file(capsys, edge_file, cycle_file):
    rows = run_csv(capsys, "tree", "--shape", f"tree:{edge_file}")
    assert len(rows) == 1
    code, _, err = run(capsys, "tree", "--shape", f"tree:{cycle_file}")
    assert code == 2 and "not a tree" in err


def test_graph(capsys, cycle_file, tmp_path):
    data = run_json(capsys, "graph", "--shape", f"graph:{cycle_file}", "--from", "0,0", "--to", "0,1")
    assert data["geodesic"] == 1.0 and data["lp_generic"] == pytest.approx(1.0, abs=1e-9)
    data = run_json(capsys, "graph", "--random", "20", "--seed", "2")
    assert data["max_abs_diff"] <= 1e-9
    assert run(capsys, "graph", "--shape", f"graph:{tmp_path / 'missing.txt'}", "--from", "0,0",
               "--to", "0,1")[0] == 2
    bad = tmp_path / "bad.txt"
    bad.write_text("vertices 2\n0 1\n")
    code, _, err = run(capsys, "graph", "--shape", f"graph:{bad}", "--from", "0,0", "--to", "0,0")
    assert code == 2 and "line 2" in err


# --- output handling --------------------------------------------------------------

def test_output_directory_env(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("FRACSPEC_OUTPUT_DIR", str(tmp_path))
    code, out, _ = run(capsys, "spectrum", "--shape", "gasket", "--count", "2", "-o", "sub/spec.csv")
    assert code == 0 and out == ""
    text = (tmp_path / "sub" / "spec.csv").read_text()
    assert text.splitlines()[0] == "magnitude,multiplicity,cumulative_count"


def test_threads_validation(capsys):
    assert run(capsys, "zeta", "--shape", "gasket", "--z", "2,0", "--threads", "0")[0] == 2


def test_deterministic_module_entry_point():
    cmd = [sys.executable, "-m", "fracspec", "geodesic", "--random", "10", "--level", "6", "--seed", "7"]
    a = subprocess.run(cmd, capture_output=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert a == b and json.loads(a)["seed"] == 7
