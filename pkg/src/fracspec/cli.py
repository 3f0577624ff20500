"""Command-line front end.

Exit status: 0 on success, 2 for usage or input errors, 3 for numeric-domain errors.
JSON outputs carry ``"schema": 1``; CSV outputs always start with a header row.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import dimensions as dl
from . import gasket as sg
from . import quantum_graph as qg
from . import spectrum as sp
from . import tree as tr
from . import zeta as zt

SCHEMA = 1
OUTPUT_ENV = "FRACSPEC_OUTPUT_DIR"


class UsageError(Exception):
    pass


# --- parsing helpers ---------------------------------------------------------

def _floats(text: str, n: int | None = None, name: str = "value") -> list[float]:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"{name}: expected comma-separated numbers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise UsageError(f"{name}: expected {n} numbers, got {len(vals)}")
    return vals


def _ints(text: str, name: str) -> list[int]:
    try:
        return [int(float(v)) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"{name}: expected comma-separated integers, got {text!r}") from None


def _load_graph(path: str) -> qg.WeightedGraph:
    try:
        return qg.load_graph_file(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None
    except qg.GraphError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _load_tree(path: str) -> tr.Tree:
    g = _load_graph(path)
    if not qg.is_tree(g):
        raise UsageError(f"{path}: not a tree (a cycle or a disconnected piece is present)")
    return tr.tree_from_graph(g)


def _shape_stream(shape: str) -> sp.SpectrumStream:
    kind, _, arg = shape.partition(":")
    if kind == "gasket":
        return sp.gasket_spectrum()
    if kind == "tree" and arg == "f2":
        return sp.tree_spectrum(zt.F2_FAMILY)
    if kind == "tree":
        t = _load_tree(arg)
        return sp.graph_spectrum(t.lengths.tolist())
    if kind == "graph":
        g = _load_graph(arg)
        return sp.graph_spectrum([length for _, _, length in g.edges])
    if kind == "edge":
        return sp.edge_spectrum(_floats(arg, 1, "edge length")[0])
    if kind == "circle":
        return sp.circle_spectrum(_floats(arg, 1, "radius")[0])
    raise UsageError(f"unknown shape {shape!r}")


def _shape_form(shape: str) -> zt.MeromorphicForm:
    if shape == "gasket":
        return zt.gasket_form()
    if shape == "tree:f2":
        return zt.tree_form(zt.F2_FAMILY)
    raise UsageError("closed forms exist for --shape gasket and --shape tree:f2 only")


def _shape_spec(shape: str):
    if shape == "gasket":
        return sp.Gasket()
    if shape == "tree:f2":
        return sp.TreeFamily(zt.F2_FAMILY)
    return _shape_stream(shape)


# --- output --------------------------------------------------------------------

def _open_output(path: str | None):
    if path is None:
        return None
    p = Path(path)
    if not p.is_absolute() and os.environ.get(OUTPUT_ENV):
        p = Path(os.environ[OUTPUT_ENV]) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _emit(text: str, args) -> None:
    p = _open_output(args.output)
    if p is None:
        sys.stdout.write(text)
    else:
        p.write_text(text, encoding="utf-8")


def _emit_json(obj: dict, args) -> None:
    _emit(json.dumps({"schema": SCHEMA, **obj}, indent=2, sort_keys=True) + "\n", args)


def _emit_csv(header: list[str], rows, args) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    _emit(buf.getvalue(), args)


def _pool_map(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


# --- subcommands ---------------------------------------------------------------

def cmd_spectrum(args) -> None:
    s = _shape_stream(args.shape)
    if args.max_magnitude is None and args.count is None:
        raise UsageError("give --max-magnitude or --count")
    rows = []
    cum = 0
    for mag, mult in s:
        if args.max_magnitude is not None and mag > args.max_magnitude * (1 + sp.REL_TOL):
            break
        cum += mult
        rows.append((float(mag), mult, cum))
        if args.count is not None and len(rows) >= args.count:
            break
    _emit_csv(["magnitude", "multiplicity", "cumulative_count"], rows, args)


def _zeta_points(args) -> list[complex]:
    if args.z is not None:
        re, im = _floats(args.z, 2, "--z")
        return [complex(re, im)]
    if args.grid is not None:
        r0, r1, nr, i0, i1, ni = _floats(args.grid, 6, "--grid")
        if nr < 1 or ni < 1:
            raise UsageError("--grid counts must be positive")
        return [complex(r, i) for r in np.linspace(r0, r1, int(nr)) for i in np.linspace(i0, i1, int(ni))]
    raise UsageError("give --z re,im or --grid re0,re1,nre,im0,im1,nim")


def cmd_zeta(args) -> None:
    pts = _zeta_points(args)
    if args.method == "closed":
        form = _shape_form(args.shape)

        def one(z):
            return {"z_re": z.real, "z_im": z.imag, **_cval(form(z)), "tail_bound": 0.0}
    else:
        spec = _shape_spec(args.shape)
        form = _shape_form(args.shape) if args.compare else None

        def one(z):
            est = zt.truncated_spectral_zeta(spec, z, args.target)
            rec = {"z_re": z.real, "z_im": z.imag, **_cval(est.value), "tail_bound": est.tail_bound}
            if form is not None:
                closed = form(z)
                rec["closed_re"], rec["closed_im"] = closed.real, closed.imag
                rec["abs_error"] = abs(est.value - closed)
            return rec
    records = _pool_map(one, pts, args.threads)
    out = {"shape": args.shape, "method": args.method, "records": records}
    if args.compare and args.method == "truncated":
        out["all_within_bound"] = all(r["abs_error"] <= r["tail_bound"] for r in records)
    _emit_json(out, args)


def _cval(v: complex) -> dict:
    return {"value_re": float(v.real), "value_im": float(v.imag)}


def cmd_dims(args) -> None:
    if args.mode == "poles":
        form = _shape_form(args.shape)
        w = dl.Window(*_floats(args.window, 4, "--window"))
        poles = dl.complex_dimensions(form, w)
        rows = [(p.location.real, p.location.imag, p.order, p.residue.real, p.residue.imag) for p in poles]
        _emit_csv(["re", "im", "order", "res_re", "res_im"], rows, args)
        return
    lo, hi = _floats(args.lambda_range, 2, "--lambda-range")
    emp = dl.metric_dimension_empirical(_shape_stream(args.shape), hi, lo)
    out = {"shape": args.shape, "lambda_min": lo, "lambda_max": hi, "empirical": emp.slope,
           "stderr": emp.stderr, "max_residual": emp.max_residual, "points": emp.n_points}
    if args.shape == "gasket":
        out["analytic"] = zt.GASKET_DIMENSION
    elif args.shape == "tree:f2":
        out["analytic"] = dl.metric_dimension_analytic(zt.F2_FAMILY)
    _emit_json(out, args)


def cmd_dixmier(args) -> None:
    form = _shape_form(args.shape)
    d = zt.GASKET_DIMENSION if args.d is None else args.d
    res = dl.dixmier_residue(form, d)
    lim = dl.dixmier_limit_numeric(form, d)
    ns = _ints(args.n, "--n")
    sums = dl.dixmier_partial_sums(_shape_stream(args.shape), d, ns)
    _emit_json({"shape": args.shape, "d": d, "residue_value": res, "numeric_limit": lim,
                "partial_sums": [{"n": n, "value": v, "relative_gap": (v - res) / res}
                                 for n, v in zip(ns, sums)],
                "oscillation_range": max(sums) - min(sums)}, args)


def cmd_geodesic(args) -> None:
    if args.random:
        rng = np.random.default_rng(args.seed)
        pts = sg.random_points(2 * args.random, rng)
        pairs = list(zip(pts[::2], pts[1::2]))
        exact = np.array(_pool_map(lambda pq: sg.geodesic(*pq), pairs, args.threads))
        graph = sg.geodesic_graph_many(pairs, args.level)
        eucl = np.array([math.dist(p, q) for p, q in pairs])
        nz = eucl > 0
        ratio = exact[nz] / eucl[nz]
        _emit_json({"pairs": len(pairs), "level": args.level, "seed": args.seed,
                    "max_abs_diff_exact_graph": float(np.abs(exact - graph).max()),
                    "bound": 3 * sg.SIDE * 2.0**-args.level,
                    "min_ratio_to_euclidean": float(ratio.min()),
                    "max_ratio_to_euclidean": float(ratio.max())}, args)
        return
    if args.p is None or args.q is None:
        raise UsageError("give --p x,y and --q x,y (or --random N)")
    p, q = _floats(args.p, 2, "--p"), _floats(args.q, 2, "--q")
    snapped = {}
    for name, pt in (("p", p), ("q", q)):
        proj, moved = sg.project_to_gasket(pt)
        if moved > args.snap_tol:
            raise sg.GasketError(f"{name} = {tuple(pt)} is {moved:.3g} away from the gasket "
                                 f"(more than --snap-tol {args.snap_tol})")
        snapped[name] = moved
        if name == "p":
            p = proj.tolist()
        else:
            q = proj.tolist()
    if args.method == "exact":
        d = sg.geodesic(p, q)
    else:
        d = sg.geodesic_graph(p, q, args.level)
    _emit_json({"p": p, "q": q, "method": args.method, "level": args.level, "distance": d,
                "euclidean": math.dist(p, q), "snap_distance": snapped}, args)


def cmd_measure(args) -> None:
    try:
        f = sg.parse_function(args.function)
    except sg.GasketError as exc:
        raise UsageError(str(exc)) from None
    out = {"function": args.function, "level": args.level,
           "midpoint_state": sg.midpoint_state(f, args.level)}
    if args.level <= sg.GRAPH_LEVEL_CAP:
        out["vertex_state"] = sg.vertex_state(f, args.level)
    if args.hausdorff:
        rep = sg.hausdorff_functional_check(f, level_cap=args.level)
        out["hausdorff"] = rep._asdict()
    _emit_json(out, args)


def _tree_point(text: str) -> tr.TreePoint:
    e, s = _floats(text, 2, "tree point")
    return tr.TreePoint(int(e), s)


def cmd_tree(args) -> None:
    if args.shape == "tree:f2":
        t = tr.cayley_f2(args.depth)
    elif args.shape.startswith("tree:"):
        t = _load_tree(args.shape[5:])
    else:
        raise UsageError("--shape must be tree:f2 or tree:FILE")
    if args.rebase_check:
        rng = np.random.default_rng(args.seed)
        pts = tr.random_points(t, 2 * args.rebase_check, rng)
        pairs = list(zip(pts[::2], pts[1::2]))
        u, v = (int(x) for x in rng.choice(t.n_vertices, size=2, replace=False))
        rep = tr.rebase_isometry_check(t, u, v, pairs, args.p)
        dp = [tr.dp_distance(t, x, y, args.p) for x, y in pairs]
        dq = [tr.dp_distance(t, x, y, args.p + 1) for x, y in pairs]
        dinf = [tr.dinf_distance(t, x, y) for x, y in pairs]
        _emit_json({"pairs": len(pairs), "u": u, "v": v, "p": args.p,
                    "max_rebase_discrepancy": rep.max_discrepancy,
                    "dq_le_dp": all(b <= a + 1e-15 for a, b in zip(dp, dq)),
                    "max_dp_over_dinf": max(a / b for a, b in zip(dp, dinf) if b > 0),
                    "edge_census": {str(k): v for k, v in t.edge_census().items()}}, args)
        return
    if args.distance:
        x, y = _tree_point(args.distance[0]), _tree_point(args.distance[1])
        _emit_json({"x": list(x), "y": list(y), "p": args.p, "d_p": tr.dp_distance(t, x, y, args.p),
                    "d_inf": tr.dinf_distance(t, x, y), "geodesic": tr.tree_geodesic(t, x, y)}, args)
        return
    if args.table == "vertices":
        pos = t.positions
        rows = [(v, t.labels[v] if t.labels else "", int(t.depth[v]),
                 float(pos[v, 0]) if pos is not None else "", float(pos[v, 1]) if pos is not None else "")
                for v in range(t.n_vertices)]
        _emit_csv(["vertex", "label", "depth", "x", "y"], rows, args)
    else:
        rows = [(e, int(t.parent[t.child[e]]), int(t.child[e]), t.edge_level(e), float(t.lengths[e]))
                for e in range(t.n_edges)]
        _emit_csv(["edge", "parent", "child", "level", "length"], rows, args)


def _graph_point(text: str) -> qg.GraphPoint:
    e, s = _floats(text, 2, "graph point")
    return qg.GraphPoint(int(e), s)


def cmd_graph(args) -> None:
    if args.random:
        rng = np.random.default_rng(args.seed)
        worst = 0.0
        for _ in range(args.random):
            n = int(rng.integers(2, args.max_vertices + 1))
            g = qg.random_connected_graph(n, rng)
            p, q = qg.random_point(g, rng), qg.random_point(g, rng)
            d = qg.geodesic_distance(g, p, q)
            worst = max(worst, abs(qg.lipschitz_sup_distance(g, p, q, "lp") - d),
                        abs(qg.lipschitz_sup_distance(g, p, q, "dual") - d))
        _emit_json({"graphs": args.random, "seed": args.seed, "max_abs_diff": worst}, args)
        return
    if args.shape is None or not args.shape.startswith("graph:"):
        raise UsageError("--shape graph:FILE is required")
    if args.source is None or args.target is None:
        raise UsageError("give --from EDGE,OFFSET and --to EDGE,OFFSET")
    g = _load_graph(args.shape[6:])
    p, q = _graph_point(args.source), _graph_point(args.target)
    d = qg.geodesic_distance(g, p, q)
    out = {"from": list(p), "to": list(q), "geodesic": d}
    if math.isfinite(d):
        out["lp_dual"] = qg.lipschitz_sup_distance(g, p, q, "dual")
        out["lp_generic"] = qg.lipschitz_sup_distance(g, p, q, "lp")
    _emit_json(out, args)


# --- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", "-o", help=f"output file (relative paths resolve under ${OUTPUT_ENV})")
    common.add_argument("--seed", type=int, default=0, help="seed for all sampling")
    common.add_argument("--threads", type=int, default=1, help="worker threads for grid evaluations")

    ap = argparse.ArgumentParser(prog="fracspec", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", parents=[common], help="eigenvalue magnitudes as CSV")
    p.add_argument("--shape", required=True, help="gasket | tree:f2 | tree:FILE | graph:FILE | edge:L | circle:R")
    p.add_argument("--max-magnitude", type=float)
    p.add_argument("--count", type=int, help="number of distinct magnitudes")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("zeta", parents=[common], help="spectral zeta values as JSON")
    p.add_argument("--shape", required=True)
    p.add_argument("--z", help="re,im")
    p.add_argument("--grid", help="re0,re1,nre,im0,im1,nim")
    p.add_argument("--method", choices=["closed", "truncated"], default="closed")
    p.add_argument("--target", type=float, default=1e-8, help="tail bound target for --method truncated")
    p.add_argument("--compare", action="store_true", help="add the closed form and the error")
    p.set_defaults(func=cmd_zeta)

    p = sub.add_parser("dims", parents=[common], help="complex dimensions (CSV) or metric dimension (JSON)")
    p.add_argument("--shape", required=True)
    p.add_argument("--mode", choices=["poles", "metric"], default="poles")
    p.add_argument("--window", default="0.5,2,-30,30", help="re_min,re_max,im_min,im_max")
    p.add_argument("--lambda-range", default="100,10000", help="Lambda_min,Lambda_max")
    p.set_defaults(func=cmd_dims)

    p = sub.add_parser("dixmier", parents=[common], help="Dixmier value and partial sums as JSON")
    p.add_argument("--shape", default="gasket")
    p.add_argument("--d", type=float, help="abscissa (default log 3 / log 2)")
    p.add_argument("--n", default="1000,10000,100000", help="comma-separated N values")
    p.set_defaults(func=cmd_dixmier)

    p = sub.add_parser("geodesic", parents=[common], help="gasket geodesic distance as JSON")
    p.add_argument("--p")
    p.add_argument("--q")
    p.add_argument("--method", choices=["exact", "graph"], default="exact")
    p.add_argument("--level", type=int, default=10)
    p.add_argument("--random", type=int, default=0, help="compare methods on N random pairs")
    p.add_argument("--snap-tol", type=float, default=1e-3,
                   help="largest allowed move when projecting --p/--q onto the gasket")
    p.set_defaults(func=cmd_geodesic)

    p = sub.add_parser("measure", parents=[common], help="midpoint/vertex states of a test function")
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--function", required=True, help="affine:a,b[,c] | coordinate:x|y | radial-bump:cx,cy,r")
    p.add_argument("--hausdorff", action="store_true", help="also run the localized-trace residue check")
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("tree", parents=[common], help="tree tables (CSV) and distances (JSON)")
    p.add_argument("--shape", default="tree:f2")
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--table", choices=["vertices", "edges"], default="edges")
    p.add_argument("--distance", nargs=2, metavar="EDGE,OFFSET")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--rebase-check", type=int, default=0, metavar="PAIRS")
    p.set_defaults(func=cmd_tree)

    p = sub.add_parser("graph", parents=[common], help="graph geodesic and Lipschitz duality as JSON")
    p.add_argument("--shape")
    p.add_argument("--from", dest="source", metavar="EDGE,OFFSET")
    p.add_argument("--to", dest="target", metavar="EDGE,OFFSET")
    p.add_argument("--random", type=int, default=0, help="check duality on N random graphs")
    p.add_argument("--max-vertices", type=int, default=8)
    p.set_defaults(func=cmd_graph)
    return ap


DOMAIN_ERRORS = (zt.ZetaDomainError, dl.DimensionError, sg.GasketError, tr.TreeError,
                 sp.SpectrumError, qg.GraphError)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.threads < 1:
        print("fracspec: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        args.func(args)
    except UsageError as exc:
        print(f"fracspec: {exc}", file=sys.stderr)
        return 2
    except DOMAIN_ERRORS as exc:
        print(f"fracspec: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
