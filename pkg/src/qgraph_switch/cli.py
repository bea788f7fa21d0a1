"""Command-line interface.

Every command writes its outputs plus ``manifest.json`` (input hashes,
versions, seed, tolerances, timestamp) into ``--out``.

Exit codes: 0 success, 2 invalid input, 3 numerical certification failure,
4 a verified bound was exceeded.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import platform
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path

import numpy as np
import scipy

from . import discrete, ensemble, fixtures, lemmas, metric, oracle, shift, transform
from .graph import DomainError, EdgeEndpoint, GraphError, MetricGraph, PreconditionError, check

log = logging.getLogger("qgraph_switch")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_VIOLATION = 0, 2, 3, 4


class PropertyViolation(RuntimeError):
    pass


# ---------------------------------------------------------------- io helpers


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise PreconditionError(f"cannot read {path}: {exc}") from exc


def _sha256(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _load_graph(path: str) -> MetricGraph:
    return check(MetricGraph.from_json(_read(path)))


def _load_lengths(path: str) -> list[float]:
    try:
        data = json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise PreconditionError(f"{path}: {exc}") from exc
    if isinstance(data, dict):
        data = data.get("lengths")
    if not isinstance(data, list) or not all(isinstance(x, (int, float)) and x > 0 for x in data):
        raise PreconditionError(f"{path}: expected a list of positive lengths")
    return [float(x) for x in data]


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _manifest(args: argparse.Namespace, out: Path, inputs: dict, extra: dict | None = None) -> None:
    config = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    data = {
        "command": args.command,
        "config": config,
        "inputs": {k: {"path": p, "sha256": _sha256(p)} for k, p in inputs.items() if p},
        "versions": {
            "package": _version(),
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "seed": getattr(args, "seed", None),
        "tolerances": {"tol": getattr(args, "tol", None), "merge_tol": getattr(args, "merge_tol", None)},
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    data.update(extra or {})
    (out / "manifest.json").write_text(json.dumps(data, indent=2, sort_keys=True, default=str) + "\n")


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _spectrum(g: MetricGraph, args) -> metric.Spectrum:
    kw = {"tol": args.tol, "merge_tol": args.merge_tol}
    if getattr(args, "kmax", None):
        return metric.eigenvalues_up_to(g, args.kmax, **kw)
    return metric.first_levels(g, args.levels, **kw)


def _pair(fn, xs, jobs: int):
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, xs))
    return [fn(x) for x in xs]


def _spectrum_rows(spec: metric.Spectrum):
    rows = [(0, 0.0, 0.0, spec.zero_modes)] if spec.zero_modes else []
    for i, (k, m) in enumerate(zip(spec.k, spec.multiplicity), start=len(rows)):
        rows.append((i, float(k), float(k * k), int(m)))
    return rows


# ---------------------------------------------------------------- commands


def cmd_spectrum(args) -> int:
    out = _outdir(args)
    g = _load_graph(args.graph)
    spec = _spectrum(g, args)
    _write_csv(out / "spectrum.csv", ["index", "k", "E", "multiplicity"], _spectrum_rows(spec))
    _manifest(args, out, {"graph": args.graph}, {"k_max": spec.k_max, "levels": len(spec)})
    print(f"{len(spec)} levels below k = {spec.k_max:.6g}")
    return EXIT_OK


def _load_discrete(path: str) -> np.ndarray:
    return discrete.assemble(discrete.DiscreteGraph.from_json(_read(path)))


def cmd_dspectrum(args) -> int:
    out = _outdir(args)
    ev = discrete.eigenvalues(_load_discrete(args.graph))
    _write_csv(out / "eigenvalues.csv", ["index", "E"], list(enumerate(ev.tolist())))
    _manifest(args, out, {"graph": args.graph})
    print(f"{len(ev)} eigenvalues")
    return EXIT_OK


def cmd_dswitch(args) -> int:
    out = _outdir(args)
    H = _load_discrete(args.graph)
    Hs = discrete.discrete_edge_switch(H, args.A, args.B, args.a_next, args.b_next)
    ea, eb = discrete.eigenvalues(H), discrete.eigenvalues(Hs)
    rng = np.random.default_rng(args.seed)
    scale = max(np.abs(H).sum(axis=1).max(), 1.0)
    grid, rejected = discrete.safe_energies([ea, eb], args.energies, rng, 1e-6 * scale)
    dN = discrete.counts(ea, grid) - discrete.counts(eb, grid)
    _write_csv(out / "shift.csv", ["E", "dN"], zip(grid.tolist(), dN.tolist()))
    verdict = {"max_abs_dN": int(np.abs(dN).max()), "bound": 1, "redrawn": rejected}
    (out / "verdict.json").write_text(json.dumps(verdict, indent=2, sort_keys=True) + "\n")
    _manifest(args, out, {"graph": args.graph})
    print(json.dumps(verdict, sort_keys=True))
    if verdict["max_abs_dN"] > 1:
        raise PropertyViolation(f"discrete switch shifted the count by {verdict['max_abs_dN']} > 1")
    return EXIT_OK


def cmd_transform(args) -> int:
    out = _outdir(args)
    g = _load_graph(args.graph)
    ts = transform.read_log(_read(args.transform))
    prims = []
    cur = g
    for t in ts:
        prims.extend(transform.decompose(t, cur))
        cur = transform.apply(cur, t)
    (out / "graph.json").write_text(cur.to_json(indent=2) + "\n")
    (out / "primitives.jsonl").write_text(transform.write_log(prims))
    _manifest(args, out, {"graph": args.graph, "transform": args.transform}, {"shift_bound": transform.shift_bound(ts)})
    print(f"applied {len(ts)} edits ({len(prims)} primitive steps); interlacing bound {transform.shift_bound(ts)}")
    return EXIT_OK


def cmd_shift(args) -> int:
    out = _outdir(args)
    g = _load_graph(args.graph)
    ts = transform.read_log(_read(args.transform))
    h = transform.apply_all(g, ts)
    a, b = _pair(lambda x: _spectrum(x, args), [g, h], args.jobs)
    bound = transform.shift_bound(ts)
    rep = shift.shift_report(a, b, args.samples, args.seed, {"bound": bound, "edits": [t.to_dict() for t in ts]})
    (out / "report.json").write_text(rep.to_json() + "\n")
    _write_csv(out / "histogram.csv", ["dN", "count"], rep.histogram_rows())
    _manifest(args, out, {"graph": args.graph, "transform": args.transform})
    print(f"interlacing degree {rep.degree} (bound {bound}); histogram {dict(rep.histogram_rows())}")
    if rep.degree > bound or rep.max_abs > bound:
        raise PropertyViolation(f"interlacing degree {rep.degree} exceeds the bound {bound}")
    return EXIT_OK


def cmd_verify_lemmas(args) -> int:
    out = _outdir(args)
    bad = 0
    lines = []
    for i in range(args.fixtures):
        seed = args.seed + i
        fx = lemmas.make_fixture(args.n, args.rank, seed, reflection=True)
        r1 = lemmas.verify_rank_bound(fx, args.energies, seed)
        r2 = lemmas.verify_reflection_bound(fx, args.energies, seed)
        ok = r1.ok and r2.ok and r2.antisymmetry <= 1e-10
        bad += not ok
        lines.append(json.dumps({
            "seed": seed,
            "rank": r1.rank,
            "rank_bound": {"max_shift": r1.max_shift, "bound": r1.bound, "ok": r1.ok},
            "reflection_bound": {
                "max_shift": r2.max_shift, "bound": r2.bound, "ok": r2.ok,
                "dH_positive": r2.n_positive, "dH_negative": r2.n_negative,
                "antisymmetry": r2.antisymmetry,
            },
            "ok": ok,
        }, sort_keys=True))
    (out / "verdicts.jsonl").write_text("\n".join(lines) + "\n")
    _manifest(args, out, {})
    print(f"{args.fixtures - bad}/{args.fixtures} fixtures within both bounds")
    if bad:
        raise PropertyViolation(f"{bad} fixtures violated a bound")
    return EXIT_OK


def cmd_oracle(args) -> int:
    out = _outdir(args)
    g = _load_graph(args.graph)
    res = oracle.oracle_eigenvalues(g, args.levels, h=args.h)
    rows = [(i, E, err, o) for i, (E, err, o) in enumerate(zip(res.E.tolist(), res.error_estimate.tolist(), res.order.tolist()))]
    _write_csv(out / "oracle.csv", ["index", "E", "error_estimate", "order"], rows)
    _manifest(args, out, {"graph": args.graph})
    print(f"{args.levels} levels; observed orders {np.nanmin(res.order):.3f}..{np.nanmax(res.order):.3f}" if np.any(np.isfinite(res.order)) else f"{args.levels} levels")
    return EXIT_OK


def cmd_ensemble(args) -> int:
    out = _outdir(args)
    topo = _load_graph(args.topology)
    lengths = _load_lengths(args.lengths)
    inputs = {"topology": args.topology, "lengths": args.lengths}
    if args.mode == "walk":
        res = ensemble.walk(topo, lengths, args.steps, args.seed)
        dist = res.distances()
        rows = [(t, " ".join(map(str, p)), int(d)) for t, (p, d) in enumerate(zip(res.perms.tolist(), dist))]
        _write_csv(out / "trajectory.csv", ["step", "perm", "distance"], rows)
        extra = {}
        if len(topo.edges) <= 7:
            stat, p, seen = ensemble.visit_uniformity(res)
            extra = {"chi2": stat, "p_value": p, "states_visited": seen}
        _manifest(args, out, inputs, extra)
        print(json.dumps(extra, sort_keys=True) if extra else f"{args.steps} steps")
        return EXIT_OK
    rows = ensemble.shift_vs_distance(topo, lengths, args.pairs, args.seed, args.levels)
    _write_csv(out / "pairs.csv", ["delta", "r"], rows)
    _manifest(args, out, inputs)
    worst = [r for r in rows if r[1] > 2 * r[0]]
    print(f"{len(rows)} pairs; max r - 2*delta = {max(r - 2 * d for d, r in rows)}")
    if worst:
        raise PropertyViolation(f"{len(worst)} pairs with r > 2 delta")
    return EXIT_OK


FIG3_SWITCH = (EdgeEndpoint(0, "head"), EdgeEndpoint(5, "head"))
FIG3_SWAP = (0, 5)


def cmd_figure3(args) -> int:
    out = _outdir(args)
    g = fixtures.tetrahedron()
    graphs = [g, transform.edge_switch(g, *FIG3_SWITCH), transform.edge_swap(g, *FIG3_SWAP)]
    base, sw, sp = _pair(lambda x: metric.first_levels(x, args.levels), graphs, args.jobs)
    summary = {}
    for name, other, bound in (("switch", sw, 1), ("swap", sp, 2)):
        rep = shift.shift_report(base, other, args.samples, args.seed)
        _write_csv(out / f"{name}_histogram.csv", ["dN", "count"], rep.histogram_rows())
        summary[name] = {"degree": rep.degree, "bound": bound, "histogram": {str(k): v for k, v in rep.histogram_rows()}}
    (out / "figure3.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    _manifest(args, out, {}, {"lengths": fixtures.tetra_lengths()})
    print(json.dumps({k: v["degree"] for k, v in summary.items()}))
    if summary["switch"]["degree"] > 1 or summary["swap"]["degree"] > 2:
        raise PropertyViolation("tetrahedron shift exceeds its bound")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qgswitch", description="Quantum-graph spectra and edge-switch interlacing.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=False):
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--jobs", type=int, default=1)
        if seed:
            sp.add_argument("--seed", type=int, default=0)

    def solver(sp):
        sp.add_argument("--kmax", type=float, help="compute all levels with k below this")
        sp.add_argument("--levels", type=int, default=100, help="compute at least this many levels")
        sp.add_argument("--tol", type=float, default=1e-13)
        sp.add_argument("--merge-tol", type=float, default=1e-9)

    sp = sub.add_parser("spectrum", help="metric-graph eigenvalues")
    sp.add_argument("--graph", required=True)
    solver(sp)
    common(sp)
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("dspectrum", help="discrete-graph eigenvalues")
    sp.add_argument("--graph", required=True)
    common(sp)
    sp.set_defaults(func=cmd_dspectrum)

    sp = sub.add_parser("dswitch", help="spectral shift of a discrete edge switch")
    sp.add_argument("--graph", required=True)
    for name in ("A", "B", "a-next", "b-next"):
        sp.add_argument(f"--{name}", type=int, required=True)
    sp.add_argument("--energies", type=int, default=200)
    common(sp, seed=True)
    sp.set_defaults(func=cmd_dswitch)

    sp = sub.add_parser("transform", help="apply a transformation log")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--transform", required=True)
    common(sp)
    sp.set_defaults(func=cmd_transform)

    sp = sub.add_parser("shift", help="spectral shift and interlacing degree of a transformation")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--transform", required=True)
    sp.add_argument("--samples", type=int, default=10_000)
    solver(sp)
    common(sp, seed=True)
    sp.set_defaults(func=cmd_shift)

    sp = sub.add_parser("verify-lemmas", help="random checks of the rank and reflection bounds")
    sp.add_argument("--n", type=int, default=30)
    sp.add_argument("--rank", type=int, default=2)
    sp.add_argument("--fixtures", type=int, default=100)
    sp.add_argument("--energies", type=int, default=100)
    common(sp, seed=True)
    sp.set_defaults(func=cmd_verify_lemmas)

    sp = sub.add_parser("oracle", help="finite-difference reference eigenvalues")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--levels", type=int, default=10)
    sp.add_argument("--h", type=float)
    common(sp)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("ensemble", help="length-arrangement ensemble")
    sp.add_argument("mode", choices=["walk", "pairs"])
    sp.add_argument("--topology", required=True)
    sp.add_argument("--lengths", required=True)
    sp.add_argument("--steps", type=int, default=1000)
    sp.add_argument("--pairs", type=int, default=50)
    sp.add_argument("--levels", type=int, default=ensemble.SUMMARY_LEVELS)
    common(sp, seed=True)
    sp.set_defaults(func=cmd_ensemble)

    sp = sub.add_parser("figure3", help="switch and swap histograms on the tetrahedron fixture")
    sp.add_argument("--levels", type=int, default=10_000)
    sp.add_argument("--samples", type=int, default=10_000)
    common(sp, seed=True)
    sp.set_defaults(func=cmd_figure3)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except PropertyViolation as exc:
        print(f"PROPERTY VIOLATION: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except (metric.SpectrumError, oracle.ConvergenceError) as exc:
        print(f"certification failed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (GraphError, PreconditionError, DomainError, discrete.DiscreteGraphError, NotImplementedError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
