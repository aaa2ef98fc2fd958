"""Command line entry point: boxheat <subcommand> ...

Exit codes: 0 when every check passes, 1 when a check fails, 2 for bad input.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import duhamel, geometry, harness, qse, solver, synthesis
from .errors import BoxHeatError, ConfigInvalid, InvalidPolynomial
from .reports import _jsonable
from .svgplot import scatter_with_line


def _complex(text: str) -> complex:
    try:
        parts = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected re,im but got {text!r}") from exc
    if len(parts) == 1:
        return complex(parts[0], 0.0)
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected re,im but got {text!r}")
    return complex(*parts)


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a comma separated list, got {text!r}") from exc


def _poly(args) -> geometry.SubharmonicPolynomial:
    if args.poly:
        return geometry.SubharmonicPolynomial.load(args.poly)
    models = geometry.standard_models()
    if args.model not in models:
        raise ConfigInvalid(f"unknown model {args.model!r}; choose from {sorted(models)}")
    return models[args.model]


def _emit(obj, out: str | None):
    text = json.dumps(_jsonable(obj), indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def cmd_geometry(args) -> int:
    p = _poly(args)
    rows = geometry.geometry_rows(p, args.z, args.delta)
    doc = {"rows": [{"z": z, "delta": d, "Lambda": lam, "mu_of_Lambda": mu, "ratio": r}
                    for z, d, lam, mu, r in rows],
           "relative_inverse_constant": geometry.relative_inverse_constant(p, args.z, args.delta)}
    if len(args.z) >= 2:
        z, w = args.z[0], args.z[1]
        doc["twist"] = geometry.twist(p, z, w)
        doc["control_distance"] = geometry.control_distance(
            p, geometry.MetricPoint(z, args.t), geometry.MetricPoint(w, 0.0))
    _emit(doc, args.out)
    return 0


def cmd_qse(args) -> int:
    if args.moments:
        m = json.loads(Path(args.moments).read_text())
        prof = qse.moments_to_decay(m, args.beta)
        _emit({"a": prof.a, "beta": prof.beta, "C": prof.C, "A": prof.A}, args.out)
        return 0
    ts = np.logspace(np.log10(args.tmin), np.log10(args.tmax), args.nt)
    rows = qse.sandwich_rows(args.a, args.beta, ts)
    _emit({"beta": args.beta, "a": args.a,
           "rows": [{"t": t, "lower": lo, "integer": mid, "upper": up} for t, lo, mid, up in rows]},
          args.out)
    return 0


def cmd_solve(args) -> int:
    p = _poly(args)
    cfg = solver.SolverConfig.from_json(json.loads(Path(args.config).read_text())) \
        if args.config else solver.SolverConfig()
    spec = solver.GridSpec(args.radius, args.n_side)
    ops = solver.WeightedOperatorSet(p, args.tau, spec, cfg.order)
    sl = solver.kernel_column(ops, args.w, args.s, cfg, args.variant)
    sl.write(f"{args.out}.json", f"{args.out}.csv")
    print(json.dumps(_jsonable(sl.header()), sort_keys=True))
    return 0


def cmd_synthesize(args) -> int:
    p = _poly(args)
    ts = np.linspace(args.tmin, args.tmax, args.nt)
    cfg = synthesis.SynthesisConfig(eps=args.eps, n_tau_max=args.n_tau, n_side=args.n_side,
                                    check_truncation=not args.no_truncation_check)
    k = synthesis.synthesize(p, args.z, args.w, args.s, ts, None, cfg)
    Path(f"{args.out}.json").write_text(json.dumps(_jsonable(k.header()), indent=2, sort_keys=True))
    with open(f"{args.out}.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "re", "im", "error"])
        for t, v, e in k.rows():
            w.writerow([repr(t), repr(v.real), repr(v.imag), repr(e)])
    if args.svg:
        xs, ys, _ = synthesis.decay_samples(p, [k], restrict=False)
        if len(xs) >= 2:
            slope, icpt = np.polyfit(xs, ys, 1)
        else:
            slope, icpt = 0.0, 0.0
        Path(f"{args.out}.svg").write_text(scatter_with_line(xs, ys, icpt, slope, "d^2 / s",
                                                             "log(|H| V)"))
    print(json.dumps({"resolved": int(k.resolved.sum()), "samples": len(ts)}))
    return 0


def cmd_duhamel(args) -> int:
    doc = {"n": args.n, "count": duhamel.binet(args.n),
           "coefficients": duhamel.coefficient_histogram(args.n)}
    if args.pattern:
        spec = duhamel.TimeChainSpec(args.n, args.pattern, args.s)
        doc["pattern"] = args.pattern
        doc["s"] = args.s
        doc["chain_value"] = duhamel.time_chain(spec)
    _emit(doc, args.out)
    return 0


def _summary(reports) -> int:
    for r in reports:
        flag = "PASS" if r["passed"] else "FAIL"
        detail = (f"defect={r['defect']:.3g} tol={r['tolerance']:.3g}"
                  if r.get("defect") is not None else f"C={r['C']:.4g} c={r['c']:.4g}")
        print(f"{flag} {r['claim_id']:<45} {r['kind']:<10} {detail}")
    ok = all(r["passed"] for r in reports)
    print("all checks passed" if ok else "some checks failed")
    return 0 if ok else 1


def cmd_verify(args) -> int:
    cfg = harness.ExperimentConfig.load(args.config) if args.config else harness.ExperimentConfig()
    if args.out:
        cfg.output_dir = args.out
    reports = harness.run_suite(cfg)
    return _summary([r.to_dict() for r in reports])


def cmd_report(args) -> int:
    doc = harness.load_report(args.input)
    return _summary(doc["reports"])


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="boxheat", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def poly_args(sp):
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--poly", help="polynomial JSON file")
        g.add_argument("--model", default="heisenberg", help="built-in model name")
        sp.add_argument("--out", help="output path (prefix for solve and synthesize)")

    sp = sub.add_parser("geometry", help="size functions, twist and control distance")
    poly_args(sp)
    sp.add_argument("--z", type=_complex, nargs="+", default=[0j])
    sp.add_argument("--delta", type=_floats, default=[0.1, 1.0, 10.0])
    sp.add_argument("--t", type=float, default=1.0)
    sp.set_defaults(func=cmd_geometry)

    sp = sub.add_parser("qse", help="decay/derivative-growth sandwich or moments to decay")
    sp.add_argument("--beta", type=float, default=1.0)
    sp.add_argument("--a", type=float, default=1.0)
    sp.add_argument("--tmin", type=float, default=0.01)
    sp.add_argument("--tmax", type=float, default=100.0)
    sp.add_argument("--nt", type=int, default=20)
    sp.add_argument("--moments", help="JSON list of moment bounds M_0, M_1, ...")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_qse)

    sp = sub.add_parser("solve", help="heat kernel column H(s, ., w) on a grid")
    poly_args(sp)
    sp.add_argument("--tau", type=float, required=True)
    sp.add_argument("--w", type=_complex, default=0j)
    sp.add_argument("--s", type=_floats, required=True)
    sp.add_argument("--radius", type=float, default=6.0)
    sp.add_argument("--n-side", type=int, default=97)
    sp.add_argument("--variant", choices=["forms", "functions"], default="forms")
    sp.add_argument("--config", help="solver config JSON")
    sp.set_defaults(func=cmd_solve, out="kernel")

    sp = sub.add_parser("synthesize", help="space-time kernel by inverse transform in tau")
    poly_args(sp)
    sp.add_argument("--z", type=_complex, default=0j)
    sp.add_argument("--w", type=_complex, default=0j)
    sp.add_argument("--s", type=float, required=True)
    sp.add_argument("--tmin", type=float, required=True)
    sp.add_argument("--tmax", type=float, required=True)
    sp.add_argument("--nt", type=int, default=8)
    sp.add_argument("--eps", type=float, default=1e-6)
    sp.add_argument("--n-tau", type=int, default=65)
    sp.add_argument("--n-side", type=int, default=65)
    sp.add_argument("--svg", action="store_true")
    sp.add_argument("--no-truncation-check", action="store_true")
    sp.set_defaults(func=cmd_synthesize, out="spacetime")

    sp = sub.add_parser("duhamel", help="path counts, coefficients and time chains")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--pattern", choices=duhamel.PATTERNS)
    sp.add_argument("--s", type=float, default=1.0)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_duhamel)

    sp = sub.add_parser("verify", help="run the check suite")
    sp.add_argument("--config", help="experiment config JSON")
    sp.add_argument("--out", help="output directory (overrides the config)")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("report", help="summarize a written report")
    sp.add_argument("input", help="report.json")
    sp.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        return args.func(args)
    except (ConfigInvalid, InvalidPolynomial, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BoxHeatError as exc:
        print(f"check failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
