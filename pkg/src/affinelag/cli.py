"""Command line: ``affinelag pipeline|catalog|classify``.

Exit codes: 0 success, 1 parse error, 2 no multiplier, 3 construction
failure, 4 verification failure, 5 I/O error.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import sympy as sp

from . import catalog, multiplier, numverify, pipeline, sysfile
from .errors import AffineLagError, SamplingError, UnboundSymbolError
from .symlang import Domain, equivalent, parse, render

EXIT_IO = 5

# concrete functions substituted into force templates by ``classify``
_INSTANCE = {
    "phi": "x^2 + t",
    "k": None,  # set from the template's argument
    "Phi": "1 + v^2",
    "A": "t*x",
    "a": "exp(t)",
    "b": "1 + v^2",
}


def _dump(report, fmt):
    if fmt == "text":
        return pipeline.render_text(report)
    return json.dumps(report, indent=2) + "\n"


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _error_object(exc, code):
    d = exc.to_dict() if isinstance(exc, AffineLagError) else {"kind": "io-error", "message": str(exc)}
    return {"schema": pipeline.SCHEMA, "error": d, "exit_code": code, "pass": False}


def _load_target(target):
    if os.path.exists(target) or target.endswith(".toml"):
        return sysfile.load(target)
    try:
        return catalog.get(target)
    except KeyError:
        raise FileNotFoundError(f"no such file or catalog entry: {target}") from None


def _options(args):
    return pipeline.Options(
        all_families=args.all_families, h=args.h, tspan=args.tspan, seed=args.seed,
        tolerance=args.tolerance_numeric, timing=args.timing,
    )


def cmd_pipeline(args):
    sf = _load_target(args.target)
    result = pipeline.run(sf, _options(args))
    _emit(_dump(result.report, args.format), args.out)
    if args.csv and result.trajectory is not None:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            result.trajectory.to_csv(fh)
    return result.exit_code


def _run_entry(sf, opts):
    result = pipeline.run(sf, opts)
    return result.report, result.exit_code


def cmd_catalog(args):
    entries = catalog.entries()
    if args.action == "list":
        lines = [f"{e.name:<30} {'' if e.executable else '(doc) '}{e.description}" for e in entries]
        sys.stdout.write("\n".join(lines) + "\n")
        return 0
    entries += [sysfile.load(p) for p in args.extra]
    runnable = [e for e in entries if e.executable]
    opts = _options(args)
    if args.jobs == 1:
        results = [_run_entry(e, opts) for e in runnable]
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            # map() yields in submission order, so the report keeps catalog order
            results = list(pool.map(_run_entry, runnable, [opts] * len(runnable)))
    codes = [code for _, code in results]
    summary = {
        "schema": pipeline.SCHEMA,
        "executable": len(runnable),
        "passed": sum(1 for c in codes if c == 0),
        "documentation": [e.name for e in entries if not e.executable],
        "entries": [r for r, _ in results],
    }
    summary["pass"] = summary["passed"] == summary["executable"]
    if args.format == "text":
        text = "".join(pipeline.render_text(r) + "\n" for r, _ in results)
        text += f"{summary['passed']}/{summary['executable']} executable entries pass\n"
    else:
        text = json.dumps(summary, indent=2) + "\n"
    _emit(text, args.out)
    return max(codes, default=0)


def _instance_bindings(ff):
    out = {}
    for name, fargs in ff.placeholders.items():
        if name == "k":
            out[name] = "x" if fargs == (sp.Symbol("x"),) else "-t"
        else:
            out[name] = _INSTANCE[name]
    return out


def cmd_classify(args):
    mu = parse(args.mu, {}) if args.mu else None
    try:
        ff = multiplier.classify_force(args.shape, mu)
    except ValueError as exc:
        raise sysfile.SystemFileError(str(exc)) from None
    bindings = _instance_bindings(ff)
    force = multiplier.instantiate(ff.force, ff, {k: parse(v) for k, v in bindings.items()})
    mu_i = multiplier.instantiate(ff.multiplier, ff, {k: parse(v) for k, v in bindings.items()})
    residual = multiplier.force_residual(force, mu_i)
    domain = Domain({"x": (0, float("inf")), "t": (0, float("inf"))})
    checks = pipeline._Checks()
    try:
        checks.equivalence("force-roundtrip", equivalent(residual, 0, domain))
    except (SamplingError, UnboundSymbolError) as exc:
        checks.failure("force-roundtrip", str(exc))
    report = {
        "schema": pipeline.SCHEMA,
        "shape": ff.family,
        "force": render(ff.force),
        "multiplier": render(ff.multiplier),
        "placeholders": {k: [a.name for a in v] for k, v in ff.placeholders.items()},
        "instance": {"bindings": bindings, "force": render(force), "multiplier": render(mu_i)},
        "verifications": checks.items,
        "pass": checks.passed,
    }
    if args.format == "text":
        lines = [f"shape: {ff.family}", f"F = {report['force']}", f"mu = {report['multiplier']}",
                 f"instance: F = {report['instance']['force']}",
                 f"          mu = {report['instance']['multiplier']}",
                 ("PASS" if checks.passed else "FAIL")]
        text = "\n".join(lines) + "\n"
    else:
        text = json.dumps(report, indent=2) + "\n"
    _emit(text, args.out)
    return 0 if checks.passed else 4


def _common(p):
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--format", choices=("json", "text"), default="json")


def _numeric_flags(p):
    p.add_argument("--all-families", action="store_true", help="report every multiplier family that succeeds")
    p.add_argument("--h", type=float, default=1e-3, help="RK4 step (default 1e-3)")
    p.add_argument("--tspan", type=float, default=1.0, help="flow comparison span (default 1)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tolerance-numeric", type=float, default=numverify.FLOW_TOLERANCE)
    p.add_argument("--timing", action="store_true", help="include stage timings (not byte-stable)")


def build_parser():
    parser = argparse.ArgumentParser(prog="affinelag", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pipeline", help="run the full construction on a system file or catalog entry")
    p.add_argument("target", help="path to a .toml system file or a catalog entry name")
    _common(p)
    _numeric_flags(p)
    p.add_argument("--csv", metavar="PATH", help="write the reference RK4 trajectory")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("catalog", help="list or run the built-in examples")
    p.add_argument("action", choices=("list", "run-all"))
    _common(p)
    _numeric_flags(p)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--extra", nargs="*", default=[], metavar="FILE",
                   help="additional system files to run after the catalog")
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("classify", help="forces admitting a multiplier of a given shape")
    p.add_argument("shape", choices=multiplier.FORCE_SHAPES)
    p.add_argument("mu", nargs="?", help="multiplier in t, x, v (omit for the general template)")
    _common(p)
    p.set_defaults(func=cmd_classify)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except AffineLagError as exc:
        sys.stderr.write(json.dumps(_error_object(exc, exc.exit_code)) + "\n")
        return exc.exit_code
    except OSError as exc:
        sys.stderr.write(json.dumps(_error_object(exc, EXIT_IO)) + "\n")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
