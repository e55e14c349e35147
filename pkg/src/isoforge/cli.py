"""``forge`` command line.

Exit status: 0 when every check passes, 1 when a verification (or a
construction's own precondition) fails, 2 for usage, format, registry and
capacity errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

from . import __version__
from .constructors import predict_combine, predict_combine_eliminate, predict_corollary1
from .errors import CapacityError, ForgeError, FormatError, PreconditionError
from .tensor import PureState

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def gallery_dir() -> Path:
    return Path(str(resources.files("isoforge").joinpath("recipes")))


def gallery_names() -> list[str]:
    return sorted(p.stem for p in gallery_dir().glob("*.json"))


def _resolve_recipe(arg: str) -> Path:
    p = Path(arg)
    if p.exists():
        return p
    for cand in (gallery_dir() / f"{arg}.json", gallery_dir() / "out_of_scale" / f"{arg}.json"):
        if cand.exists():
            return cand
    raise FormatError(f"recipe {arg!r} not found (not a file, not a gallery name)")


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


# -- commands -----------------------------------------------------------------


def cmd_run(args) -> int:
    from .pipeline.execute import execute
    from .pipeline.recipe import load_recipe

    g = load_recipe(_resolve_recipe(args.recipe))
    if args.seed is not None:
        g.seed = args.seed
    out = args.out
    res = execute(g, out_dir=out, report_path=args.report, tol=args.tol, threads=args.threads,
                  cache_dir=args.cache, timing=args.timing)
    if not args.quiet:
        for nid, pred in res.predictions.items():
            print(f"prediction {nid}: " + ", ".join(f"{k}={v}" for k, v in pred.items() if k != "kind"))
        for rep in res.reports:
            print(rep.summary())
        for nid, path in res.files.items():
            print(f"wrote {path}")
    verdict = "PASS" if res.passed else "FAIL"
    print(f"{g.name}: {verdict} ({sum(r.passed for r in res.reports)}/{len(res.reports)} checks)")
    return EXIT_OK if res.passed else EXIT_FAIL


def cmd_gallery(args) -> int:
    if args.action == "list":
        for name in gallery_names():
            print(name)
        return EXIT_OK
    status = EXIT_OK
    for name in args.names or gallery_names():
        out = Path(args.out) / name if args.out else None
        ns = argparse.Namespace(recipe=name, out=out, report=None, tol=args.tol, threads=args.threads,
                                seed=None, cache=None, timing=False, quiet=True)
        status = max(status, cmd_run(ns))
    return status


def cmd_verify(args) -> int:
    from .pipeline.io import read_any, write_report
    from .verify import state_uniformity, subspace_uniformity, verify_pure_code

    obj = read_any(args.file)
    target = Path(args.file).name
    if args.uniform is not None:
        if isinstance(obj, PureState):
            rep = state_uniformity(obj, args.uniform, args.tol, args.threads, target)
        else:
            rep = subspace_uniformity(obj, args.uniform, args.tol, args.threads, target)
    else:
        W = obj.as_subspace() if isinstance(obj, PureState) else obj
        rep = verify_pure_code(W, args.pure_distance, args.tol, args.threads, target)
    print(rep.summary())
    if not rep.passed and rep.worst is not None:
        print(f"worst: {json.dumps(rep.worst)}")
    if args.report:
        write_report(args.report, {"format_version": 1, "kind": "report", "passed": rep.passed,
                                   "checks": [rep.to_dict(args.timing)]})
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_codes(args) -> int:
    from .registry import registry_entries, registry_get, registry_materialize, selfcheck, stabilizer_spec

    if args.action == "list":
        for e in registry_entries():
            flag = "  [optional, external data]" if e.optional else ""
            alias = f"  aka {', '.join(e.aliases)}" if e.aliases else ""
            print(f"{e.name:16s} {e.label():18s} {e.kind}{alias}{flag}")
        return EXIT_OK
    if args.action == "show":
        if not args.names:
            _err("codes show needs a code name")
            return EXIT_USAGE
        for name in args.names:
            e = registry_get(name)
            print(f"name:        {e.name}")
            print(f"parameters:  {e.label()}  (n={e.n}, K={e.K}, d={e.d}, D={e.D})")
            print(f"QMDS:        {'yes' if e.is_qmds else 'no'}")
            print(f"realization: {json.dumps(e.realization)}")
            if e.aliases:
                print(f"aliases:     {', '.join(e.aliases)}")
            if e.kind in ("stabilizer", "css_grs") or e.realization.get("op") == "expand":
                spec = stabilizer_spec(e)
                for gen in spec.generators():
                    print(f"  generator  {gen}")
            if args.materialize:
                W = registry_materialize(e)
                print(f"materialized {W.K}-dim subspace of {W.shape}, pure at distance {e.d}")
        return EXIT_OK
    results = selfcheck(args.names or None, include_optional=args.include_optional, threads=args.threads)
    ok = True
    for entry, pure, unif in results:
        print(pure.summary())
        print(unif.summary())
        ok = ok and pure.passed and unif.passed
    return EXIT_OK if ok else EXIT_FAIL


def cmd_predict(args) -> int:
    v = args.values
    if args.what == "combine":
        if len(v) != 4:
            _err("predict combine takes n1 r1 n2 r2")
            return EXIT_USAGE
        out = {"l": predict_combine(*v)}
    elif args.what == "combine_eliminate":
        if len(v) != 8:
            _err("predict combine_eliminate takes n1 r1 D1 n2 r2 D2 alpha beta")
            return EXIT_USAGE
        p = predict_combine_eliminate(*v)
        out = {"l": p.l, "dim": p.dim}
    else:
        if len(v) != 2:
            _err("predict corollary1 takes n d")
            return EXIT_USAGE
        out = {"d": predict_corollary1(*v)}
    print(json.dumps(out) if args.json else " ".join(f"{k}={val}" for k, val in out.items()))
    return EXIT_OK


# -- parser ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="forge", description="Build and verify r-uniform states and subspaces.")
    ap.add_argument("--version", action="version", version=f"forge {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--tol", type=float, default=None, help="absolute tolerance (default 1e-9)")
        p.add_argument("--threads", type=int, default=None, help="worker threads for subset checks")

    run = sub.add_parser("run", help="execute a recipe (file path or gallery name)")
    run.add_argument("recipe")
    run.add_argument("--out", help="directory for output state/subspace files and report.json")
    run.add_argument("--report", help="report file (default OUT/report.json)")
    run.add_argument("--seed", type=int, default=None, help="override the recipe seed")
    run.add_argument("--cache", help="directory for the content-addressed node cache")
    run.add_argument("--timing", action="store_true", help="include wall times in the report")
    run.add_argument("--quiet", action="store_true")
    common(run)
    run.set_defaults(func=cmd_run)

    gal = sub.add_parser("gallery", help="list or run the built-in recipes")
    gal.add_argument("action", choices=["list", "run"])
    gal.add_argument("names", nargs="*")
    gal.add_argument("--out")
    common(gal)
    gal.set_defaults(func=cmd_gallery)

    ver = sub.add_parser("verify", help="check a state or subspace file")
    ver.add_argument("file")
    mode = ver.add_mutually_exclusive_group(required=True)
    mode.add_argument("--uniform", type=int, metavar="R")
    mode.add_argument("--pure-distance", type=int, metavar="D")
    ver.add_argument("--report")
    ver.add_argument("--timing", action="store_true")
    common(ver)
    ver.set_defaults(func=cmd_verify)

    codes = sub.add_parser("codes", help="inspect the code registry")
    codes.add_argument("action", choices=["list", "show", "selfcheck"])
    codes.add_argument("names", nargs="*")
    codes.add_argument("--include-optional", action="store_true")
    codes.add_argument("--materialize", action="store_true", help="with show: build and verify the codespace")
    codes.add_argument("--threads", type=int, default=None)
    codes.set_defaults(func=cmd_codes)

    pred = sub.add_parser("predict", help="closed-form uniformity/distance predictions")
    pred.add_argument("what", choices=["combine", "combine_eliminate", "corollary1"])
    pred.add_argument("values", nargs="+", type=int)
    pred.add_argument("--json", action="store_true")
    pred.set_defaults(func=cmd_predict)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if getattr(args, "tol", None) is None and args.command == "verify":
        args.tol = 1e-9
    try:
        return args.func(args)
    except CapacityError as exc:
        _err(f"capacity error: {exc}")
        return EXIT_USAGE
    except ForgeError as exc:
        cause = getattr(exc, "cause", None)
        if isinstance(cause, CapacityError):
            _err(f"capacity error: {exc}")
            return EXIT_USAGE
        if isinstance(cause, PreconditionError) or isinstance(exc, PreconditionError):
            _err(f"construction failed: {exc}")
            return EXIT_FAIL
        _err(f"error: {exc}")
        return EXIT_USAGE
    except BrokenPipeError:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
