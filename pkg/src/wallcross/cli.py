"""Command-line entry point.

    wallcross pentagon --order 12
    wallcross stab product --file data.json --sector "1,0:-1,1"
    wallcross cover canon --file small.json
    wallcross res thimble --poly "x^3/3-x" --t "0.01+0.002j"
    wallcross repro airy --out airy.json
    wallcross run job.json

Exit status: 0 when every certificate passes, 1 when one fails, 2 for
malformed input (the message names the offending key), 3 for errors raised by
the computation itself.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import jsonio
from .config import JobConfig, Precision, Truncation, default_tol
from .jsonio import SchemaError

EXIT_OK, EXIT_FAIL, EXIT_SCHEMA, EXIT_MODULE = 0, 1, 2, 3


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--order", type=int, help="lattice truncation degree N (default 12)")
    p.add_argument("--depth", type=int, help="chain depth for Psi sums (default 5)")
    p.add_argument("--tol", type=float, help="numerical tolerance (default $WALLCROSS_TOL or 1e-10)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the JSON report here as well as to stdout")
    p.add_argument("--quiet", action="store_true", help="do not print the report")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    ap = argparse.ArgumentParser(prog="wallcross", description="Exact wall-crossing algebra and resurgence checks.")
    sub = ap.add_subparsers(dest="group", required=True)

    sub.add_parser("pentagon", parents=[common], help="check the pentagon identity at --order")

    stab = sub.add_parser("stab", help="stability data").add_subparsers(dest="verb", required=True)
    for name in ("rays", "product", "factorize", "transport", "growth"):
        q = stab.add_parser(name, parents=[common])
        q.add_argument("--file", required=name != "growth")
        if name in ("product", "factorize", "transport"):
            q.add_argument("--sector", required=name != "transport", help="'re,im:re,im', clockwise edge first")
        if name == "factorize":
            q.add_argument("--ray", required=True, help="'re,im'")
        if name == "transport":
            q.add_argument("--path", required=True, help="JSON file with a 'path' list of charges")
        if name == "rays":
            q.add_argument("--start")
        if name == "growth":
            q.add_argument("--planted", help="rational r for a planted geometric element")
            q.add_argument("--norm", choices=["l1", "l2", "linf"])

    cover = sub.add_parser("cover", help="cyclic covers").add_subparsers(dest="verb", required=True)
    for name in ("validate", "min", "canon", "rewrite"):
        q = cover.add_parser(name, parents=[common])
        q.add_argument("--file", required=True)
        if name == "rewrite":
            q.add_argument("--trace", action="store_true")

    hlt = sub.add_parser("hlt", help="connections").add_subparsers(dest="verb", required=True)
    for name in ("invariants", "flat", "normalize"):
        q = hlt.add_parser(name, parents=[common])
        q.add_argument("--file", required=True)
        if name == "normalize":
            q.add_argument("--method", choices=["s0", "sj"])

    res = sub.add_parser("res", help="resurgence").add_subparsers(dest="verb", required=True)
    q = res.add_parser("thimble", parents=[common])
    q.add_argument("--poly", required=True)
    q.add_argument("--t", required=True, help="complex values separated by ';'")
    q.add_argument("--index", type=int)
    q.add_argument("--csv")
    q = res.add_parser("psi", parents=[common])
    q.add_argument("--stokes", required=True)
    q.add_argument("--t", required=True)
    q.add_argument("--radius", type=float)
    q.add_argument("--csv")
    q = res.add_parser("borel", parents=[common])
    g = q.add_mutually_exclusive_group(required=True)
    g.add_argument("--series")
    g.add_argument("--poly")
    q.add_argument("--index", type=int)
    ev = res.add_parser("ev", help="gluing of two half-discs").add_subparsers(dest="evverb", required=True)
    q = ev.add_parser("solve", parents=[common])
    q.add_argument("--file")
    q.add_argument("--a-plus", dest="a_plus", help="coefficients of f+, separated by ';'")
    q.add_argument("--a-minus", dest="a_minus")
    q.add_argument("--delta", type=float)
    q = ev.add_parser("check", parents=[common])
    q.add_argument("--file", help="JSON with 'c' and/or 'g' rational lists")

    q = sub.add_parser("repro", parents=[common], help="run acceptance suites")
    q.add_argument("suites", nargs="*", default=["all"])

    q = sub.add_parser("run", parents=[common], help="run a JSON job config")
    q.add_argument("config")
    return ap


_SKIP = {"group", "verb", "evverb", "order", "depth", "tol", "seed", "out", "quiet", "config", "suites"}


def config_from_args(ns) -> JobConfig:
    if ns.group == "run":
        doc = jsonio.load(ns.config)
        cfg = JobConfig.from_dict(doc)
    else:
        verb = ns.group
        if getattr(ns, "verb", None):
            verb += "." + ns.verb
        if getattr(ns, "evverb", None):
            verb += "." + ns.evverb
        params = {k: v for k, v in vars(ns).items() if k not in _SKIP and v is not None and v is not False}
        for key in ("a_plus", "a_minus"):
            if key in params:
                params[key] = [x for x in params[key].split(";") if x.strip()]
        if ns.group == "repro":
            params["suites"] = ns.suites
        cfg = JobConfig(verb, params, Truncation(), Precision())
    if ns.order is not None:
        cfg.truncation.N = ns.order
    if ns.depth is not None:
        cfg.precision.depth = ns.depth
    if ns.tol is not None:
        cfg.precision.tol = ns.tol
    if ns.group != "run" or ns.seed:
        cfg.seed = ns.seed
    if ns.out:
        cfg.out = ns.out
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    from .workbench import dispatch

    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as e:          # argparse usage errors already exit with 2
        return int(e.code or 0)
    try:
        default_tol()
        cfg = config_from_args(ns)
        echo = (lambda line: print(line, file=sys.stderr)) if ns.group == "repro" or cfg.verb == "repro" else None
        rep = dispatch(cfg, echo=echo)
    except SchemaError as e:
        where = f" (key: {e.key})" if e.key else ""
        print(f"wallcross: invalid input: {e}{where}", file=sys.stderr)
        return EXIT_SCHEMA
    except FileNotFoundError as e:
        print(f"wallcross: {e}", file=sys.stderr)
        return EXIT_SCHEMA
    except (ValueError, ArithmeticError, KeyError) as e:
        print(f"wallcross: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_MODULE
    doc = rep.to_json()
    if cfg.out:
        jsonio.save(doc, cfg.out)
    if not ns.quiet:
        print(json.dumps(doc, indent=2, sort_keys=True))
    return EXIT_OK if rep.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
