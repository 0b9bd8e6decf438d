"""Command-line front end: ``presolve``, ``check``, ``gen`` and ``bench``.

Exit codes: 0 success/accepted, 1 rejected, 2 I/O or parse failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time

from . import bench, generate, opb
from .checker import Checker
from .presolve import ConfigError, PresolveConfig, run
from .presolve.postsolve import dumps as dump_postsolve
from .proof import CertificateParseError

EXIT_OK, EXIT_REJECTED, EXIT_IO = 0, 1, 2

# flags a config file may set, with their defaults
_FLAG_DEFAULTS = {
    "prop_cert": "rup",
    "obju_mode": "diff",
    "no_proof": False,
    "rounds": 20,
    "seed": 0,
    "time_limit": None,
    "memory_limit": None,
    "report": None,
    "techniques": None,
    "probe_budget": 1000,
    "dominance_budget": 50,
    "max_fill": 50,
}


class CliError(Exception):
    pass


def _add_common(p):
    p.add_argument("--config", help="JSON file with defaults for any of the flags below")
    p.add_argument("--prop-cert", choices=("rup", "pol"), default=argparse.SUPPRESS)
    p.add_argument("--obju-mode", choices=("diff", "new"), default=argparse.SUPPRESS)
    p.add_argument("--no-proof", action="store_true", default=argparse.SUPPRESS)
    p.add_argument("--rounds", type=int, default=argparse.SUPPRESS)
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    p.add_argument("--time-limit", type=float, default=argparse.SUPPRESS, metavar="S")
    p.add_argument("--memory-limit", type=int, default=argparse.SUPPRESS, metavar="MB")
    p.add_argument("--report", default=argparse.SUPPRESS, metavar="PATH")
    p.add_argument("--techniques", default=argparse.SUPPRESS,
                   help="comma-separated technique names in application order")
    p.add_argument("--probe-budget", type=int, default=argparse.SUPPRESS)
    p.add_argument("--dominance-budget", type=int, default=argparse.SUPPRESS)
    p.add_argument("--max-fill", type=int, default=argparse.SUPPRESS)


def _settings(args) -> dict:
    """Defaults, overlaid by the config file, overlaid by explicit flags."""
    s = dict(_FLAG_DEFAULTS)
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, ValueError) as e:
            raise CliError(f"cannot read config {args.config}: {e}") from None
        unknown = set(cfg) - set(s)
        if unknown:
            raise CliError(f"unknown config keys: {', '.join(sorted(unknown))}")
        s.update(cfg)
    for k in s:
        if hasattr(args, k):
            s[k] = getattr(args, k)
    if isinstance(s["techniques"], str):
        s["techniques"] = [t for t in s["techniques"].split(",") if t]
    return s


def _presolve_config(s) -> PresolveConfig:
    kw = dict(prop_cert=s["prop_cert"], obju_mode=s["obju_mode"], rounds=s["rounds"], seed=s["seed"],
              time_limit=s["time_limit"], proof=not s["no_proof"], probe_budget=s["probe_budget"],
              dominance_budget=s["dominance_budget"], max_fill=s["max_fill"])
    if s["techniques"]:
        kw["techniques"] = tuple(s["techniques"])
    try:
        return PresolveConfig(**kw)
    except ConfigError as e:
        raise CliError(str(e)) from None


def _apply_memory_limit(mb):
    if mb is None:
        return
    import resource
    limit = int(mb) * 1024 * 1024
    resource.setrlimit(resource.RLIMIT_AS, (limit, limit))


def _write_report(path, obj):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _stem(path):
    base = os.path.basename(path)
    return base[:-4] if base.endswith(".opb") else base


# -- commands

def cmd_presolve(args) -> int:
    s = _settings(args)
    cfg = _presolve_config(s)
    _apply_memory_limit(s["memory_limit"])
    problem = opb.read(args.instance)
    outdir = args.output_dir or os.path.dirname(os.path.abspath(args.instance))
    os.makedirs(outdir, exist_ok=True)
    stem = os.path.join(outdir, _stem(args.instance))
    cert_path = stem + ".pbp"
    if cfg.proof:
        with open(cert_path, "w", encoding="utf-8") as fh:
            res = run(problem, cfg, out=fh)
    else:
        res = run(problem, cfg)
    with open(stem + ".reduced.opb", "w", encoding="utf-8") as fh:
        fh.write(opb.write(res.reduced))
    with open(stem + ".postsolve.jsonl", "w", encoding="utf-8") as fh:
        fh.write(dump_postsolve(res.postsolve))
    stats = dict(res.stats, instance=args.instance, config=cfg.to_dict(),
                 certificate=cert_path if cfg.proof else None)
    _write_report(s["report"], stats)
    print(f"{args.instance}: {stats['transactions']} transactions, "
          f"{stats['rows_before']} -> {stats['rows_after']} rows, "
          f"{stats['fixed']} fixed, {stats['substituted']} substituted"
          + (", infeasible" if stats["infeasible"] else "")
          + (f", certificate {cert_path} ({stats['certificate_bytes']} bytes)" if cfg.proof else ", no certificate"))
    return EXIT_OK


def cmd_check(args) -> int:
    s = _settings(args)
    _apply_memory_limit(s["memory_limit"])
    problem = opb.read(args.instance)
    t0 = time.perf_counter()
    with open(args.certificate, encoding="utf-8") as fh:
        verdict = Checker(problem).check(fh)
    report = {
        "instance": args.instance,
        "certificate": args.certificate,
        "accepted": verdict.accepted,
        "step": verdict.step_index,
        "line": verdict.line,
        "rule": verdict.rule,
        "reason": verdict.reason,
        "seconds": time.perf_counter() - t0,
        "steps": verdict.stats.get("steps"),
        "by_kind": verdict.stats.get("by_kind"),
        "propagations": verdict.stats.get("propagations"),
    }
    _write_report(s["report"], report)
    print(verdict.summary())
    return EXIT_OK if verdict.accepted else EXIT_REJECTED


def cmd_gen(args) -> int:
    s = _settings(args)
    kw = {}
    if args.family == "random":
        kw = dict(n_vars=args.vars or 10, n_cons=args.cons or 8)
        if args.density is not None:
            kw["density"] = args.density
    elif args.family == "propagation":
        if args.vars:
            kw["n_vars"] = args.vars
        if args.cons:
            kw["chain"] = args.cons
    elif args.family == "dense-objective":
        if args.vars:
            kw["n_obj"] = args.vars
        if args.cons:
            kw["n_fix"] = args.cons
    if args.family not in generate.FAMILIES:
        raise CliError(f"unknown family {args.family!r}")
    os.makedirs(args.output_dir, exist_ok=True)
    names = []
    for name, p in generate.corpus(args.family, s["seed"], args.count, **kw):
        with open(os.path.join(args.output_dir, name + ".opb"), "w", encoding="utf-8") as fh:
            fh.write(opb.write(p))
        names.append(name)
    print(f"wrote {len(names)} instances to {args.output_dir}")
    return EXIT_OK


def cmd_bench(args) -> int:
    s = _settings(args)
    cfg = _presolve_config(s)
    _apply_memory_limit(s["memory_limit"])
    cells = tuple(c for c in args.matrix.split(",") if c)
    try:
        instances = bench.load_corpus(args.corpus)
    except OSError as e:
        raise OSError(f"cannot read corpus {args.corpus}: {e}") from None
    try:
        rows = bench.run_bench(instances, cells, cfg, s["time_limit"], args.jobs)
    except ValueError as e:
        raise CliError(str(e)) from None
    print(bench.format_report(rows, cells, name=os.path.basename(os.path.normpath(args.corpus))))
    if s["report"]:
        with open(s["report"], "w", encoding="utf-8") as fh:
            fh.write(bench.dump_rows(rows))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="certpresolve", description="Certifying presolve for 0-1 ILPs.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("presolve", help="presolve an OPB instance and write the certificate")
    p.add_argument("instance")
    p.add_argument("-o", "--output-dir", help="directory for the artifacts (default: next to the instance)")
    _add_common(p)
    p.set_defaults(func=cmd_presolve)

    p = sub.add_parser("check", help="verify a certificate against an instance")
    p.add_argument("instance")
    p.add_argument("certificate")
    _add_common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("gen", help="generate a seeded instance corpus")
    p.add_argument("-f", "--family", default="random", choices=generate.FAMILIES)
    p.add_argument("-n", "--count", type=int, default=10)
    p.add_argument("--vars", type=int, help="variables (objective size for dense-objective)")
    p.add_argument("--cons", type=int, help="constraints (forced rows for propagation/dense-objective)")
    p.add_argument("--density", type=float)
    p.add_argument("-o", "--output-dir", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="time presolve and verification over a corpus")
    p.add_argument("corpus", help="directory of .opb files")
    p.add_argument("--matrix", default="default",
                   help=f"comma-separated cells from {{{','.join(bench.CELLS)}}}, e.g. rup,pol")
    p.add_argument("-j", "--jobs", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, opb.OpbParseError, CertificateParseError, UnicodeDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except MemoryError:
        print("error: memory limit exceeded", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
