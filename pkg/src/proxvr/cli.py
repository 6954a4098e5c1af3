"""Command line interface: ``proxvr {run,validate,schedules,certify}``.

Exit codes: 0 success, 1 some runs failed, 2 configuration error,
3 every run failed.
"""

from __future__ import annotations

import argparse
import sys

from .core import ConfigurationError
from .diagnostics import verify_local_minimum
from .experiment import (ConfigError, build_from_config, load_config, load_vector,
                         parse_seeds, run_experiment, schedule_table)

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG, EXIT_FAILED = 0, 1, 2, 3


def _fmt(v):
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def cmd_run(args):
    cfg = load_config(args.config)
    seeds = parse_seeds(args.seeds) if args.seeds else None
    rows = run_experiment(cfg, out_dir=args.out, seeds=seeds,
                          no_timing=args.no_timing, stride=args.stride)
    failed = sum(r["status"] != "ok" for r in rows)
    for r in rows:
        print(f"seed={r['seed']} b={r['b']} status={r['status']} success={int(bool(r['success']))}"
              f" iterations_to_eps={_fmt(r.get('iterations_to_eps'))}"
              f" sfo_paper={_fmt(r.get('sfo_paper'))}")
    if failed == len(rows):
        return EXIT_FAILED
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_validate(args):
    cfg = load_config(args.config)
    build_from_config(cfg)
    print(f"{args.config}: ok")
    return EXIT_OK


def cmd_schedules(args):
    cfg = load_config(args.config)
    cols = ["theorem", "eta", "b", "B", "m", "T", "r", "f_thres", "t_thres"]
    print("\t".join(cols))
    for row in schedule_table(cfg):
        if "error" in row:
            print(f"{row['theorem']}\tn/a ({row['error']})")
        else:
            print("\t".join(_fmt(row[c]) for c in cols))
    return EXIT_OK


def cmd_certify(args):
    cfg = load_config(args.config)
    if cfg.delta is None:
        raise ConfigurationError("certify needs delta in the config")
    problem = build_from_config(cfg)
    x = load_vector(args.x_file)
    if x.shape != (problem.dim,):
        raise ConfigurationError(f"point has {x.size} entries, problem dimension is {problem.dim}")
    verdict, est = verify_local_minimum(problem, x, cfg.epsilon, cfg.delta)
    lam = None if est is None else est.lambda_min_est
    print(f"verdict={verdict} lambda_min_est={_fmt(lam)}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="proxvr", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("config")
    run.add_argument("--out", help="output directory (overrides output_dir)")
    run.add_argument("--seeds", help="seed range a..b or list a,b,c")
    run.add_argument("--no-timing", action="store_true", help="write wall_ms as 0")
    run.add_argument("--stride", type=int, help="evaluate the trace every N iterations")
    run.set_defaults(func=cmd_run)

    val = sub.add_parser("validate", help="check a config without running")
    val.add_argument("config")
    val.set_defaults(func=cmd_validate)

    sch = sub.add_parser("schedules", help="print theorem parameter schedules")
    sch.add_argument("config")
    sch.set_defaults(func=cmd_schedules)

    cer = sub.add_parser("certify", help="check a point for an approximate local minimum")
    cer.add_argument("config")
    cer.add_argument("x_file")
    cer.set_defaults(func=cmd_certify)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if getattr(args, "stride", None) is not None and args.stride < 1:
        print("error: --stride must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigurationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
