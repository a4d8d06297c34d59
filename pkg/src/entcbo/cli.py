"""Command line entry point: ``entcbo {run,sweep,compare,oracle,table1}``."""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import bench
from .experiment import (
    ExperimentConfig,
    aggregate_rows,
    parse_config,
    parse_grid,
    run_experiment,
    validate_config,
    with_overrides,
    write_outputs,
)
from .errors import EntCboError

TABLE1_REFERENCE = {
    "hermitian": (0.25026, 0.25031, 0.25052, 0.25067, 0.25087),
    "multispecies": (0.25023, 0.25024, 0.25025, 0.25025, 0.25025),
}


def _common(p):
    p.add_argument("--config", type=Path, help="experiment configuration (INI)")
    p.add_argument("--seed", type=int, help="master seed (overrides [run] seed)")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    p.add_argument("--workers", type=int, help="parallel worker processes")
    p.add_argument("--aggregate", choices=("none", "median", "mean"),
                   help="also write per-cell aggregates over seeds")
    p.add_argument("--record-time", action="store_true",
                   help="fill the wall_time_s column (makes the CSV nondeterministic)")
    p.add_argument("--no-traces", action="store_true", help="skip per-run trace JSON files")


def build_parser():
    parser = argparse.ArgumentParser(prog="entcbo", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("run", "single experiment: one state parameter, one solver"),
        ("sweep", "grid over state parameters for one solver"),
        ("compare", "grid over state parameters for several solvers"),
    ):
        p = sub.add_parser(name, help=help_)
        _common(p)
        if name == "compare":
            p.add_argument("--solvers", help="comma-separated solver list")
    p = sub.add_parser("oracle", help="print closed-form EoF values")
    p.add_argument("--state", required=True, choices=("horodecki_2x2", "werner", "isotropic_3x3"))
    p.add_argument("--params", required=True, help="comma list or start:stop:step")
    p.add_argument("--a", type=float, default=0.75)
    p = sub.add_parser("table1", help="Werner F=0.7, single- vs multi-species minima for M=4..8")
    _common(p)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--J", type=int, default=100)
    p.add_argument("--K", type=int, default=500)
    return parser


def _load(args):
    cfg = parse_config(args.config.read_text()) if args.config else ExperimentConfig()
    return with_overrides(cfg, seed=args.seed, workers=args.workers, aggregate=args.aggregate)


def _finish(result, args):
    out = write_outputs(result, args.out, wall_time=args.record_time,
                        traces=not args.no_traces)
    failed = sum(r.error is not None for r in result.rows)
    for p, m, s, n, eof, oracle, err in aggregate_rows(result.rows, "median"):
        extra = "" if err is None else f"  oracle={oracle:.6f}  |err|={err:.2e}"
        print(f"param={p:g}  M={m}  {s:<20s} n={n}  eof={eof:.6f}{extra}")
    print(f"wrote {out / 'results.csv'} ({len(result.rows)} rows, {failed} failed)")
    return 1 if failed else 0


def cmd_run(args):
    cfg = _load(args)
    if len(cfg.params) > 1 or len(cfg.solvers) > 1:
        raise SystemExit("run takes one state parameter and one solver; use sweep or compare")
    return _finish(run_experiment(cfg), args)


def cmd_sweep(args):
    cfg = _load(args)
    if len(cfg.solvers) > 1:
        raise SystemExit("sweep takes one solver; use compare")
    return _finish(run_experiment(cfg), args)


def cmd_compare(args):
    cfg = _load(args)
    if args.solvers:
        cfg = with_overrides(cfg, solvers=tuple(s.strip() for s in args.solvers.split(",")))
    return _finish(run_experiment(cfg), args)


def cmd_oracle(args):
    for x in parse_grid(args.params):
        if args.state == "isotropic_3x3":
            val = bench.isotropic_eof(x)
        elif args.state == "werner":
            val = bench.wootters_eof(bench.werner(x))
        else:
            val = bench.wootters_eof(bench.horodecki_2x2(x, args.a))
        print(f"{args.state}  param={x!r}  eof={val.value:.17g}  ({val.kind.value})")
    return 0


def table1_config(J=100, K=500, repeats=5, seed=0, workers=1):
    return validate_config(ExperimentConfig(
        state="werner", params=(0.7,), solvers=("hermitian", "multispecies"),
        m_set="4..8", J=J, K=K, sigma=0.06, seed=seed, repeats=repeats, workers=workers,
    ))


def cmd_table1(args):
    cfg = table1_config(args.J, args.K, args.repeats,
                        args.seed if args.seed is not None else 0, args.workers or 1)
    if args.config:
        cfg = with_overrides(_load(args), state="werner", params=(0.7,))
    result = run_experiment(cfg)
    write_outputs(result, args.out, wall_time=args.record_time, traces=not args.no_traces,
                  aggregate=args.aggregate)
    med = {(m, s): eof for _, m, s, _, eof, _, _ in aggregate_rows(result.rows, "median")}
    print("minimum consensus value, median over seeds "
          f"(Werner F=0.7, J={cfg.J}, K={cfg.K}, {cfg.repeats} seeds)")
    print("solver          " + "".join(f"   M={m:<5d}" for m in range(4, 9)))
    for s in ("hermitian", "multispecies"):
        print(f"{s:<16s}" + "".join(f"  {med.get((m, s), np.nan):.5f}" for m in range(4, 9)))
        print(f"{'  (reference)':<16s}" + "".join(f"  {v:.5f}" for v in TABLE1_REFERENCE[s]))
    print(f"Wootters value  {bench.wootters_eof(bench.werner(0.7)).value:.5f}")
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": cmd_run, "sweep": cmd_sweep, "compare": cmd_compare,
               "oracle": cmd_oracle, "table1": cmd_table1}[args.command]
    try:
        return handler(args)
    except EntCboError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
