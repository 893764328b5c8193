"""Command-line entry point.

Subcommands::

    wsnmle topology   --out-dir out          # generate and save a graph
    wsnmle optimize   --out-dir out          # gain optimization traces
    wsnmle consensus  --out-dir out          # decentralized estimation run
    wsnmle sweep      --n-list 4,8,16        # variance vs network size
    wsnmle selfcheck                         # property suite, exit code 0/1

All subcommands accept ``--config FILE`` (JSON, same keys as
``ExperimentConfig``) plus a handful of common overrides.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .experiment import (
    ExperimentConfig,
    build_scenario,
    optimize_with_reselection,
    run_convergence,
    run_variance_sweep,
    write_gains,
    write_opt_trace,
    write_topology,
)
from .network_model import GainDomain, GainVector
from .selfcheck import run_all


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON config file")
    p.add_argument("--seed", type=int, help="master seed override")
    p.add_argument("--out-dir", type=Path, default=Path("out"), help="output directory")
    p.add_argument("--trials", type=int, help="Monte Carlo trial count override")
    p.add_argument("--n", type=int, help="network size override")
    p.add_argument(
        "--constraint",
        choices=[d.value for d in GainDomain],
        help="gain constraint domain override",
    )
    p.add_argument("--rho", type=float, help="consensus step constant override")
    p.add_argument("--xi", type=float, help="optimizer outer stop threshold override")


def _load_config(args) -> ExperimentConfig:
    cfg = (
        ExperimentConfig.from_json_file(args.config)
        if args.config
        else ExperimentConfig()
    )
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, master_seed=args.seed)
    if args.trials is not None:
        cfg = dataclasses.replace(cfg, trials=args.trials)
    if args.n is not None:
        cfg = dataclasses.replace(cfg, n=args.n)
    if args.constraint is not None:
        cfg = dataclasses.replace(cfg, constraint=GainDomain(args.constraint))
    if args.rho is not None:
        cfg = dataclasses.replace(cfg, admm=dataclasses.replace(cfg.admm, rho=args.rho))
    if args.xi is not None:
        cfg = dataclasses.replace(cfg, opt=dataclasses.replace(cfg.opt, xi=args.xi))
    return cfg


def cmd_topology(args) -> int:
    cfg = _load_config(args)
    path = write_topology(cfg, args.out_dir)
    print(f"wrote {path}")
    return 0


def cmd_optimize(args) -> int:
    cfg = _load_config(args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _, gm, trace = optimize_with_reselection(
        *_scenario_and_init(cfg), rounds=args.reselect_rounds
    )
    write_opt_trace(out / "opt_trace.csv", trace)
    write_gains(out / "gains.csv", trace.gains)
    print(
        f"n={cfg.n} cycles={trace.outer_cycles} converged={trace.converged} "
        f"variance {trace.variances[0]:.6g} -> {trace.var_final:.6g}"
    )
    return 0


def _scenario_and_init(cfg: ExperimentConfig):
    _, model = build_scenario(cfg)
    return model, cfg.opt, GainVector.ones(cfg.n, cfg.constraint)


def cmd_consensus(args) -> int:
    cfg = _load_config(args)
    summary = run_convergence(cfg, args.out_dir)
    print(json.dumps(summary, sort_keys=True))
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    n_list = [int(tok) for tok in args.n_list.split(",") if tok]
    rows = run_variance_sweep(cfg, n_list, args.out_dir)
    for row in rows:
        print(
            f"n={row['n']:3d} trials={row['trials']} failures={row['failures']} "
            f"var(opt)={row['mean_var_optimized']:.6g} var(ones)={row['mean_var_all_ones']:.6g} "
            f"var(rand)={row['mean_var_random']:.6g} improved={row['frac_improved']:.3f}"
        )
    return 0


def cmd_selfcheck(args) -> int:
    cfg = _load_config(args)
    results = run_all(seed=cfg.master_seed, cases=args.cases)
    failed = [r for r in results if not r.passed]
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        line = f"[{mark}] {r.name}"
        if r.detail:
            line += f": {r.detail}"
        print(line)
    if failed:
        print(f"first failing property: {failed[0].name}", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="wsnmle",
        description="Decentralized ML estimation and sensor-gain optimization experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("topology", help="generate a random connected graph")
    _add_common(p)
    p.set_defaults(fn=cmd_topology)

    p = sub.add_parser("optimize", help="run the cyclic gain optimizer")
    _add_common(p)
    p.add_argument(
        "--reselect-rounds",
        type=int,
        default=1,
        help="alternating selection/optimization rounds (1-5)",
    )
    p.set_defaults(fn=cmd_optimize)

    p = sub.add_parser("consensus", help="run the decentralized estimation experiment")
    _add_common(p)
    p.set_defaults(fn=cmd_consensus)

    p = sub.add_parser("sweep", help="variance vs network size sweep")
    _add_common(p)
    p.add_argument("--n-list", default="4,8,12,16", help="comma-separated network sizes")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("selfcheck", help="run the randomized property suite")
    _add_common(p)
    p.add_argument("--cases", type=int, default=100, help="random cases per property")
    p.set_defaults(fn=cmd_selfcheck)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
