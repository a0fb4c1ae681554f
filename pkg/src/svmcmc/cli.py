"""Command-line interface: simulate data, run benchmarks, print reports."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import diagnostics, experiment
from .model import save_dataset


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE",
                        help="key = value config file")
    parser.add_argument("--scheme", choices=("kf", "ens1", "ens2"))
    parser.add_argument("--iters", type=int, metavar="N",
                        help="iterations per chain")
    parser.add_argument("--n-runs", type=int, metavar="N",
                        help="independent chains per setting")
    parser.add_argument("--seed", type=int, metavar="SEED",
                        help="master seed for the chain streams")
    parser.add_argument("--lx", type=int, metavar="L",
                        help="path pool size (ensemble schemes)")
    parser.add_argument("--leta", type=int, metavar="L",
                        help="eta pool size (ensemble schemes)")
    parser.add_argument("--data", metavar="CSV",
                        help="returns CSV (default: simulate)")
    parser.add_argument("--out", metavar="DIR", help="output directory")


_FLAG_KEYS = {
    "scheme": "scheme",
    "iters": "iterations",
    "n_runs": "n_runs",
    "seed": "seed",
    "lx": "lx",
    "leta": "leta",
    "data": "data",
    "out": "out",
}


def _config_from_args(args) -> experiment.ExperimentConfig:
    overrides = {}
    for attr, key in _FLAG_KEYS.items():
        value = getattr(args, attr, None)
        if value is not None:
            overrides[key] = value
    return experiment.parse_config(args.config, overrides)


def _cmd_simulate(args) -> None:
    cfg = _config_from_args(args)
    dataset, x_true = experiment.prepare_dataset(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "dataset.csv"
    save_dataset(path, dataset, x_true)
    path.write_text(f"# config {experiment.config_hash(cfg)}\n" + path.read_text())
    print(f"wrote {path} ({len(dataset)} observations)")


def _print_summary(summary: dict) -> None:
    if "settings" in summary:
        rows = [s["efficiency_row"] for s in summary["settings"]]
    else:
        rows = [summary["efficiency_row"]]
        post = summary["posterior"]["weighted"]
        means = ", ".join(
            f"{name}={post[name]['mean']:.4f} (se {post[name]['se']:.4f})"
            for name in diagnostics.PARAM_NAMES
        )
        print("posterior means (weighted): " + means)
        acc = ", ".join(
            f"{k}={v:.3f}" for k, v in sorted(summary["acceptance_rates"].items())
        )
        print("acceptance rates: " + acc)
    print(diagnostics.format_efficiency(rows))


def _cmd_run(args) -> None:
    cfg = _config_from_args(args)
    summary = experiment.run_experiment(cfg)
    _print_summary(summary)
    print(f"artifacts in {cfg.out} (config {summary['config_hash']})")


def _cmd_sweep(args) -> None:
    cfg = _config_from_args(args)
    summary = experiment.sweep_experiment(cfg)
    _print_summary(summary)
    print(f"artifacts in {cfg.out} (config {summary['config_hash']})")


def _cmd_report(args) -> None:
    summary_path = Path(args.dir) / "summary.json"
    if not summary_path.exists():
        raise ValueError(f"no summary.json in {args.dir}")
    _print_summary(json.loads(summary_path.read_text()))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="svmcmc",
        description="Benchmark MCMC samplers for the stochastic volatility model",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a dataset and write it as CSV")
    _common_flags(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("run", help="run one scheme setting and write artifacts")
    _common_flags(p)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="run a pool-size grid for an ensemble scheme")
    _common_flags(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("report", help="reprint tables from an output directory")
    p.add_argument("dir", help="output directory of a previous run or sweep")
    p.set_defaults(func=_cmd_report)

    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
