"""Experiment orchestration: config files, multi-run execution, artifacts.

A flat key = value config describes one benchmark: the dataset (a returns
CSV or simulation settings), the sampling scheme and its tuning, the number
of independent runs, and for sweeps a grid of pool sizes.  Runs write one
deterministic trace CSV plus a wall-time sidecar each; diagnostics are
aggregated into a summary JSON and an efficiency CSV.  Every output embeds
the hash of the resolved config so artifacts are traceable to their
settings.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

from . import diagnostics
from .chains import ChainTrace, SchemeConfig, run_chain
from .ensemble import PoolConfig
from .model import Dataset, Params, PriorSpec, load_dataset, simulate_sv
from .rng import RandomStream

__all__ = [
    "ExperimentConfig",
    "parse_config",
    "emit_config",
    "config_hash",
    "prepare_dataset",
    "run_experiment",
    "sweep_experiment",
]


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved experiment settings; field names double as config keys."""

    scheme: str = "kf"
    iterations: int = 20000
    n_runs: int = 5
    seed: int = 0
    burn_in: float = 0.10
    n_metropolis: int = 80
    lx: int = 50
    leta: int = 10
    pool_scale: float = 2.0
    ens2_gamma_sd: float = 1.0
    prop_sd_nc: tuple = (0.21, 0.5, 0.36)
    prop_sd_c: tuple = (0.105, 0.25, 0.18)
    prior_c_mean: float = 0.0
    prior_c_sd: float = 1.0
    prior_phi_lo: float = 0.0
    prior_phi_hi: float = 1.0
    prior_ig_alpha: float = 2.5
    prior_ig_beta: float = 0.075
    data: str = ""
    simulate_n: int = 1000
    simulate_c: float = 0.5
    simulate_phi: float = 0.98
    simulate_sigma2: float = 0.15
    simulate_seed: int = 7777
    sweep_lx: tuple = (10, 30, 50, 70)
    sweep_leta: tuple = (1, 10, 30, 50)
    out: str = "svmcmc_out"

    def __post_init__(self):
        if self.n_runs < 1:
            raise ValueError("n_runs must be at least 1")
        # Zero-iteration chains are legal at the library level but make no
        # sense for an experiment with summaries.
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        # Delegate the remaining validation to the component configs.
        self.scheme_config()
        self.prior()
        if not self.data:
            Params(self.simulate_c, self.simulate_phi, self.simulate_sigma2)
            if self.simulate_n < 1:
                raise ValueError("simulate_n must be at least 1")
        for l in self.sweep_lx + self.sweep_leta:
            if int(l) < 1:
                raise ValueError("sweep pool sizes must be at least 1")

    def prior(self) -> PriorSpec:
        return PriorSpec(
            c_mean=self.prior_c_mean, c_sd=self.prior_c_sd,
            phi_lo=self.prior_phi_lo, phi_hi=self.prior_phi_hi,
            ig_alpha=self.prior_ig_alpha, ig_beta=self.prior_ig_beta,
        )

    def scheme_config(self, scheme: str | None = None, lx: int | None = None,
                      leta: int | None = None) -> SchemeConfig:
        return SchemeConfig(
            scheme=scheme or self.scheme,
            iterations=self.iterations,
            n_metropolis=self.n_metropolis,
            prop_sd_nc=tuple(self.prop_sd_nc),
            prop_sd_c=tuple(self.prop_sd_c),
            pool=PoolConfig(
                l_x=lx if lx is not None else self.lx,
                l_eta=leta if leta is not None else self.leta,
                pool_scale=self.pool_scale,
            ),
            ens2_gamma_sd=self.ens2_gamma_sd,
            burn_in=self.burn_in,
            prior=self.prior(),
        )


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def _parse_value(key: str, raw: str):
    if key not in _FIELDS:
        raise ValueError(f"unknown config key {key!r}")
    default = _FIELDS[key].default
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            raise TypeError("no boolean keys")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            parts = [p for p in raw.replace(",", " ").split() if p]
            if all(isinstance(v, int) for v in default):
                return tuple(int(p) for p in parts)
            return tuple(float(p) for p in parts)
        return raw
    except ValueError as exc:
        raise ValueError(f"bad value for config key {key!r}: {raw!r}") from exc


def parse_config(path=None, overrides: dict | None = None) -> ExperimentConfig:
    """Build a config from an optional key = value file plus overrides.

    Later assignments win; unknown keys and malformed values raise with
    the offending key named.
    """
    values: dict = {}
    if path is not None:
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, raw = line.split("=", 1)
            key = key.strip()
            values[key] = _parse_value(key, raw)
    for key, raw in (overrides or {}).items():
        values[key] = _parse_value(key, str(raw))
    return ExperimentConfig(**values)


def emit_config(cfg: ExperimentConfig) -> str:
    """Canonical key = value serialization (parse_config round-trips it)."""
    lines = []
    for f in dataclasses.fields(ExperimentConfig):
        value = getattr(cfg, f.name)
        if isinstance(value, tuple):
            value = ",".join(repr(v) if isinstance(v, float) else str(v)
                             for v in value)
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(emit_config(cfg).encode()).hexdigest()[:16]


def prepare_dataset(cfg: ExperimentConfig):
    """Load or simulate the dataset named by the config.

    Simulation uses its own stream keyed by simulate_seed, independent of
    the chain streams.  Returns (dataset, true standardized path or None).
    """
    if cfg.data:
        return load_dataset(cfg.data), None
    params = Params(cfg.simulate_c, cfg.simulate_phi, cfg.simulate_sigma2)
    return simulate_sv(params, cfg.simulate_n, RandomStream(cfg.simulate_seed))


def _write_with_hash(path: Path, body: str, hash_: str) -> None:
    path.write_text(f"# config {hash_}\n" + body)


def _read_csv_body(path: Path) -> str:
    text = path.read_text()
    return text.split("\n", 1)[1] if text.startswith("#") else text


def run_chains(cfg: ExperimentConfig, dataset: Dataset, scheme: str,
               lx: int | None = None, leta: int | None = None,
               out_dir: Path | None = None, hash_: str = "",
               run_offset: int = 0) -> list[ChainTrace]:
    """Run cfg.n_runs chains of one scheme setting, writing per-run files.

    Chain j consumes the substream (run_offset + j,) of the master seed.
    """
    scfg = cfg.scheme_config(scheme=scheme, lx=lx, leta=leta)
    traces = []
    for j in range(cfg.n_runs):
        rng = RandomStream(cfg.seed, (run_offset + j,))
        trace = run_chain(scfg, dataset, rng)
        traces.append(trace)
        if out_dir is not None:
            trace_path = out_dir / f"run{j}_trace.csv"
            trace.to_csv(trace_path, include_seconds=False)
            body = trace_path.read_text()
            _write_with_hash(trace_path, body, hash_)
            sec_path = out_dir / f"run{j}_seconds.csv"
            trace.seconds_to_csv(sec_path)
            _write_with_hash(sec_path, sec_path.read_text(), hash_)
    return traces


def summarize_traces(traces: list[ChainTrace], scheme: str,
                     lx: int | None, leta: int | None) -> dict:
    """Posterior summary, acceptance rates, ACT and efficiency for one setting."""
    summary = diagnostics.weighted_summary(traces)
    act = {}
    for p, name in enumerate(diagnostics.PARAM_NAMES):
        kept = [t.params[t.kept(), p] for t in traces]
        est = diagnostics.act_estimate(kept)
        act[name] = est
    sec = float(sum(t.mean_seconds() for t in traces) / len(traces))
    acc: dict = {}
    for t in traces:
        for key, (a, n) in t.acceptance.items():
            c0, c1 = acc.get(key, (0, 0))
            acc[key] = (c0 + a, c1 + n)
    entry = {
        "scheme": scheme, "l_x": lx, "l_eta": leta,
        "iterations": traces[0].iterations,
        "sec_per_iter": sec, "act": act,
    }
    return {
        "scheme": scheme,
        "l_x": lx,
        "l_eta": leta,
        "posterior": summary,
        "acceptance_rates": {k: a / n for k, (a, n) in acc.items() if n},
        "act": {
            name: {"act": est.act, "cutoff": est.cutoff}
            for name, est in act.items()
        },
        "sec_per_iter": sec,
        "efficiency_row": diagnostics.efficiency_rows([entry])[0],
    }


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Run one scheme setting end to end and write all artifacts.

    Out directory contents: config.txt (canonical config), dataset.csv,
    run{j}_trace.csv (deterministic given the master seed),
    run{j}_seconds.csv (wall times, not reproducible), summary.json,
    efficiency.csv.
    """
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    hash_ = config_hash(cfg)
    _write_with_hash(out / "config.txt", emit_config(cfg), hash_)

    dataset, x_true = prepare_dataset(cfg)
    _write_dataset(out / "dataset.csv", dataset, x_true, hash_)

    lx, leta = _pool_labels(cfg.scheme, cfg)
    traces = run_chains(cfg, dataset, cfg.scheme, out_dir=out, hash_=hash_)
    summary = summarize_traces(traces, cfg.scheme, lx, leta)
    summary["config_hash"] = hash_
    summary["master_seed"] = cfg.seed
    summary["run_streams"] = [[j] for j in range(cfg.n_runs)]
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")

    rows = [summary["efficiency_row"]]
    diagnostics.efficiency_to_csv(rows, out / "efficiency.csv")
    _write_with_hash(
        out / "efficiency.csv", _read_csv_body(out / "efficiency.csv"), hash_
    )
    return summary


def sweep_experiment(cfg: ExperimentConfig) -> dict:
    """Run the (L_x, L_eta) grid for an ensemble scheme and collect one table.

    Each grid point gets its own subdirectory of runs; the efficiency CSV
    at the top level has one row per point.  Chain substreams are offset
    so no two grid points share randomness.
    """
    if cfg.scheme == "kf":
        raise ValueError("sweeps grid pool sizes; pick an ensemble scheme")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    hash_ = config_hash(cfg)
    _write_with_hash(out / "config.txt", emit_config(cfg), hash_)

    dataset, x_true = prepare_dataset(cfg)
    _write_dataset(out / "dataset.csv", dataset, x_true, hash_)

    settings = []
    rows = []
    offset = 0
    for lx in cfg.sweep_lx:
        for leta in cfg.sweep_leta:
            sub = out / f"lx{lx}_leta{leta}"
            sub.mkdir(exist_ok=True)
            traces = run_chains(
                cfg, dataset, cfg.scheme, lx=lx, leta=leta,
                out_dir=sub, hash_=hash_, run_offset=offset,
            )
            offset += cfg.n_runs
            summary = summarize_traces(traces, cfg.scheme, lx, leta)
            settings.append(summary)
            rows.append(summary["efficiency_row"])
    top = {
        "config_hash": hash_,
        "master_seed": cfg.seed,
        "scheme": cfg.scheme,
        "settings": settings,
    }
    (out / "summary.json").write_text(json.dumps(top, indent=2) + "\n")
    diagnostics.efficiency_to_csv(rows, out / "efficiency.csv")
    _write_with_hash(
        out / "efficiency.csv", _read_csv_body(out / "efficiency.csv"), hash_
    )
    return top


def _pool_labels(scheme: str, cfg: ExperimentConfig):
    if scheme == "kf":
        return None, None
    return cfg.lx, cfg.leta


def _write_dataset(path: Path, dataset: Dataset, x_true, hash_: str) -> None:
    from .model import save_dataset

    save_dataset(path, dataset, x_true)
    _write_with_hash(path, _read_csv_body(path), hash_)
