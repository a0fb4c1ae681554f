"""Composite sampling schemes and the chain driver.

Three schemes share the interweaved parameter block and differ in how they
move the latent path (and eta/gamma alongside it):

  kf    mixture-linearized path draw via Kalman backward sampling plus
        indicator refresh; parameter block sees the mixture observation
        density; per-iteration importance log-weights correct averages to
        the exact model
  ens1  ensemble refresh of (eta, path); parameter block sees the exact
        observation density; weights identically zero
  ens2  ens1 plus an ensemble Metropolis step on gamma before the refresh
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .asis import ObsModel, gis_nc_parameter_block
from .ensemble import PoolConfig, ens1_update, ens2_update
from .ffbs import ffbs_sample
from .mixture import DEFAULT_COMPONENT, MixtureTable, importance_log_weight, \
    sample_indicators
from .model import Dataset, PriorSpec, TransformedParams

SCHEMES = ("kf", "ens1", "ens2")

# Starting point for all schemes: prior means of (c, gamma, eta), rounded
# as reported.
INIT_C = 0.0
INIT_GAMMA = 1.39
INIT_ETA = -3.29

__all__ = [
    "SCHEMES",
    "SchemeConfig",
    "ChainState",
    "ChainTrace",
    "initial_state",
    "kf_iteration",
    "ens1_iteration",
    "ens2_iteration",
    "run_chain",
]


@dataclass(frozen=True)
class SchemeConfig:
    """Everything a single chain needs besides the data and the stream."""

    scheme: str
    iterations: int
    n_metropolis: int = 80
    prop_sd_nc: tuple = (0.21, 0.5, 0.36)
    prop_sd_c: tuple = (0.105, 0.25, 0.18)
    pool: PoolConfig = PoolConfig(50, 10)
    ens2_gamma_sd: float = 1.0
    burn_in: float = 0.10
    prior: PriorSpec = PriorSpec()

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.iterations < 0:
            raise ValueError("iterations must be nonnegative")
        if self.n_metropolis < 1:
            raise ValueError("n_metropolis must be at least 1")
        if not 0.0 <= self.burn_in < 1.0:
            raise ValueError("burn_in must lie in [0, 1)")
        if len(self.prop_sd_nc) != 3 or len(self.prop_sd_c) != 3:
            raise ValueError("proposal sds must be (c, gamma, eta) triples")


@dataclass
class ChainState:
    """Mutable chain state: parameters, standardized path, indicators."""

    c: float
    gamma: float
    eta: float
    x: np.ndarray
    r: np.ndarray | None = None
    iteration: int = 0
    counters: dict = field(default_factory=dict)

    @property
    def transformed(self) -> TransformedParams:
        return TransformedParams(self.c, self.gamma, self.eta)

    def bump(self, counters: dict) -> None:
        for key, (acc, n) in counters.items():
            a, b = self.counters.get(key, (0, 0))
            self.counters[key] = (a + acc, b + n)


def initial_state(cfg: SchemeConfig, n: int, rng) -> ChainState:
    """Deterministic parameter start plus a stationary i.i.d. path draw."""
    phi0 = math.tanh(0.5 * INIT_GAMMA)
    x = rng.normal01(n) / math.sqrt(1.0 - phi0 * phi0)
    r = None
    if cfg.scheme == "kf":
        r = np.full(n, DEFAULT_COMPONENT, dtype=np.int64)
    return ChainState(c=INIT_C, gamma=INIT_GAMMA, eta=INIT_ETA, x=x, r=r)


def _parameter_block(state: ChainState, cfg: SchemeConfig, dataset: Dataset,
                     obs: ObsModel, rng) -> None:
    c, gamma, eta, x, counters = gis_nc_parameter_block(
        state.c, state.gamma, state.eta, state.x, dataset, obs, cfg.prior,
        cfg.n_metropolis, cfg.prop_sd_nc, cfg.prop_sd_c, rng,
    )
    state.c, state.gamma, state.eta, state.x = c, gamma, eta, x
    state.bump(counters)


def kf_iteration(state: ChainState, cfg: SchemeConfig, dataset: Dataset,
                 table: MixtureTable, rng) -> None:
    """Path draw given indicators, parameter block, indicator refresh."""
    state.x = ffbs_sample(dataset, state.r, state.transformed, table, rng).values
    obs = ObsModel.mixture(state.r, table)
    _parameter_block(state, cfg, dataset, obs, rng)
    state.r = sample_indicators(
        dataset, state.x, state.c, math.exp(0.5 * state.eta), table, rng
    )
    state.iteration += 1


def ens1_iteration(state: ChainState, cfg: SchemeConfig, dataset: Dataset,
                   rng) -> None:
    """Ensemble (eta, path) refresh, then the exact parameter block."""
    phi = math.tanh(0.5 * state.gamma)
    state.eta, state.x = ens1_update(
        state.x, state.eta, state.c, phi, cfg.pool, cfg.prior, dataset, rng
    )
    _parameter_block(state, cfg, dataset, ObsModel.exact(), rng)
    state.iteration += 1


def ens2_iteration(state: ChainState, cfg: SchemeConfig, dataset: Dataset,
                   rng) -> None:
    """Ensemble gamma step plus (eta, path) refresh, then the exact block."""
    state.gamma, state.eta, state.x, accepted = ens2_update(
        state.x, state.c, state.gamma, state.eta, cfg.pool,
        cfg.ens2_gamma_sd, cfg.prior, dataset, rng,
    )
    state.bump({"ens2_gamma": (accepted, 1)})
    _parameter_block(state, cfg, dataset, ObsModel.exact(), rng)
    state.iteration += 1


@dataclass
class ChainTrace:
    """Recorded per-iteration output of one chain."""

    scheme: str
    params: np.ndarray
    log_weights: np.ndarray
    seconds: np.ndarray
    acceptance: dict
    burn_in: float
    master_seed: int
    stream_path: tuple

    @property
    def iterations(self) -> int:
        return self.params.shape[0]

    def acceptance_rates(self) -> dict:
        return {
            key: acc / n if n else float("nan")
            for key, (acc, n) in self.acceptance.items()
        }

    def kept(self) -> slice:
        """Index range surviving burn-in."""
        return slice(int(round(self.burn_in * self.iterations)), None)

    def mean_seconds(self, window: int = 100) -> float:
        """Mean wall time per iteration over the last window iterations."""
        if self.seconds.size == 0:
            return float("nan")
        return float(np.mean(self.seconds[-window:]))

    def to_csv(self, path, include_seconds: bool = True) -> None:
        """Write the trace; the seconds column is optional because wall
        times are not reproducible across runs."""
        cols = ["iter", "c", "gamma", "eta", "log_weight"]
        if include_seconds:
            cols.append("seconds")
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(cols)
            for i in range(self.iterations):
                row = [
                    str(i),
                    repr(float(self.params[i, 0])),
                    repr(float(self.params[i, 1])),
                    repr(float(self.params[i, 2])),
                    repr(float(self.log_weights[i])),
                ]
                if include_seconds:
                    row.append(repr(float(self.seconds[i])))
                writer.writerow(row)

    def seconds_to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iter", "seconds"])
            for i in range(self.iterations):
                writer.writerow([str(i), repr(float(self.seconds[i]))])


def load_trace_csv(path, scheme: str = "", burn_in: float = 0.10,
                   master_seed: int = -1, stream_path: tuple = ()) -> ChainTrace:
    """Read a trace CSV (with or without the seconds column)."""
    from .model import _skip_comments

    with open(path, newline="") as fh:
        reader = _skip_comments(csv.reader(fh))
        header = next(reader)
        idx = {name: header.index(name) for name in header}
        for name in ("c", "gamma", "eta", "log_weight"):
            if name not in idx:
                raise ValueError(f"column {name!r} missing from {path}")
        rows = [row for row in reader if row]
    n = len(rows)
    params = np.empty((n, 3))
    log_weights = np.empty(n)
    seconds = np.zeros(n)
    for i, row in enumerate(rows):
        params[i, 0] = float(row[idx["c"]])
        params[i, 1] = float(row[idx["gamma"]])
        params[i, 2] = float(row[idx["eta"]])
        log_weights[i] = float(row[idx["log_weight"]])
        if "seconds" in idx:
            seconds[i] = float(row[idx["seconds"]])
    return ChainTrace(
        scheme=scheme, params=params, log_weights=log_weights, seconds=seconds,
        acceptance={}, burn_in=burn_in, master_seed=master_seed,
        stream_path=stream_path,
    )


def run_chain(cfg: SchemeConfig, dataset: Dataset, rng,
              table: MixtureTable | None = None) -> ChainTrace:
    """Run one chain from the standard start and record every iteration.

    The stream is consumed strictly sequentially (initial path draw, then
    each iteration's draws in scheme order), so a chain is reproducible
    from (master_seed, path) alone.
    """
    n = len(dataset)
    if table is None:
        table = MixtureTable.omori()
    state = initial_state(cfg, n, rng)

    params = np.empty((cfg.iterations, 3))
    log_weights = np.zeros(cfg.iterations)
    seconds = np.empty(cfg.iterations)

    for it in range(cfg.iterations):
        t0 = time.perf_counter()
        if cfg.scheme == "kf":
            kf_iteration(state, cfg, dataset, table, rng)
            log_weights[it] = importance_log_weight(
                dataset, state.x, state.c, math.exp(0.5 * state.eta), table
            )
        elif cfg.scheme == "ens1":
            ens1_iteration(state, cfg, dataset, rng)
        else:
            ens2_iteration(state, cfg, dataset, rng)
        seconds[it] = time.perf_counter() - t0
        params[it, 0] = state.c
        params[it, 1] = state.gamma
        params[it, 2] = state.eta

    return ChainTrace(
        scheme=cfg.scheme, params=params, log_weights=log_weights,
        seconds=seconds, acceptance=dict(state.counters), burn_in=cfg.burn_in,
        master_seed=rng.master_seed, stream_path=rng.path,
    )
