"""MCMC samplers and efficiency benchmarks for stochastic volatility.

Implements three posterior samplers for the univariate stochastic
volatility model: a mixture-linearized Kalman scheme with interweaved
parameter updates and importance reweighting (kf), and two ensemble
schemes that refresh the latent path and volatility-of-volatility through
embedded finite HMM sums (ens1, ens2).  Diagnostics compare them by
autocorrelation time per second of compute.
"""

from .chains import ChainState, ChainTrace, SchemeConfig, run_chain
from .diagnostics import act_estimate, weighted_summary
from .ensemble import PoolConfig
from .experiment import (
    ExperimentConfig,
    parse_config,
    run_experiment,
    sweep_experiment,
)
from .mixture import MixtureTable
from .model import (
    Dataset,
    LatentPath,
    Params,
    PriorSpec,
    TransformedParams,
    simulate_sv,
)
from .rng import RandomStream

__version__ = "0.1.0"

__all__ = [
    "ChainState",
    "ChainTrace",
    "Dataset",
    "ExperimentConfig",
    "LatentPath",
    "MixtureTable",
    "Params",
    "PoolConfig",
    "PriorSpec",
    "RandomStream",
    "SchemeConfig",
    "TransformedParams",
    "act_estimate",
    "parse_config",
    "run_chain",
    "run_experiment",
    "simulate_sv",
    "sweep_experiment",
    "weighted_summary",
    "__version__",
]
