"""Interweaved parameter updates driven by path sufficient statistics.

The parameter block updates (c, gamma, eta) twice per sweep: first holding
the standardized path fixed (where phi sees the path prior alone and
(c, eta) see the observation density), then holding the centered path fixed
(where the full triple sees only the path density and the observation
density is parameter-free).  Mapping back with the updated parameters moves
the path as well, which is what breaks the slow mixing of either
parametrization on its own.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import model
from .model import Dataset, PriorSpec, exact_obs_loglik, log1m_phi_sq
from .mixture import MixtureTable, approx_obs_loglik_path

__all__ = [
    "SuffStatsNC",
    "SuffStatsC",
    "ObsModel",
    "suff_stats_nc",
    "suff_stats_c",
    "loglik_phi_nc",
    "loglik_c",
    "obs_loglik",
    "metropolis_phi_nc",
    "metropolis_c_eta_nc",
    "metropolis_c_joint",
    "gis_nc_parameter_block",
]


@dataclass(frozen=True)
class SuffStatsNC:
    """Sufficient statistics of the standardized path for phi."""

    t1: float  # sum of x_i^2
    t2: float  # sum of x_{i-1} x_i
    t3: float  # x_1^2 + x_n^2


@dataclass(frozen=True)
class SuffStatsC:
    """Sufficient statistics of the centered path for (c, phi, sigma^2)."""

    tt1: float  # sum of xt_i^2
    tt2: float  # sum of xt_i^2 over interior times
    tt3: float  # sum of xt_{i-1} xt_i
    tt4: float  # sum of xt_i over interior times
    tt5: float  # xt_1 + xt_n


def suff_stats_nc(x) -> SuffStatsNC:
    """Compute the three standardized-path statistics."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("need a 1-d path of length >= 2")
    return SuffStatsNC(
        t1=float(np.dot(x, x)),
        t2=float(np.dot(x[:-1], x[1:])),
        t3=float(x[0] ** 2 + x[-1] ** 2),
    )


def suff_stats_c(xt) -> SuffStatsC:
    """Compute the five centered-path statistics."""
    xt = np.asarray(xt, dtype=float)
    if xt.ndim != 1 or xt.size < 3:
        raise ValueError("need a 1-d path of length >= 3")
    interior = xt[1:-1]
    return SuffStatsC(
        tt1=float(np.dot(xt, xt)),
        tt2=float(np.dot(interior, interior)),
        tt3=float(np.dot(xt[:-1], xt[1:])),
        tt4=float(np.sum(interior)),
        tt5=float(xt[0] + xt[-1]),
    )


def loglik_phi_nc(phi: float, t: SuffStatsNC) -> float:
    """Log-density of the standardized path in phi, up to a constant.

    (1/2) log(1 - phi^2) - (1/2) [phi^2 (t1 - t3) - 2 phi t2 + t1];
    the additive constant -(n/2) log 2 pi is dropped.
    """
    if not abs(phi) < 1.0:
        return -math.inf
    quad = phi * phi * (t.t1 - t.t3) - 2.0 * phi * t.t2 + t.t1
    return 0.5 * math.log1p(-phi * phi) - 0.5 * quad


def loglik_c(c: float, phi: float, sigma2: float, tt: SuffStatsC,
             n: int) -> float:
    """Log-density of the centered path in (c, phi, sigma^2), up to a constant.

    Same dropped constant as loglik_phi_nc.
    """
    if not (abs(phi) < 1.0 and sigma2 > 0.0):
        return -math.inf
    quad = (
        tt.tt1
        + phi * phi * tt.tt2
        - 2.0 * phi * tt.tt3
        - 2.0 * c * phi * phi * tt.tt4
        - 2.0 * c * (tt.tt4 + tt.tt5)
        + 4.0 * c * phi * tt.tt4
        + 2.0 * c * phi * tt.tt5
        + (n - 1) * (c * (phi - 1.0)) ** 2
        + c * c * (1.0 - phi * phi)
    )
    return (
        -0.5 * n * math.log(sigma2)
        + 0.5 * math.log1p(-phi * phi)
        - 0.5 * quad / sigma2
    )


@dataclass(frozen=True)
class ObsModel:
    """Observation density used by the (c, eta) update.

    Either the exact return density or, for the mixture-linearized sampler,
    the Gaussian density of log y^2 given the current indicators.
    """

    kind: str
    indicators: np.ndarray | None = None
    table: MixtureTable | None = None

    @classmethod
    def exact(cls) -> "ObsModel":
        return cls(kind="exact")

    @classmethod
    def mixture(cls, indicators, table: MixtureTable) -> "ObsModel":
        return cls(kind="mixture", indicators=np.asarray(indicators), table=table)

    def __post_init__(self):
        if self.kind not in ("exact", "mixture"):
            raise ValueError(f"unknown observation model kind {self.kind!r}")
        if self.kind == "mixture" and (self.indicators is None or self.table is None):
            raise ValueError("mixture observation model needs indicators and a table")


def obs_loglik(obs: ObsModel, dataset: Dataset, x, c: float,
               sigma: float) -> float:
    """Observation log-density given the standardized path."""
    if obs.kind == "exact":
        return exact_obs_loglik(dataset, x, c, sigma)
    return approx_obs_loglik_path(dataset, x, obs.indicators, c, sigma, obs.table)


def _log_prior_gamma_scalar(gamma: float, prior: PriorSpec) -> float:
    phi = math.tanh(0.5 * gamma)
    if not (prior.phi_lo < phi < prior.phi_hi):
        return -math.inf
    return float(
        log1m_phi_sq(gamma) - math.log(2.0) - math.log(prior.phi_hi - prior.phi_lo)
    )


def _log_prior_c_scalar(c: float, prior: PriorSpec) -> float:
    z = (c - prior.c_mean) / prior.c_sd
    return -0.5 * (model.LOG_2PI + z * z) - math.log(prior.c_sd)


def _log_prior_eta_scalar(eta: float, prior: PriorSpec) -> float:
    a, b = prior.ig_alpha, prior.ig_beta
    try:
        tail = b * math.exp(-eta)
    except OverflowError:
        return -math.inf
    return a * math.log(b) - math.lgamma(a) - a * eta - tail


def _mh_accept(log_target_prop: float, log_target_cur: float, u: float) -> bool:
    # Symmetric random-walk proposal, so the ratio is the target ratio alone.
    if log_target_prop == -math.inf:
        return False
    if log_target_cur == -math.inf:
        return True
    return math.log(u) < log_target_prop - log_target_cur if u > 0.0 else True


def metropolis_phi_nc(gamma: float, t: SuffStatsNC, prior: PriorSpec,
                      n_updates: int, prop_sd: float, rng) -> tuple[float, int]:
    """Random-walk Metropolis on gamma given standardized-path statistics.

    Runs n_updates steps; per step one normal then one uniform are drawn.
    Returns the final gamma and the number of accepted steps.
    """
    zs = rng.normal01(n_updates)
    us = rng.uniform01(n_updates)
    cur = loglik_phi_nc(math.tanh(0.5 * gamma), t) + _log_prior_gamma_scalar(
        gamma, prior
    )
    accepted = 0
    for j in range(n_updates):
        prop_gamma = gamma + prop_sd * zs[j]
        prop = loglik_phi_nc(math.tanh(0.5 * prop_gamma), t) + _log_prior_gamma_scalar(
            prop_gamma, prior
        )
        if _mh_accept(prop, cur, us[j]):
            gamma = prop_gamma
            cur = prop
            accepted += 1
    return gamma, accepted


def metropolis_c_eta_nc(c: float, eta: float, dataset: Dataset, x,
                        obs: ObsModel, prior: PriorSpec, prop_sds, rng
                        ) -> tuple[float, float, int]:
    """One joint Metropolis step on (c, eta) holding the standardized path.

    The target is the observation density times the (c, eta) priors; the
    path density does not involve (c, eta) in this parametrization.  Draw
    order: two normals, then one uniform.
    """
    sd_c, sd_eta = prop_sds
    zs = rng.normal01(2)
    u = rng.uniform01()

    def target(cv, ev):
        try:
            sigma = math.exp(0.5 * ev)
        except OverflowError:
            return -math.inf
        return (
            obs_loglik(obs, dataset, x, cv, sigma)
            + _log_prior_c_scalar(cv, prior)
            + _log_prior_eta_scalar(ev, prior)
        )

    prop_c = c + sd_c * zs[0]
    prop_eta = eta + sd_eta * zs[1]
    if _mh_accept(target(prop_c, prop_eta), target(c, eta), u):
        return float(prop_c), float(prop_eta), 1
    return c, eta, 0


def metropolis_c_joint(c: float, gamma: float, eta: float, tt: SuffStatsC,
                       n: int, prior: PriorSpec, n_updates: int, prop_sds,
                       rng) -> tuple[float, float, float, int]:
    """Random-walk Metropolis on (c, gamma, eta) given centered-path statistics.

    The observation density is parameter-free given the centered path, so
    the target is the path density times the priors.  Runs n_updates steps;
    per step three normals then one uniform are drawn.
    """
    sd_c, sd_gamma, sd_eta = prop_sds
    zs = rng.normal01((n_updates, 3))
    us = rng.uniform01(n_updates)

    def target(cv, gv, ev):
        try:
            sigma2 = math.exp(ev)
        except OverflowError:
            return -math.inf
        return (
            loglik_c(cv, math.tanh(0.5 * gv), sigma2, tt, n)
            + _log_prior_c_scalar(cv, prior)
            + _log_prior_gamma_scalar(gv, prior)
            + _log_prior_eta_scalar(ev, prior)
        )

    cur = target(c, gamma, eta)
    accepted = 0
    for j in range(n_updates):
        pc = c + sd_c * zs[j, 0]
        pg = gamma + sd_gamma * zs[j, 1]
        pe = eta + sd_eta * zs[j, 2]
        prop = target(pc, pg, pe)
        if _mh_accept(prop, cur, us[j]):
            c, gamma, eta = pc, pg, pe
            cur = prop
            accepted += 1
    return c, gamma, eta, accepted


def gis_nc_parameter_block(c: float, gamma: float, eta: float, x, dataset:
                           Dataset, obs: ObsModel, prior: PriorSpec,
                           n_metropolis: int, prop_sd_nc, prop_sd_c, rng):
    """Full interweaved parameter sweep starting and ending standardized.

    Standardized-side updates (phi alone, then (c, eta) jointly), map to
    the centered path with the updated parameters, the centered-side joint
    update, then map back with the final parameters.  Returns the updated
    (c, gamma, eta, x) and per-update acceptance counters.
    """
    x = np.asarray(x, dtype=float)
    t_nc = suff_stats_nc(x)
    gamma, acc_phi = metropolis_phi_nc(
        gamma, t_nc, prior, n_metropolis, prop_sd_nc[1], rng
    )
    c, eta, acc_ce = metropolis_c_eta_nc(
        c, eta, dataset, x, obs, prior, (prop_sd_nc[0], prop_sd_nc[2]), rng
    )
    xt = model.nc_values_to_c(x, c, math.exp(0.5 * eta))
    tt = suff_stats_c(xt)
    c, gamma, eta, acc_cj = metropolis_c_joint(
        c, gamma, eta, tt, xt.size, prior, n_metropolis, prop_sd_c, rng
    )
    x = model.c_values_to_nc(xt, c, math.exp(0.5 * eta))
    counters = {
        "phi_nc": (acc_phi, n_metropolis),
        "c_eta_nc": (acc_ce, 1),
        "c_joint": (acc_cj, n_metropolis),
    }
    return c, gamma, eta, x, counters
