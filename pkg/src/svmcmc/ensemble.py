"""Ensemble moves for the volatility path and scale via embedded HMM sums.

The path update replaces the single current path by a per-time pool of
candidate values (pool slot 0 holds the current value, the rest are fresh
auxiliary draws) and a pool of candidate eta values (slot 0 current, the
rest prior draws).  Conditional on the pools the model restricted to pool
values is a finite HMM, so the joint density summed over all pool-valued
paths is available from one forward recursion per eta candidate; a new
(eta, path) is then drawn exactly by backward sampling.  Because auxiliary
pool members are drawn independently of the current state and the current
values occupy slot 0, the move targets the exact posterior.

The forward quantities are also reused to update the persistence parameter:
summing the forward evidence over the eta pool gives a marginal ensemble
density in gamma that a random-walk Metropolis step can target, with the
pools shared between the current and proposed gamma (drawn once at the
averaged persistence so the construction is symmetric).

All per-time work is done by numba kernels; at the default pool sizes the
transition matrices dominate the cost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.special import logsumexp

from . import model
from .model import LOG_2PI, Dataset, PriorSpec

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

__all__ = [
    "PoolConfig",
    "PoolGrid",
    "ForwardCache",
    "build_pools",
    "transition_probs",
    "obs_log_weights",
    "forward_pass",
    "sample_eta_and_sequence",
    "ens1_update",
    "ens2_update",
]


@dataclass(frozen=True)
class PoolConfig:
    """Pool sizes and the scale multiplier for auxiliary path draws."""

    l_x: int = 50
    l_eta: int = 10
    pool_scale: float = 2.0

    def __post_init__(self):
        if self.l_x < 1 or self.l_eta < 1:
            raise ValueError("pool sizes must be at least 1")
        if not self.pool_scale > 0.0:
            raise ValueError("pool_scale must be positive")


@dataclass(frozen=True)
class PoolGrid:
    """Realized pools: per-time path candidates and eta candidates.

    x_log_dens holds the generating log-density of every path candidate
    (the same zero-mean normal at every time); it enters the forward
    weights as the importance denominator for path values.
    """

    x_pools: np.ndarray
    eta_pool: np.ndarray
    x_log_dens: np.ndarray
    pool_sd: float

    def __post_init__(self):
        if self.x_pools.ndim != 2 or self.eta_pool.ndim != 1:
            raise ValueError("x_pools must be 2-d and eta_pool 1-d")
        if self.x_log_dens.shape != self.x_pools.shape:
            raise ValueError("x_log_dens must match x_pools in shape")
        if not self.pool_sd > 0.0:
            raise ValueError("pool_sd must be positive")


@dataclass(frozen=True)
class ForwardCache:
    """Forward-pass output for every eta candidate.

    alpha[i, l, k] is the normalized forward probability of path candidate
    k at time i under eta candidate l; log_c[l, i] the per-time
    normalizer; log_rho[l] the total forward evidence (-inf for columns
    that died of numerical underflow); trans the per-step transition
    density matrices shared by all eta candidates.
    """

    alpha: np.ndarray
    log_c: np.ndarray
    log_rho: np.ndarray
    alive: np.ndarray
    log_p1: np.ndarray
    trans: np.ndarray


def build_pools(x_current, eta_current: float, cfg: PoolConfig,
                phi_scale: float, prior: PriorSpec, rng) -> PoolGrid:
    """Draw auxiliary pools around the current state.

    Path candidates are i.i.d. N(0, (pool_scale^2)/(1 - phi_scale^2)),
    matching the stationary spread at phi_scale inflated by pool_scale;
    eta candidates are prior draws.  Slot 0 of every pool holds the
    current value.  Draw order: path draws (row-major), then eta draws.
    """
    x_current = np.asarray(x_current, dtype=float)
    n = x_current.size
    if not abs(phi_scale) < 1.0:
        raise ValueError("phi_scale must satisfy |phi_scale| < 1")
    pool_sd = cfg.pool_scale / math.sqrt(1.0 - phi_scale * phi_scale)

    x_pools = np.empty((n, cfg.l_x))
    x_pools[:, 0] = x_current
    if cfg.l_x > 1:
        x_pools[:, 1:] = pool_sd * rng.normal01((n, cfg.l_x - 1))

    eta_pool = np.empty(cfg.l_eta)
    eta_pool[0] = eta_current
    if cfg.l_eta > 1:
        eta_pool[1:] = np.log(
            rng.inverse_gamma(prior.ig_alpha, prior.ig_beta, cfg.l_eta - 1)
        )

    x_log_dens = -0.5 * (
        LOG_2PI + 2.0 * math.log(pool_sd) + (x_pools / pool_sd) ** 2
    )
    return PoolGrid(x_pools, eta_pool, x_log_dens, pool_sd)


def transition_probs(x_prev, x_now, phi: float) -> np.ndarray:
    """Transition density matrix between consecutive pools.

    Entry (k2, k1) is the N(phi * x_prev[k2], 1) density at x_now[k1];
    rows are not normalized.
    """
    d = np.asarray(x_now)[None, :] - phi * np.asarray(x_prev)[:, None]
    return INV_SQRT_2PI * np.exp(-0.5 * d * d)


@njit(cache=True)
def _transition_stack(x_pools, phi):
    n, l_x = x_pools.shape
    trans = np.empty((n - 1, l_x, l_x))
    for i in range(1, n):
        for k2 in range(l_x):
            m = phi * x_pools[i - 1, k2]
            for k1 in range(l_x):
                d = x_pools[i, k1] - m
                trans[i - 1, k2, k1] = INV_SQRT_2PI * np.exp(-0.5 * d * d)
    return trans


@njit(cache=True)
def _obs_logw_kernel(y2, x_pools, x_log_dens, sigmas, c):
    n, l_x = x_pools.shape
    l_eta = sigmas.size
    out = np.empty((n, l_x, l_eta))
    for i in range(n):
        for k in range(l_x):
            for l in range(l_eta):
                v = c + sigmas[l] * x_pools[i, k]
                out[i, k, l] = (
                    -0.5 * (LOG_2PI + v + y2[i] * np.exp(-v)) - x_log_dens[i, k]
                )
    return out


@njit(cache=True)
def _forward_kernel(trans, obs_logw, log_p1):
    n, l_x, l_eta = obs_logw.shape
    alpha = np.zeros((n, l_eta, l_x))
    log_c = np.zeros((l_eta, n))
    alive = np.ones(l_eta, np.bool_)

    tmp = np.empty(l_x)
    for l in range(l_eta):
        m = -np.inf
        for k in range(l_x):
            tmp[k] = log_p1[k] + obs_logw[0, k, l]
            if tmp[k] > m:
                m = tmp[k]
        if m == -np.inf:
            alive[l] = False
            continue
        s = 0.0
        for k in range(l_x):
            a = np.exp(tmp[k] - m)
            alpha[0, l, k] = a
            s += a
        inv = 1.0 / s
        for k in range(l_x):
            alpha[0, l, k] *= inv
        log_c[l, 0] = np.log(s) + m

    for i in range(1, n):
        pre = np.dot(alpha[i - 1], trans[i - 1])
        for l in range(l_eta):
            if not alive[l]:
                continue
            m = -np.inf
            for k in range(l_x):
                if obs_logw[i, k, l] > m:
                    m = obs_logw[i, k, l]
            s = 0.0
            if m > -np.inf:
                for k in range(l_x):
                    a = np.exp(obs_logw[i, k, l] - m) * pre[l, k]
                    alpha[i, l, k] = a
                    s += a
            if s <= 0.0 or not np.isfinite(s):
                alive[l] = False
                for k in range(l_x):
                    alpha[i, l, k] = 0.0
                continue
            inv = 1.0 / s
            for k in range(l_x):
                alpha[i, l, k] *= inv
            log_c[l, i] = np.log(s) + m

    return alpha, log_c, alive


@njit(cache=True)
def _invert_cumulative(w, total, u):
    # First index whose running sum exceeds u * total; the fallback covers
    # accumulated rounding at the top end.
    target = u * total
    acc = 0.0
    for k in range(w.size):
        acc += w[k]
        if target < acc:
            return k
    return w.size - 1


@njit(cache=True)
def _backward_kernel(alpha_l, trans, us):
    n, l_x = alpha_l.shape
    idx = np.empty(n, np.int64)
    tot = 0.0
    for k in range(l_x):
        tot += alpha_l[n - 1, k]
    idx[n - 1] = _invert_cumulative(alpha_l[n - 1], tot, us[n - 1])
    w = np.empty(l_x)
    for i in range(n - 2, -1, -1):
        tot = 0.0
        for k in range(l_x):
            w[k] = trans[i, k, idx[i + 1]] * alpha_l[i, k]
            tot += w[k]
        idx[i] = _invert_cumulative(w, tot, us[i])
    return idx


def obs_log_weights(dataset: Dataset, pools: PoolGrid, c: float) -> np.ndarray:
    """Observation log-weights of every (time, path candidate, eta candidate).

    log N(y_i; 0, exp(c + sigma_l x)) minus the candidate's generating
    log-density; shared by forward passes at different phi.
    """
    sigmas = np.exp(0.5 * pools.eta_pool)
    y2 = dataset.y * dataset.y
    return _obs_logw_kernel(y2, pools.x_pools, pools.x_log_dens, sigmas, c)


def forward_pass(dataset: Dataset, pools: PoolGrid, phi: float, c: float,
                 require_current_alive: bool = True,
                 obs_logw: np.ndarray | None = None) -> ForwardCache:
    """Normalized forward recursion over the pool HMM for every eta candidate.

    A column whose forward mass underflows to zero is marked dead and gets
    log_rho = -inf.  The current-eta column (slot 0) dying means the
    chain's own state is numerically unrepresentable, which is an error
    unless the caller opts out (proposal evaluations do).
    """
    if not abs(phi) < 1.0:
        raise ValueError("phi must satisfy |phi| < 1")
    if obs_logw is None:
        obs_logw = obs_log_weights(dataset, pools, c)
    x1 = pools.x_pools[0]
    one_m_phi2 = 1.0 - phi * phi
    log_p1 = -0.5 * (LOG_2PI - math.log(one_m_phi2) + one_m_phi2 * x1 * x1)
    trans = _transition_stack(pools.x_pools, phi)
    alpha, log_c, alive = _forward_kernel(trans, obs_logw, log_p1)
    log_rho = np.where(alive, log_c.sum(axis=1), -np.inf)
    if require_current_alive and not alive[0]:
        raise RuntimeError(
            "forward mass of the current-eta column underflowed to zero"
        )
    return ForwardCache(alpha, log_c, log_rho, alive, log_p1, trans)


def sample_eta_and_sequence(cache: ForwardCache, pools: PoolGrid, rng):
    """Draw (eta, path) from the ensemble given the forward cache.

    The eta candidate is drawn proportional to its forward evidence, the
    path by backward sampling through that candidate's forward
    probabilities.  Draw order: one uniform for the eta index, then n
    uniforms consumed last time first.  Returns (eta, path values,
    eta index, per-time candidate indices).
    """
    l = rng.categorical_log(cache.log_rho)
    n = cache.alpha.shape[0]
    us = rng.uniform01(n)
    alpha_l = np.ascontiguousarray(cache.alpha[:, l, :])
    idx = _backward_kernel(alpha_l, cache.trans, us)
    x = pools.x_pools[np.arange(n), idx]
    return float(pools.eta_pool[l]), x, int(l), idx


def ens1_update(x, eta: float, c: float, phi: float, cfg: PoolConfig,
                prior: PriorSpec, dataset: Dataset, rng):
    """Joint ensemble refresh of (eta, path) at the current phi and c.

    Draw order: pool draws, then the selection draws of
    sample_eta_and_sequence.
    """
    pools = build_pools(x, eta, cfg, phi, prior, rng)
    cache = forward_pass(dataset, pools, phi, c)
    eta_new, x_new, _, _ = sample_eta_and_sequence(cache, pools, rng)
    return eta_new, x_new


def ens2_update(x, c: float, gamma: float, eta: float, cfg: PoolConfig,
                gamma_prop_sd: float, prior: PriorSpec, dataset: Dataset,
                rng):
    """Ensemble Metropolis step on gamma plus the (eta, path) refresh.

    Proposes gamma* from a random walk, builds one set of pools at the
    averaged persistence (symmetric in current and proposal), runs the
    forward recursion at both phi values over the same pools and accepts
    with the ratio of prior-weighted total evidences.  The (eta, path)
    refresh then samples from the accepted ensemble.  Draw order: proposal
    normal, pool draws, acceptance uniform, selection draws.  Returns
    (gamma, eta, path values, accepted flag).
    """
    z = rng.normal01()
    gamma_prop = gamma + gamma_prop_sd * z
    phi_cur = math.tanh(0.5 * gamma)
    phi_prop = math.tanh(0.5 * gamma_prop)
    phi_avg = 0.5 * (phi_cur + phi_prop)

    pools = build_pools(x, eta, cfg, phi_avg, prior, rng)
    obs_logw = obs_log_weights(dataset, pools, c)
    cache_cur = forward_pass(dataset, pools, phi_cur, c, obs_logw=obs_logw)

    lp_cur = float(model.log_prior_gamma(gamma, prior))
    lp_prop = float(model.log_prior_gamma(gamma_prop, prior))
    cache_prop = None
    if lp_prop == -np.inf:
        log_ratio = -np.inf
    else:
        cache_prop = forward_pass(
            dataset, pools, phi_prop, c,
            require_current_alive=False, obs_logw=obs_logw,
        )
        if np.any(np.isfinite(cache_prop.log_rho)):
            log_num = logsumexp(cache_prop.log_rho) + lp_prop
            log_den = logsumexp(cache_cur.log_rho) + lp_cur
            log_ratio = log_num - log_den
        else:
            log_ratio = -np.inf

    u = rng.uniform01()
    accepted = log_ratio > -np.inf and (u <= 0.0 or math.log(u) < log_ratio)
    if accepted:
        gamma = float(gamma_prop)
        winner = cache_prop
    else:
        winner = cache_cur
    eta_new, x_new, _, _ = sample_eta_and_sequence(winner, pools, rng)
    return gamma, eta_new, x_new, int(accepted)
