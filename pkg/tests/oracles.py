"""Independently coded reference implementations for the tests.

Everything here favors directness over speed: dense matrix algebra instead
of Kalman recursions, explicit enumeration instead of dynamic programming,
O(n^2) sums instead of FFTs.  Only plain data containers are taken from the
package; all numerics are recomputed from the model definition.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.special import logsumexp
from scipy.stats import multivariate_normal, norm

from svmcmc.model import Dataset

LOG_2PI = math.log(2.0 * math.pi)


def make_dataset(y) -> Dataset:
    return Dataset.from_returns(np.asarray(y, dtype=float))


# ---------------------------------------------------------------------------
# Path densities


def nc_path_logpdf(x, phi: float) -> float:
    """Full log-density of a standardized AR(1) path, constants included."""
    x = np.asarray(x, dtype=float)
    out = norm.logpdf(x[0], 0.0, 1.0 / math.sqrt(1.0 - phi * phi))
    if x.size > 1:
        out += np.sum(norm.logpdf(x[1:], phi * x[:-1], 1.0))
    return float(out)


def nc_path_logpdf_grid(x, phis) -> np.ndarray:
    """nc_path_logpdf vectorized over a grid of phi values."""
    x = np.asarray(x, dtype=float)
    phis = np.asarray(phis, dtype=float)
    one_m = 1.0 - phis * phis
    out = -0.5 * (LOG_2PI - np.log(one_m) + one_m * x[0] ** 2)
    resid = x[None, 1:] - phis[:, None] * x[None, :-1]
    out = out - 0.5 * np.sum(LOG_2PI + resid * resid, axis=1)
    return out


def c_path_logpdf(xt, c: float, phi: float, sigma2: float) -> float:
    """Full log-density of a centered path, constants included."""
    xt = np.asarray(xt, dtype=float)
    sd = math.sqrt(sigma2)
    out = norm.logpdf(xt[0], c, sd / math.sqrt(1.0 - phi * phi))
    out += np.sum(norm.logpdf(xt[1:], c + phi * (xt[:-1] - c), sd))
    return float(out)


# ---------------------------------------------------------------------------
# Dense joint-Gaussian reference for the mixture-linearized model


def ar1_precision(n: int, phi: float) -> np.ndarray:
    """Precision matrix of the standardized stationary AR(1)."""
    q = np.zeros((n, n))
    idx = np.arange(n)
    q[idx, idx] = 1.0 + phi * phi
    q[0, 0] = 1.0
    q[n - 1, n - 1] = 1.0
    if n == 1:
        q[0, 0] = 1.0 - phi * phi
    else:
        q[idx[:-1], idx[1:]] = -phi
        q[idx[1:], idx[:-1]] = -phi
    return q


def _obs_terms(dataset, r, t, table):
    r = np.asarray(r)
    offs = table.means[r] + t.c
    tau2 = table.variances[r]
    return offs, tau2


def dense_conditional(dataset, r, t, table):
    """Mean and covariance of the whole path given all observations."""
    n = len(dataset)
    offs, tau2 = _obs_terms(dataset, r, t, table)
    sigma = t.sigma
    lam = ar1_precision(n, t.phi) + np.diag(sigma * sigma / tau2)
    b = sigma * (dataset.log_y2 - offs) / tau2
    cov = np.linalg.inv(lam)
    return cov @ b, cov


def dense_filter_moments(dataset, r, t, table):
    """Filtered mean and variance of x_i given observations up to i."""
    n = len(dataset)
    offs, tau2 = _obs_terms(dataset, r, t, table)
    sigma = t.sigma
    z = dataset.log_y2
    means = np.empty(n)
    variances = np.empty(n)
    for i in range(n):
        lam = ar1_precision(i + 1, t.phi) + np.diag(
            sigma * sigma / tau2[: i + 1]
        )
        b = sigma * (z[: i + 1] - offs[: i + 1]) / tau2[: i + 1]
        cov = np.linalg.inv(lam)
        means[i] = (cov @ b)[i]
        variances[i] = cov[i, i]
    return means, variances


def dense_marginal_loglik(dataset, r, t, table) -> float:
    """Log-density of log y^2 given indicators with the path integrated out."""
    n = len(dataset)
    offs, tau2 = _obs_terms(dataset, r, t, table)
    prior_cov = np.linalg.inv(ar1_precision(n, t.phi))
    cov = t.sigma2 * prior_cov + np.diag(tau2)
    return float(multivariate_normal.logpdf(dataset.log_y2, offs, cov))


# ---------------------------------------------------------------------------
# Mixture brute force


def indicator_probs(z_i: float, x_i: float, c: float, sigma: float, table):
    """Normalized posterior over components for one observation."""
    p = table.weights * norm.pdf(
        z_i, table.means + c + sigma * x_i, np.sqrt(table.variances)
    )
    return p / p.sum()


def mixture_posterior_x_moments(dataset, t, table):
    """Exact posterior mean/cov of x with indicators summed out.

    Enumerates all component combinations; exponential in N, so N must be
    tiny.
    """
    n = len(dataset)
    combos = list(itertools.product(range(table.n_components), repeat=n))
    logw = np.empty(len(combos))
    means = np.empty((len(combos), n))
    covs = np.empty((len(combos), n, n))
    for j, r in enumerate(combos):
        r = np.asarray(r)
        means[j], covs[j] = dense_conditional(dataset, r, t, table)
        logw[j] = dense_marginal_loglik(dataset, r, t, table) + np.sum(
            np.log(table.weights[r])
        )
    w = np.exp(logw - logw.max())
    w /= w.sum()
    mean = w @ means
    second = np.einsum("j,jkl->kl", w, covs + np.einsum(
        "jk,jl->jkl", means, means
    ))
    return mean, second - np.outer(mean, mean)


# ---------------------------------------------------------------------------
# Ensemble enumeration


def ensemble_log_weight(dataset, pools, phi: float, c: float, l: int,
                        seq) -> float:
    """Joint log-weight of one (eta candidate, pool index sequence)."""
    seq = list(seq)
    n = len(seq)
    pick = (np.arange(n), seq)
    x = pools.x_pools[pick]
    sigma = math.exp(0.5 * pools.eta_pool[l])
    lw = nc_path_logpdf(x, phi)
    lw += float(np.sum(norm.logpdf(
        dataset.y, 0.0, np.exp(0.5 * (c + sigma * x))
    )))
    lw -= float(np.sum(pools.x_log_dens[pick]))
    return lw


def enumerate_log_rho(dataset, pools, phi: float, c: float) -> np.ndarray:
    """Brute-force ensemble log-evidence per eta candidate."""
    n, l_x = pools.x_pools.shape
    out = np.empty(pools.eta_pool.size)
    for l in range(pools.eta_pool.size):
        lws = [
            ensemble_log_weight(dataset, pools, phi, c, l, seq)
            for seq in itertools.product(range(l_x), repeat=n)
        ]
        out[l] = logsumexp(lws)
    return out


def enumerate_joint_probs(dataset, pools, phi: float, c: float):
    """Probability of every (eta candidate, sequence) ensemble element."""
    n, l_x = pools.x_pools.shape
    seqs = list(itertools.product(range(l_x), repeat=n))
    lw = np.array([
        [ensemble_log_weight(dataset, pools, phi, c, l, seq) for seq in seqs]
        for l in range(pools.eta_pool.size)
    ])
    w = np.exp(lw - lw.max())
    return seqs, w / w.sum()


def forward_log_rho_reference(dataset, pools, phi: float, c: float
                              ) -> np.ndarray:
    """Plain log-space forward recursion; no caching, no normalization."""
    n, l_x = pools.x_pools.shape
    x = pools.x_pools
    sigmas = np.exp(0.5 * pools.eta_pool)
    v = c + sigmas[None, None, :] * x[:, :, None]
    logw = (
        norm.logpdf(dataset.y[:, None, None], 0.0, np.exp(0.5 * v))
        - pools.x_log_dens[:, :, None]
    )
    log_alpha = (
        norm.logpdf(x[0], 0.0, 1.0 / math.sqrt(1.0 - phi * phi))[:, None]
        + logw[0]
    )
    for i in range(1, n):
        log_tr = norm.logpdf(x[i][None, :], phi * x[i - 1][:, None], 1.0)
        log_alpha = (
            logsumexp(log_alpha[:, None, :] + log_tr[:, :, None], axis=0)
            + logw[i]
        )
    return logsumexp(log_alpha, axis=0)


# ---------------------------------------------------------------------------
# Miscellaneous


def direct_autocov(series, mean: float) -> np.ndarray:
    """O(n^2) biased autocovariance about a supplied mean."""
    x = np.asarray(series, dtype=float) - mean
    n = x.size
    return np.array([np.dot(x[: n - k], x[k:]) / n for k in range(n)])


def gaussian_logpdf(value, mean, var) -> float:
    return float(norm.logpdf(value, mean, math.sqrt(var)))


def merge_low_expected(counts, probs, min_expected: float = 10.0):
    """Pool cells with small expected counts for a chi-squared test."""
    counts = np.asarray(counts, dtype=float)
    probs = np.asarray(probs, dtype=float)
    total = counts.sum()
    order = np.argsort(probs)[::-1]
    kept_c, kept_p = [], []
    tail_c = tail_p = 0.0
    for idx in order:
        if probs[idx] * total >= min_expected:
            kept_c.append(counts[idx])
            kept_p.append(probs[idx])
        else:
            tail_c += counts[idx]
            tail_p += probs[idx]
    if tail_p > 0.0:
        kept_c.append(tail_c)
        kept_p.append(tail_p)
    return np.asarray(kept_c), np.asarray(kept_p)


def chi2_pvalue(counts, probs) -> float:
    """Pearson chi-squared goodness-of-fit p-value with cell pooling."""
    from scipy.stats import chi2

    counts, probs = merge_low_expected(counts, probs)
    expected = probs / probs.sum() * counts.sum()
    stat = float(np.sum((counts - expected) ** 2 / expected))
    dof = counts.size - 1
    return float(chi2.sf(stat, dof))
