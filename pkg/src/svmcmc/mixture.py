"""Gaussian mixture approximation to the log chi-squared(1) noise.

Writing z_i = log y_i^2 turns the observation equation into a linear one,
z_i = c + sigma x_i + zeta_i, where zeta_i = log epsilon_i^2 follows a log
chi-squared(1) distribution.  That distribution is approximated by a ten
component normal mixture; conditional on the component indicators the model
is linear-Gaussian and Kalman machinery applies.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .model import LOG_2PI, Dataset, exact_obs_loglik

__all__ = [
    "MixtureTable",
    "OMORI_COMPONENTS",
    "sample_indicators",
    "approx_obs_loglik",
    "approx_obs_loglik_path",
    "mixture_marginal_loglik",
    "importance_log_weight",
]

# Ten-component normal mixture fit to the log chi-squared(1) distribution,
# from Omori, Chib, Shephard and Nakajima (2007).  Columns: component
# probability, mean, variance.
OMORI_COMPONENTS = np.array(
    [
        [0.00609, 1.92677, 0.11265],
        [0.04775, 1.34744, 0.17788],
        [0.13057, 0.73504, 0.26768],
        [0.20674, 0.02266, 0.40611],
        [0.22715, -0.85173, 0.62699],
        [0.18842, -1.97278, 0.98583],
        [0.12047, -3.46788, 1.57469],
        [0.05591, -5.55246, 2.54498],
        [0.01575, -8.68384, 4.16591],
        [0.00115, -14.65000, 7.33342],
    ]
)

# Index of the component whose center sits closest to the median of the
# log chi-squared(1) distribution (about -0.787); used to initialize
# indicator vectors.
DEFAULT_COMPONENT = 4


@dataclass(frozen=True)
class MixtureTable:
    """Normal mixture with per-component weights, means and variances."""

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        m = np.asarray(self.means, dtype=float)
        v = np.asarray(self.variances, dtype=float)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "variances", v)
        if not (w.ndim == m.ndim == v.ndim == 1 and w.size == m.size == v.size >= 1):
            raise ValueError("weights, means, variances must be 1-d and equal length")
        # Zero weights are allowed (degenerate test tables); negatives are not.
        if np.any(w < 0.0) or not math.isclose(w.sum(), 1.0, abs_tol=1e-8):
            raise ValueError("weights must be nonnegative and sum to 1")
        if not np.any(w > 0.0):
            raise ValueError("at least one weight must be positive")
        if np.any(v <= 0.0):
            raise ValueError("variances must be positive")

    @property
    def n_components(self) -> int:
        return self.weights.size

    @classmethod
    def omori(cls) -> "MixtureTable":
        """The ten-component log chi-squared(1) approximation."""
        t = OMORI_COMPONENTS
        return cls(weights=t[:, 0], means=t[:, 1], variances=t[:, 2])

    def mean(self) -> float:
        """Mean of the mixture distribution."""
        return float(np.sum(self.weights * self.means))

    def variance(self) -> float:
        """Variance of the mixture distribution."""
        mu = self.mean()
        return float(np.sum(self.weights * (self.variances + (self.means - mu) ** 2)))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["weight", "mean", "variance"])
            for k in range(self.n_components):
                writer.writerow(
                    [
                        repr(float(self.weights[k])),
                        repr(float(self.means[k])),
                        repr(float(self.variances[k])),
                    ]
                )

    @classmethod
    def from_csv(cls, path) -> "MixtureTable":
        from .model import _skip_comments

        rows = []
        with open(path, newline="") as fh:
            reader = _skip_comments(csv.reader(fh))
            header = next(reader)
            if header[:3] != ["weight", "mean", "variance"]:
                raise ValueError(f"unexpected mixture table header in {path}")
            for row in reader:
                if row:
                    rows.append([float(v) for v in row[:3]])
        t = np.asarray(rows)
        return cls(weights=t[:, 0], means=t[:, 1], variances=t[:, 2])


def _component_log_posts(dataset: Dataset, x, c, sigma, table: MixtureTable):
    """Per-observation unnormalized log posterior over components.

    Entry (i, k) is log pi_k + log N(z_i; m_k + c + sigma x_i, tau_k^2).
    """
    z = dataset.log_y2
    resid = (z - c - sigma * np.asarray(x, dtype=float))[:, None] - table.means[None, :]
    tau2 = table.variances[None, :]
    with np.errstate(divide="ignore"):
        log_w = np.log(table.weights)
    return (
        log_w[None, :]
        - 0.5 * (LOG_2PI + np.log(tau2))
        - 0.5 * resid * resid / tau2
    )


def sample_indicators(dataset: Dataset, x, c, sigma, table: MixtureTable, rng):
    """Draw the component indicator of every observation.

    Each indicator is sampled from its conditional posterior over
    components by cumulative-sum inversion with one uniform per
    observation.
    """
    logp = _component_log_posts(dataset, x, c, sigma, table)
    p = np.exp(logp - logp.max(axis=1, keepdims=True))
    cum = np.cumsum(p, axis=1)
    u = rng.uniform01(len(dataset)) * cum[:, -1]
    r = np.sum(cum < u[:, None], axis=1)
    return np.minimum(r, table.n_components - 1).astype(np.int64)


def approx_obs_loglik(log_y2_i: float, x_i: float, r_i: int, c, sigma,
                      table: MixtureTable) -> float:
    """Gaussian log-density of one z_i given its path value and indicator."""
    tau2 = table.variances[r_i]
    resid = log_y2_i - table.means[r_i] - c - sigma * x_i
    return float(-0.5 * (LOG_2PI + math.log(tau2) + resid * resid / tau2))


def approx_obs_loglik_path(dataset: Dataset, x, r, c, sigma,
                           table: MixtureTable) -> float:
    """Gaussian log-density of all z_i given the path and indicators."""
    tau2 = table.variances[r]
    resid = dataset.log_y2 - table.means[r] - c - sigma * np.asarray(x, dtype=float)
    return float(-0.5 * np.sum(LOG_2PI + np.log(tau2) + resid * resid / tau2))


def mixture_marginal_loglik(dataset: Dataset, x, c, sigma,
                            table: MixtureTable) -> float:
    """Log-density of all z_i with the indicators summed out."""
    logp = _component_log_posts(dataset, x, c, sigma, table)
    return float(np.sum(logsumexp(logp, axis=1)))


def importance_log_weight(dataset: Dataset, x, c, sigma,
                          table: MixtureTable) -> float:
    """Log importance weight correcting the mixture model to the exact one.

    Ratio of the exact return density (in y) to the indicator-marginalized
    mixture density (in log y^2).  The change-of-variables factor between
    the two scales depends only on the data, so it is constant across draws
    and drops out of self-normalized averages.
    """
    return exact_obs_loglik(dataset, x, c, sigma) - mixture_marginal_loglik(
        dataset, x, c, sigma, table
    )
