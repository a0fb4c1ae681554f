"""Univariate stochastic volatility model: parametrizations, priors, simulation.

The model is handled in two parametrizations of the latent log-volatility
path.  In the standardized (non-centered, "nc") form the path is a unit
stationary AR(1),

    X_1 ~ N(0, 1/(1 - phi^2)),   X_i | x_{i-1} ~ N(phi x_{i-1}, 1),
    Y_i | x_i ~ N(0, exp(c + sigma x_i)),

and in the centered ("c") form the level and scale live inside the path,

    Xt_i = c + sigma X_i,   Y_i | xt_i ~ N(0, exp(xt_i)).

Parameters are sampled on the unconstrained scale (c, gamma, eta) with
gamma = log((1 + phi)/(1 - phi)) and eta = log sigma^2.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

LOG_2PI = math.log(2.0 * math.pi)

# Floor for y^2 when building log(y^2); exact zero returns would otherwise
# produce -inf observations.
TINY_Y2 = 1e-300

PARAMETRIZATIONS = ("nc", "c")

__all__ = [
    "LOG_2PI",
    "Params",
    "TransformedParams",
    "LatentPath",
    "Dataset",
    "PriorSpec",
    "transform",
    "inverse_transform",
    "log1m_phi_sq",
    "log_prior_c",
    "log_prior_gamma",
    "log_prior_eta",
    "log_prior",
    "sample_from_prior",
    "simulate_sv",
    "exact_obs_loglik",
    "nc_to_c",
    "c_to_nc",
    "nc_values_to_c",
    "c_values_to_nc",
    "load_dataset",
    "save_dataset",
]


@dataclass(frozen=True)
class Params:
    """Model parameters on the natural scale."""

    c: float
    phi: float
    sigma2: float

    def __post_init__(self):
        if not abs(self.phi) < 1.0:
            raise ValueError(f"phi must satisfy |phi| < 1, got {self.phi}")
        if not self.sigma2 > 0.0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)


@dataclass(frozen=True)
class TransformedParams:
    """Model parameters on the unconstrained sampling scale."""

    c: float
    gamma: float
    eta: float

    @property
    def phi(self) -> float:
        return math.tanh(0.5 * self.gamma)

    @property
    def sigma2(self) -> float:
        return math.exp(self.eta)

    @property
    def sigma(self) -> float:
        return math.exp(0.5 * self.eta)


def transform(params: Params) -> TransformedParams:
    """Map natural-scale parameters to (c, gamma, eta)."""
    gamma = math.log1p(params.phi) - math.log1p(-params.phi)
    return TransformedParams(params.c, gamma, math.log(params.sigma2))


def inverse_transform(t: TransformedParams) -> Params:
    """Map (c, gamma, eta) back to the natural scale."""
    return Params(t.c, t.phi, t.sigma2)


@dataclass(frozen=True)
class LatentPath:
    """Latent log-volatility path tagged with its parametrization."""

    values: np.ndarray
    parametrization: str

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.ndim != 1 or values.size < 1:
            raise ValueError("path values must be a nonempty 1-d array")
        if not np.all(np.isfinite(values)):
            raise ValueError("path values must be finite")
        if self.parametrization not in PARAMETRIZATIONS:
            raise ValueError(
                f"parametrization must be one of {PARAMETRIZATIONS}, "
                f"got {self.parametrization!r}"
            )

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class Dataset:
    """Observed return series with precomputed log squared returns."""

    y: np.ndarray
    log_y2: np.ndarray

    @classmethod
    def from_returns(cls, y) -> "Dataset":
        """Build a dataset from raw returns, flooring y^2 away from zero."""
        y = np.asarray(y, dtype=float)
        if y.ndim != 1 or y.size < 1:
            raise ValueError("returns must be a nonempty 1-d array")
        if not np.all(np.isfinite(y)):
            raise ValueError("returns must be finite")
        y2 = y * y
        if np.any(y2 < TINY_Y2):
            warnings.warn(
                "returns equal or extremely close to zero were floored "
                "before taking log(y^2)",
                RuntimeWarning,
            )
            y2 = np.maximum(y2, TINY_Y2)
        return cls(y=y, log_y2=np.log(y2))

    def __len__(self):
        return self.y.size


@dataclass(frozen=True)
class PriorSpec:
    """Independent priors on (c, phi, sigma^2).

    c is normal, phi uniform on [phi_lo, phi_hi], sigma^2 inverse-gamma
    with density beta^alpha / Gamma(alpha) x^(-alpha-1) exp(-beta/x).
    """

    c_mean: float = 0.0
    c_sd: float = 1.0
    phi_lo: float = 0.0
    phi_hi: float = 1.0
    ig_alpha: float = 2.5
    ig_beta: float = 0.075

    def __post_init__(self):
        if not self.c_sd > 0.0:
            raise ValueError("c_sd must be positive")
        if not (-1.0 <= self.phi_lo < self.phi_hi <= 1.0):
            raise ValueError("phi support must satisfy -1 <= phi_lo < phi_hi <= 1")
        if not (self.ig_alpha > 0.0 and self.ig_beta > 0.0):
            raise ValueError("inverse-gamma shape and scale must be positive")


def log1m_phi_sq(gamma):
    """log(1 - phi^2) for phi = tanh(gamma/2), stable for large |gamma|."""
    a = np.abs(np.asarray(gamma, dtype=float))
    return math.log(4.0) - a - 2.0 * np.log1p(np.exp(-a))


def log_prior_c(c, prior: PriorSpec):
    """Normal log prior density of the level c."""
    z = (np.asarray(c, dtype=float) - prior.c_mean) / prior.c_sd
    return -0.5 * (LOG_2PI + z * z) - math.log(prior.c_sd)


def log_prior_gamma(gamma, prior: PriorSpec):
    """Log prior density of gamma: uniform prior on phi times dphi/dgamma.

    dphi/dgamma = (1 - phi^2)/2, so on the image of the support the density
    is (1 - phi^2) / (2 (phi_hi - phi_lo)); outside it is zero.
    """
    gamma = np.asarray(gamma, dtype=float)
    phi = np.tanh(0.5 * gamma)
    inside = (phi > prior.phi_lo) & (phi < prior.phi_hi)
    body = log1m_phi_sq(gamma) - math.log(2.0) - math.log(prior.phi_hi - prior.phi_lo)
    return np.where(inside, body, -np.inf)[()]


def log_prior_eta(eta, prior: PriorSpec):
    """Log prior density of eta = log sigma^2 under the inverse-gamma prior.

    Change of variables from the inverse-gamma density on sigma^2:
    alpha log beta - log Gamma(alpha) - alpha eta - beta exp(-eta).
    """
    eta = np.asarray(eta, dtype=float)
    a, b = prior.ig_alpha, prior.ig_beta
    with np.errstate(over="ignore"):
        tail = b * np.exp(-eta)
    return (a * math.log(b) - math.lgamma(a) - a * eta - tail)[()]


def log_prior(t: TransformedParams, prior: PriorSpec) -> float:
    """Joint log prior density at (c, gamma, eta)."""
    return float(
        log_prior_c(t.c, prior)
        + log_prior_gamma(t.gamma, prior)
        + log_prior_eta(t.eta, prior)
    )


def sample_from_prior(prior: PriorSpec, rng) -> TransformedParams:
    """Draw (c, gamma, eta) from the prior.

    Draw order: c, then phi, then sigma^2.
    """
    c = prior.c_mean + prior.c_sd * rng.normal01()
    phi = prior.phi_lo + (prior.phi_hi - prior.phi_lo) * rng.uniform01()
    sigma2 = rng.inverse_gamma(prior.ig_alpha, prior.ig_beta)
    gamma = math.log1p(phi) - math.log1p(-phi)
    return TransformedParams(float(c), float(gamma), float(math.log(sigma2)))


def simulate_sv(params: Params, n: int, rng) -> tuple[Dataset, LatentPath]:
    """Simulate n observations and the standardized latent path.

    Draw order: the n path innovations, then the n return innovations.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    phi = params.phi
    z = rng.normal01(n)
    z[0] = z[0] / math.sqrt(1.0 - phi * phi)
    x = lfilter([1.0], [1.0, -phi], z)
    vol = np.exp(0.5 * (params.c + params.sigma * x))
    y = vol * rng.normal01(n)
    return Dataset.from_returns(y), LatentPath(x, "nc")


def exact_obs_loglik(dataset: Dataset, x, c: float, sigma: float) -> float:
    """Exact log-likelihood of the returns given the standardized path.

    sum_i log N(y_i; 0, exp(c + sigma x_i)).
    """
    v = c + sigma * np.asarray(x, dtype=float)
    with np.errstate(over="ignore"):
        terms = LOG_2PI + v + dataset.y * dataset.y * np.exp(-v)
    return float(-0.5 * np.sum(terms))


def nc_values_to_c(x, c: float, sigma: float) -> np.ndarray:
    """Affine map from standardized to centered path values."""
    return c + sigma * np.asarray(x, dtype=float)


def c_values_to_nc(xt, c: float, sigma: float) -> np.ndarray:
    """Affine map from centered to standardized path values."""
    return (np.asarray(xt, dtype=float) - c) / sigma


def nc_to_c(path: LatentPath, c: float, sigma: float) -> LatentPath:
    """Re-tag a standardized path as centered via xt = c + sigma x."""
    if path.parametrization != "nc":
        raise ValueError("expected a path in the 'nc' parametrization")
    return LatentPath(nc_values_to_c(path.values, c, sigma), "c")


def c_to_nc(path: LatentPath, c: float, sigma: float) -> LatentPath:
    """Re-tag a centered path as standardized via x = (xt - c)/sigma."""
    if path.parametrization != "c":
        raise ValueError("expected a path in the 'c' parametrization")
    return LatentPath(c_values_to_nc(path.values, c, sigma), "nc")


def save_dataset(path, dataset: Dataset, x_true: LatentPath | None = None) -> None:
    """Write returns as headerless CSV, one y per line.

    With x_true, a second column carries the true standardized path.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if x_true is None:
            for yi in dataset.y:
                writer.writerow([repr(float(yi))])
        else:
            if x_true.parametrization != "nc":
                raise ValueError("x_true must be in the 'nc' parametrization")
            if len(x_true) != len(dataset):
                raise ValueError("x_true length must match the dataset")
            for yi, xi in zip(dataset.y, x_true.values):
                writer.writerow([repr(float(yi)), repr(float(xi))])


def _skip_comments(reader):
    for row in reader:
        if row and not row[0].lstrip().startswith("#"):
            yield row


def load_dataset(path) -> Dataset:
    """Read a headerless returns CSV; first column is y, the rest ignored.

    Lines starting with '#' are skipped.
    """
    with open(path, newline="") as fh:
        y = [float(row[0]) for row in _skip_comments(csv.reader(fh))]
    if not y:
        raise ValueError(f"no observations in {path}")
    return Dataset.from_returns(np.asarray(y))
