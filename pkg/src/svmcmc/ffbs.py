"""Kalman filtering and backward sampling for the mixture-linearized model.

Conditional on the mixture indicators r the observation equation is linear,

    z_i = m_{r_i} + c + sigma x_i + N(0, tau_{r_i}^2),

with the standardized AR(1) state x.  The filter runs on the state scale
(state coefficient sigma in the observation map); the backward pass draws
the path from its exact joint conditional.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import LOG_2PI, Dataset, LatentPath, TransformedParams
from .mixture import MixtureTable

# Filter variances are floored here to keep the backward-gain division
# well defined when an observation is nearly noiseless.
VAR_FLOOR = 1e-12

__all__ = ["FilterState", "kalman_filter", "ffbs_sample"]


@dataclass(frozen=True)
class FilterState:
    """Per-time predictive and filtered moments plus the data log-likelihood."""

    pred_mean: np.ndarray
    pred_var: np.ndarray
    filt_mean: np.ndarray
    filt_var: np.ndarray
    loglik: float


def kalman_filter(dataset: Dataset, r, t: TransformedParams,
                  table: MixtureTable) -> FilterState:
    """Forward filter for the standardized path given indicators r.

    Returns predictive and filtered moments for every time and the
    prediction-error-decomposition log-likelihood of z = log y^2.
    """
    z = dataset.log_y2
    n = z.size
    if np.asarray(r).shape != (n,):
        raise ValueError("indicator vector length must match the dataset")
    phi = t.phi
    sigma = t.sigma
    offs = table.means[r] + t.c
    tau2 = table.variances[r]

    pred_mean = np.empty(n)
    pred_var = np.empty(n)
    filt_mean = np.empty(n)
    filt_var = np.empty(n)

    pm = 0.0
    pv = 1.0 / (1.0 - phi * phi)
    loglik = 0.0
    for i in range(n):
        if i > 0:
            pm = phi * filt_mean[i - 1]
            pv = phi * phi * filt_var[i - 1] + 1.0
        pred_mean[i] = pm
        pred_var[i] = max(pv, VAR_FLOOR)
        s = sigma * sigma * pred_var[i] + tau2[i]
        resid = z[i] - (offs[i] + sigma * pm)
        gain = sigma * pred_var[i] / s
        filt_mean[i] = pm + gain * resid
        filt_var[i] = max(pred_var[i] * (1.0 - gain * sigma), VAR_FLOOR)
        loglik += -0.5 * (LOG_2PI + math.log(s) + resid * resid / s)

    return FilterState(pred_mean, pred_var, filt_mean, filt_var, float(loglik))


def ffbs_sample(dataset: Dataset, r, t: TransformedParams, table: MixtureTable,
                rng) -> LatentPath:
    """Draw the standardized path from its joint conditional given r.

    Forward filter, then backward sampling; the n standard normals are
    consumed indexed by time (last time first).
    """
    fs = kalman_filter(dataset, r, t, table)
    phi = t.phi
    n = len(dataset)
    zs = rng.normal01(n)
    x = np.empty(n)
    x[n - 1] = fs.filt_mean[n - 1] + math.sqrt(fs.filt_var[n - 1]) * zs[n - 1]
    for i in range(n - 2, -1, -1):
        gain = phi * fs.filt_var[i] / fs.pred_var[i + 1]
        mean = fs.filt_mean[i] + gain * (x[i + 1] - fs.pred_mean[i + 1])
        var = max(fs.filt_var[i] * (1.0 - gain * phi), 0.0)
        x[i] = mean + math.sqrt(var) * zs[i]
    return LatentPath(x, "nc")
