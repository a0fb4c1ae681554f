"""Chain diagnostics: autocorrelation times, weighted summaries, efficiency.

Comparisons across samplers use the integrated autocorrelation time of the
raw parameter sequences (importance weights left aside) together with the
measured cost per iteration; the product is the effective cost per
independent draw.  Posterior point estimates from the mixture-linearized
sampler self-normalize the per-iteration weights within each run.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.fft import next_fast_len

PARAM_NAMES = ("c", "gamma", "eta")

# Lags with estimated autocorrelation below this are treated as noise and
# excluded from the truncated sum.
ACT_RHO_MIN = 0.01

__all__ = [
    "PARAM_NAMES",
    "ActEstimate",
    "autocovariance_fft",
    "act_estimate",
    "weight_ess",
    "weighted_summary",
    "efficiency_rows",
    "efficiency_to_csv",
    "format_efficiency",
]


def autocovariance_fft(series, mean: float) -> np.ndarray:
    """Biased sample autocovariance at all lags about a supplied mean.

    gamma_k = (1/n) sum_{i<n-k} (x_i - mean)(x_{i+k} - mean), computed by
    FFT with zero padding.  The mean is supplied rather than recomputed so
    several runs can share a grand mean.
    """
    x = np.asarray(series, dtype=float) - mean
    n = x.size
    if n < 1:
        raise ValueError("series must be nonempty")
    nf = next_fast_len(2 * n)
    f = np.fft.rfft(x, nf)
    return np.fft.irfft(f * np.conj(f), nf)[:n] / n


@dataclass(frozen=True)
class ActEstimate:
    """Truncated integrated autocorrelation time.

    act = 1 + 2 sum_{k=1..cutoff} rho_k; autocorr stores rho_0..rho_cap
    (cap = n // 50) so the truncation can be inspected.
    """

    act: float
    cutoff: int
    autocorr: np.ndarray


def act_estimate(series_list) -> ActEstimate:
    """Integrated autocorrelation time pooled across equal-length runs.

    Autocovariances are computed per run about the grand mean and
    averaged; the sum over rho_k stops before the first lag that drops
    below ACT_RHO_MIN (negative included) and is capped at n // 50 lags.
    """
    runs = [np.asarray(s, dtype=float) for s in series_list]
    if not runs:
        raise ValueError("need at least one run")
    n = runs[0].size
    if any(r.size != n for r in runs):
        raise ValueError("runs must have equal length")
    if n < 2:
        return ActEstimate(act=1.0, cutoff=0, autocorr=np.ones(1))
    grand = float(np.mean([np.mean(r) for r in runs]))
    cap = max(1, n // 50)
    acov = np.mean(
        [autocovariance_fft(r, grand)[: cap + 1] for r in runs], axis=0
    )
    if not acov[0] > 0.0:
        raise ValueError("zero-variance series has no autocorrelation time")
    rho = acov / acov[0]
    cutoff = 0
    for k in range(1, min(cap, n - 1) + 1):
        if rho[k] < ACT_RHO_MIN:
            break
        cutoff = k
    act = 1.0 + 2.0 * float(np.sum(rho[1 : cutoff + 1]))
    return ActEstimate(act=act, cutoff=cutoff, autocorr=rho)


def weight_ess(log_weights) -> float:
    """Effective sample size of self-normalized importance weights.

    (sum w)^2 / sum w^2 after subtracting the max log-weight; equals the
    number of draws when all weights agree.
    """
    lw = np.asarray(log_weights, dtype=float)
    if lw.size == 0:
        raise ValueError("log_weights must be nonempty")
    w = np.exp(lw - np.max(lw))
    s = w.sum()
    return float(s * s / np.dot(w, w))


# Fraction of kept draws below which the weight ESS triggers a warning.
LOW_ESS_FRACTION = 0.10


def weighted_summary(traces) -> dict:
    """Posterior mean summary across runs, weighted and unweighted.

    Per run the weighted mean self-normalizes that run's importance
    weights over the kept (post burn-in) draws; the overall mean averages
    per-run means and the standard error is their spread over runs.  A
    run whose weight ESS falls under LOW_ESS_FRACTION of its kept draws
    flags the summary and emits a warning.
    """
    if not traces:
        raise ValueError("need at least one trace")
    n_runs = len(traces)
    per_run_w = np.empty((n_runs, 3))
    per_run_u = np.empty((n_runs, 3))
    ess = np.empty(n_runs)
    kept_counts = np.empty(n_runs, dtype=int)
    for j, trace in enumerate(traces):
        keep = trace.kept()
        params = trace.params[keep]
        lw = trace.log_weights[keep]
        kept_counts[j] = params.shape[0]
        w = np.exp(lw - np.max(lw))
        w = w / w.sum()
        per_run_w[j] = w @ params
        per_run_u[j] = params.mean(axis=0)
        ess[j] = weight_ess(lw)
    low_ess = bool(np.any(ess < LOW_ESS_FRACTION * kept_counts))
    if low_ess:
        warnings.warn(
            "importance-weight effective sample size below "
            f"{LOW_ESS_FRACTION:.0%} of kept draws in at least one run",
            RuntimeWarning,
        )

    def pack(per_run):
        out = {}
        for p, name in enumerate(PARAM_NAMES):
            vals = per_run[:, p]
            se = (
                float(np.std(vals, ddof=1) / math.sqrt(n_runs))
                if n_runs > 1
                else float("nan")
            )
            out[name] = {
                "mean": float(np.mean(vals)),
                "se": se,
                "per_run": [float(v) for v in vals],
            }
        return out

    return {
        "n_runs": n_runs,
        "kept_per_run": [int(k) for k in kept_counts],
        "weighted": pack(per_run_w),
        "unweighted": pack(per_run_u),
        "weight_ess": [float(e) for e in ess],
        "low_ess": low_ess,
    }


def efficiency_rows(entries) -> list[dict]:
    """Build efficiency-table rows from per-setting ACT and timing.

    Each entry needs: scheme, l_x, l_eta (None for samplers without
    pools), iterations, sec_per_iter, and act mapping parameter name to
    ActEstimate.  Efficiency is act * sec_per_iter: cost in seconds per
    effectively independent draw (smaller is better).
    """
    rows = []
    for e in entries:
        row = {
            "scheme": e["scheme"],
            "l_x": e.get("l_x"),
            "l_eta": e.get("l_eta"),
            "iterations": int(e["iterations"]),
            "sec_per_iter": float(e["sec_per_iter"]),
        }
        for name in PARAM_NAMES:
            act = e["act"][name].act
            row[f"act_{name}"] = float(act)
            row[f"eff_{name}"] = float(act) * row["sec_per_iter"]
        rows.append(row)
    return rows


_EFF_COLUMNS = (
    ["scheme", "l_x", "l_eta", "iterations", "sec_per_iter"]
    + [f"act_{n}" for n in PARAM_NAMES]
    + [f"eff_{n}" for n in PARAM_NAMES]
)


def efficiency_to_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_EFF_COLUMNS)
        for row in rows:
            writer.writerow(
                ["" if row.get(c) is None else str(row.get(c)) for c in _EFF_COLUMNS]
            )


def format_efficiency(rows) -> str:
    """Human-readable efficiency table."""
    header = (
        f"{'scheme':<8}{'L_x':>5}{'L_eta':>7}{'iters':>9}{'s/iter':>10}"
        + "".join(f"{'act_' + n:>10}" for n in PARAM_NAMES)
        + "".join(f"{'eff_' + n:>11}" for n in PARAM_NAMES)
    )
    lines = [header]
    for row in rows:
        lx = "-" if row["l_x"] is None else str(row["l_x"])
        le = "-" if row["l_eta"] is None else str(row["l_eta"])
        line = (
            f"{row['scheme']:<8}{lx:>5}{le:>7}{row['iterations']:>9}"
            f"{row['sec_per_iter']:>10.4f}"
            + "".join(f"{row['act_' + n]:>10.2f}" for n in PARAM_NAMES)
            + "".join(f"{row['eff_' + n]:>11.4f}" for n in PARAM_NAMES)
        )
        lines.append(line)
    return "\n".join(lines)
