import math

import numpy as np
import pytest
from scipy.signal import lfilter

from oracles import direct_autocov
from svmcmc.chains import ChainTrace
from svmcmc.diagnostics import (
    ACT_RHO_MIN,
    LOW_ESS_FRACTION,
    PARAM_NAMES,
    ActEstimate,
    act_estimate,
    autocovariance_fft,
    efficiency_rows,
    efficiency_to_csv,
    format_efficiency,
    weight_ess,
    weighted_summary,
)


def _ar1(phi, n, rng):
    return lfilter([1.0], [1.0, -phi], rng.standard_normal(n))


def test_autocovariance_fft_matches_direct():
    rng = np.random.default_rng(160)
    for _ in range(100):
        x = rng.standard_normal(251) * rng.uniform(0.1, 5.0)
        mean = rng.normal()
        np.testing.assert_allclose(
            autocovariance_fft(x, mean), direct_autocov(x, mean),
            rtol=0.0, atol=1e-10,
        )
    x = _ar1(0.9, 1000, rng)
    np.testing.assert_allclose(
        autocovariance_fft(x, float(np.mean(x))),
        direct_autocov(x, float(np.mean(x))),
        rtol=0.0, atol=1e-10,
    )


def test_autocovariance_fft_rejects_empty():
    with pytest.raises(ValueError):
        autocovariance_fft(np.empty(0), 0.0)


def test_act_affine_invariance():
    rng = np.random.default_rng(161)
    x = _ar1(0.7, 5000, rng)
    base = act_estimate([x])
    shifted = act_estimate([4.0 * x - 11.0])
    assert shifted.act == pytest.approx(base.act, abs=1e-12)
    assert shifted.cutoff == base.cutoff


def test_act_iid_near_one():
    rng = np.random.default_rng(162)
    est = act_estimate([rng.standard_normal(50000)])
    assert 0.8 < est.act < 1.2


def test_act_ar1_half():
    # Stopping before the first lag with autocorrelation under
    # ACT_RHO_MIN makes the truncated target 2.969, not the full 3.0.
    rng = np.random.default_rng(163)
    runs = [_ar1(0.5, 200000, rng) for _ in range(2)]
    truncated = 1.0 + 2.0 * sum(0.5 ** k for k in range(1, 7))
    assert truncated == pytest.approx(2.96875)
    est = act_estimate(runs)
    assert abs(est.act - truncated) < 0.2
    assert abs(est.act - 3.0) / 3.0 < 0.1


def test_act_constant_series_raises():
    with pytest.raises(ValueError):
        act_estimate([np.full(100, 2.5)])


def test_act_short_series_is_one():
    est = act_estimate([np.array([1.0])])
    assert est.act == 1.0
    assert est.cutoff == 0


def test_act_cutoff_capped():
    # A centered ramp keeps autocorrelation high at every lag, so the
    # truncation must stop at the n // 50 cap.
    x = np.arange(1000, dtype=float)
    est = act_estimate([x])
    assert est.cutoff == 1000 // 50
    assert est.autocorr.size == 1000 // 50 + 1


def test_act_run_validation():
    with pytest.raises(ValueError):
        act_estimate([])
    with pytest.raises(ValueError):
        act_estimate([np.zeros(10), np.zeros(11)])


def test_act_duplicate_runs_match_single():
    rng = np.random.default_rng(164)
    x = _ar1(0.6, 4000, rng)
    single = act_estimate([x])
    double = act_estimate([x, x.copy()])
    assert double.act == pytest.approx(single.act, abs=1e-12)


def test_weight_ess_values():
    assert weight_ess(np.zeros(7)) == pytest.approx(7.0)
    # weights 1 and 3: (1 + 3)^2 / (1 + 9)
    assert weight_ess([0.0, math.log(3.0)]) == pytest.approx(1.6)
    assert weight_ess([500.0, 500.0 + math.log(3.0)]) == pytest.approx(1.6)
    with pytest.raises(ValueError):
        weight_ess([])


def _trace(params, log_weights, burn_in=0.0):
    params = np.asarray(params, dtype=float)
    return ChainTrace(
        scheme="kf",
        params=params,
        log_weights=np.asarray(log_weights, dtype=float),
        seconds=np.zeros(params.shape[0]),
        acceptance={},
        burn_in=burn_in,
        master_seed=0,
        stream_path=(),
    )


def test_weighted_summary_uniform_weights():
    rng = np.random.default_rng(165)
    traces = [
        _trace(rng.standard_normal((40, 3)), np.zeros(40)) for _ in range(4)
    ]
    out = weighted_summary(traces)
    assert set(out) == {
        "n_runs", "kept_per_run", "weighted", "unweighted", "weight_ess",
        "low_ess",
    }
    assert out["n_runs"] == 4
    assert out["kept_per_run"] == [40] * 4
    assert not out["low_ess"]
    assert out["weight_ess"] == pytest.approx([40.0] * 4)
    per_run = np.array([t.params.mean(axis=0) for t in traces])
    for p, name in enumerate(PARAM_NAMES):
        w = out["weighted"][name]
        u = out["unweighted"][name]
        assert w["mean"] == pytest.approx(u["mean"])
        assert w["mean"] == pytest.approx(float(per_run[:, p].mean()))
        assert w["se"] == pytest.approx(
            float(np.std(per_run[:, p], ddof=1) / 2.0)
        )
        assert w["per_run"] == pytest.approx(list(per_run[:, p]))


def test_weighted_summary_two_point_weights():
    params = np.array([[1.0, 10.0, -1.0], [3.0, 20.0, -5.0]])
    out = weighted_summary([_trace(params, [0.0, math.log(3.0)])])
    assert out["weighted"]["c"]["mean"] == pytest.approx(2.5)
    assert out["weighted"]["gamma"]["mean"] == pytest.approx(17.5)
    assert out["unweighted"]["c"]["mean"] == pytest.approx(2.0)
    assert math.isnan(out["weighted"]["c"]["se"])


def test_weighted_summary_burn_in_slice():
    params = np.vstack([np.full((5, 3), 100.0), np.ones((5, 3))])
    out = weighted_summary([_trace(params, np.zeros(10), burn_in=0.5)])
    assert out["kept_per_run"] == [5]
    assert out["unweighted"]["c"]["mean"] == pytest.approx(1.0)


def test_weighted_summary_low_ess_warns():
    lw = np.zeros(100)
    lw[0] = 60.0
    params = np.random.default_rng(166).standard_normal((100, 3))
    with pytest.warns(RuntimeWarning):
        out = weighted_summary([_trace(params, lw)])
    assert out["low_ess"]
    assert out["weight_ess"][0] < LOW_ESS_FRACTION * 100
    assert out["weighted"]["c"]["mean"] == pytest.approx(params[0, 0])


def test_weighted_summary_empty_raises():
    with pytest.raises(ValueError):
        weighted_summary([])


def _rows():
    act = {n: ActEstimate(act=2.0, cutoff=3, autocorr=np.ones(4))
           for n in PARAM_NAMES}
    act_kf = {n: ActEstimate(act=40.0, cutoff=9, autocorr=np.ones(10))
              for n in PARAM_NAMES}
    return efficiency_rows([
        {"scheme": "kf", "iterations": 1000, "sec_per_iter": 0.001,
         "act": act_kf},
        {"scheme": "ens1", "l_x": 50, "l_eta": 10, "iterations": 1000,
         "sec_per_iter": 0.5, "act": act},
    ])


def test_efficiency_rows_product():
    rows = _rows()
    assert rows[0]["l_x"] is None and rows[0]["l_eta"] is None
    assert rows[0]["eff_eta"] == pytest.approx(0.04)
    assert rows[1]["act_c"] == 2.0
    assert rows[1]["eff_gamma"] == pytest.approx(1.0)


def test_efficiency_csv_round_trip(tmp_path):
    f = tmp_path / "eff.csv"
    efficiency_to_csv(_rows(), f)
    lines = f.read_text().strip().splitlines()
    assert lines[0] == (
        "scheme,l_x,l_eta,iterations,sec_per_iter,"
        "act_c,act_gamma,act_eta,eff_c,eff_gamma,eff_eta"
    )
    kf = lines[1].split(",")
    assert kf[0] == "kf" and kf[1] == "" and kf[2] == ""
    ens = lines[2].split(",")
    assert ens[1] == "50" and float(ens[8]) == pytest.approx(1.0)


def test_format_efficiency():
    text = format_efficiency(_rows())
    lines = text.splitlines()
    assert len(lines) == 3
    assert "scheme" in lines[0] and "eff_eta" in lines[0]
    assert lines[1].startswith("kf")
    assert "    -" in lines[1]
    assert "50" in lines[2]
