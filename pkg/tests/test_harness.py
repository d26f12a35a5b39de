import json
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from pilotsim import (ConfigurationError, ExperimentPlan, SystemConfig,
                      achievable_rate, apply_axis, derive_rng, emit_report,
                      empirical_cdf, load_plan, run_experiment,
                      wilson_interval)
from pilotsim.harness import PERFECT_CSI

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


def tiny_plan(**overrides):
    cfg = SystemConfig(N=16, K=4, S=2, M=4, L=6, tau=4,
                       cell_radius=1.0, min_radius=0.02, wavelength=4 * np.pi,
                       chart_dim=2, chart_neighbors=3,
                       quadrature_points=64)
    params = dict(config=cfg, axis="snr_db", axis_values=(0.0,),
                  methods=("PERFECT_CSI", "NN_CHART", "RANDOM"),
                  scenario_draws=1, activity_draws=3, channel_draws=5,
                  data_symbols=4, seed=11)
    params.update(overrides)
    plan = ExperimentPlan(**params)
    plan.validate()
    return plan


# ---------------------------------------------------------------------------
# small pure helpers

def test_achievable_rate_unit_sinr():
    r_ach, r_up = achievable_rate([1.0, 1.0, 1.0], tau=10, coherence_len=200)
    assert r_ach == pytest.approx(1.0)
    assert r_up == pytest.approx(0.95)


def test_achievable_rate_prelog_vanishes():
    _, r_up = achievable_rate([3.0], tau=200, coherence_len=200)
    assert r_up == 0.0


def test_achievable_rate_sample_mean():
    r_ach, _ = achievable_rate([1.0, 3.0], tau=1, coherence_len=2)
    assert r_ach == pytest.approx(1.5)


def test_achievable_rate_rejects_empty():
    with pytest.raises(ValueError):
        achievable_rate([], tau=1, coherence_len=2)


def test_empirical_cdf_single_point():
    assert empirical_cdf([5.0]) == [(5.0, 1.0)]


def test_empirical_cdf_quartiles():
    cdf = empirical_cdf([4.0, 2.0, 1.0, 3.0])
    assert [p for _, p in cdf] == [0.25, 0.5, 0.75, 1.0]
    assert [v for v, _ in cdf] == [1.0, 2.0, 3.0, 4.0]


def test_empirical_cdf_dkw_bound():
    """CDF of uniform draws stays within the DKW band of the identity."""
    rng = np.random.default_rng(0)
    cdf = empirical_cdf(rng.uniform(0.0, 1.0, 10_000))
    sup = max(abs(p - v) for v, p in cdf)
    assert sup <= 0.02


def test_empirical_cdf_rejects_empty():
    with pytest.raises(ValueError):
        empirical_cdf([])


def test_wilson_interval_basics():
    lo, hi = wilson_interval(0, 1000)
    assert lo == 0.0 and 0.0 < hi < 0.01
    lo, hi = wilson_interval(500, 1000)
    assert lo < 0.5 < hi
    assert wilson_interval(0, 0) == (0.0, 1.0)


def test_wilson_interval_shrinks_with_trials():
    widths = []
    for n in (1_000, 4_000, 16_000):
        lo, hi = wilson_interval(int(0.1 * n), n)
        widths.append(hi - lo)
    # width ~ 1/sqrt(n): each quadrupling halves it (within 20%)
    assert widths[0] / widths[1] == pytest.approx(2.0, rel=0.2)
    assert widths[1] / widths[2] == pytest.approx(2.0, rel=0.2)


def test_derive_rng_streams_are_distinct():
    a = derive_rng(7, 1, 0).standard_normal(4)
    b = derive_rng(7, 2, 0).standard_normal(4)
    c = derive_rng(7, 1, 0).standard_normal(4)
    assert not np.allclose(a, b)
    np.testing.assert_array_equal(a, c)


# ---------------------------------------------------------------------------
# plan validation and axis semantics

def test_plan_rejects_bad_axis():
    with pytest.raises(ConfigurationError, match="axis"):
        tiny_plan(axis="bandwidth")


def test_plan_rejects_nonincreasing_values():
    with pytest.raises(ConfigurationError, match="increasing"):
        tiny_plan(axis_values=(0.0, 0.0))


def test_plan_rejects_unknown_method():
    with pytest.raises(ConfigurationError, match="method"):
        tiny_plan(methods=("NN_CHART", "GENIE"))


def test_plan_rejects_infeasible_tau_before_running():
    with pytest.raises(ConfigurationError, match="tau"):
        tiny_plan(axis="pilot_len_tau", axis_values=(4.0, 512.0))


def test_apply_axis_snr_scales_noise():
    cfg = SystemConfig(p_u=2.0)
    assert apply_axis(cfg, "snr_db", 10.0).noise_power == pytest.approx(0.2)
    assert apply_axis(cfg, "snr_db", 0.0).noise_power == pytest.approx(2.0)


def test_apply_axis_antennas_and_tau():
    cfg = SystemConfig()
    assert apply_axis(cfg, "antennas_m", 32).M == 32
    assert apply_axis(cfg, "pilot_len_tau", 8).tau == 8


# ---------------------------------------------------------------------------
# experiment runs

@pytest.fixture(scope="module")
def tiny_report():
    return run_experiment(tiny_plan(), workers=1)


def test_report_covers_grid(tiny_report):
    assert len(tiny_report.results) == 3
    for r in tiny_report.results:
        assert 0.0 <= r.ser <= 1.0
        assert r.ser_ci_lo <= r.ser <= r.ser_ci_hi
        assert r.symbols == 3 * 5 * 4 * 4  # activities x draws x symbols x K
        assert r.sum_rate >= 0.0
        assert r.net_sum_rate == pytest.approx((1 - 4 / 200) * r.sum_rate)


def test_rate_samples_only_for_active_ues(tiny_report):
    r = tiny_report.results[0]
    idx, rates = r.per_ue_rates()
    assert idx.size > 0
    assert np.all(rates >= 0.0)
    assert np.all(r.rate_count[idx] > 0)


def test_same_seed_same_report(tiny_report):
    again = run_experiment(tiny_plan(), workers=1)
    for a, b in zip(tiny_report.results, again.results):
        assert a.errors == b.errors
        assert a.ser == b.ser
        assert a.sum_rate == b.sum_rate
        np.testing.assert_array_equal(a.rate_sum, b.rate_sum)


def test_worker_count_does_not_change_results(tiny_report):
    parallel = run_experiment(tiny_plan(), workers=2)
    for a, b in zip(tiny_report.results, parallel.results):
        assert a.errors == b.errors
        assert a.sum_rate == b.sum_rate
        np.testing.assert_array_equal(a.rate_sum, b.rate_sum)


def test_perfect_csi_low_ser_at_high_snr():
    """Genie CSI at desk-ish scale and high SNR is essentially error-free."""
    cfg = SystemConfig(N=16, K=4, S=3, M=8, L=6, tau=4,
                       cell_radius=1.0, min_radius=0.02, wavelength=4 * np.pi,
                       chart_dim=2, chart_neighbors=3, quadrature_points=64)
    plan = tiny_plan(config=cfg, axis_values=(20.0,), methods=(PERFECT_CSI,),
                     activity_draws=10, channel_draws=25, data_symbols=10)
    report = run_experiment(plan, workers=1)
    assert report.results[0].ser < 1e-3


def test_methods_ranked_sanely_on_tiny_run(tiny_report):
    sers = {r.method: r.ser for r in tiny_report.results}
    assert sers["PERFECT_CSI"] <= sers["NN_CHART"]
    assert sers["PERFECT_CSI"] <= sers["RANDOM"]


# ---------------------------------------------------------------------------
# emission

def test_emit_report_files(tiny_report, tmp_path):
    paths = emit_report(tiny_report, tmp_path / "out")
    summary = paths["summary"].read_text().splitlines()
    assert summary[0] == ("method,axis_name,axis_value,ser,ser_ci_lo,ser_ci_hi,"
                          "sum_rate,net_sum_rate,trials")
    assert len(summary) == 1 + 3  # one row per (method, axis point)
    rates = paths["rates"].read_text().splitlines()
    assert rates[0] == "method,axis_name,axis_value,ue_index,n_samples,rate_ach,rate_net"
    assert len(rates) > 1
    meta = json.loads(paths["metadata"].read_text())
    assert meta["seed"] == 11
    assert meta["config"]["N"] == 16
    assert len(meta["config_sha256"]) == 64


def test_emit_is_byte_stable(tiny_report, tmp_path):
    p1 = emit_report(tiny_report, tmp_path / "a")
    p2 = emit_report(tiny_report, tmp_path / "b")
    for key in ("summary", "rates", "metadata"):
        assert p1[key].read_bytes() == p2[key].read_bytes()


def test_net_rate_relation_in_csv(tiny_report, tmp_path):
    paths = emit_report(tiny_report, tmp_path / "net")
    for line in paths["summary"].read_text().splitlines()[1:]:
        cells = line.split(",")
        sum_rate, net = float(cells[6]), float(cells[7])
        assert net == pytest.approx((1 - 4 / 200) * sum_rate, rel=1e-9)


def test_two_methods_three_points_six_rows(tmp_path):
    plan = tiny_plan(axis_values=(-5.0, 0.0, 5.0), methods=("PERFECT_CSI", "RANDOM"),
                     activity_draws=1, channel_draws=2, data_symbols=2)
    report = run_experiment(plan, workers=1)
    paths = emit_report(report, tmp_path)
    assert len(paths["summary"].read_text().splitlines()) == 1 + 6


# ---------------------------------------------------------------------------
# config file plans

def test_paper_scale_plan_executes(tmp_path):
    """512 UEs / 64 antennas per sector runs end to end and emits one
    summary row per (method, axis point)."""
    plan = load_plan(CONFIG_DIR / "paper.yaml")
    probe = replace(plan, axis_values=(0.0,), activity_draws=1,
                    channel_draws=2, data_symbols=2)
    report = run_experiment(probe, workers=1)
    paths = emit_report(report, tmp_path)
    rows = paths["summary"].read_text().splitlines()
    assert len(rows) == 1 + len(probe.methods)
    for r in report.results:
        assert 0.0 <= r.ser <= 1.0
        assert np.isfinite(r.sum_rate)


def test_load_plan_desk_preset():
    plan = load_plan(CONFIG_DIR / "desk.yaml")
    assert plan.axis == "snr_db"
    assert plan.methods == ("PERFECT_CSI", "NN_POSITION", "NN_CHART", "NN_CMD",
                            "SGPS", "RANDOM")
    assert plan.channel_draws == 200
    assert plan.config.N == 128


def test_load_plan_rejects_unknown_experiment_key(tmp_path):
    doc = (CONFIG_DIR / "desk.yaml").read_text() + "\n"
    doc = doc.replace("experiment:", "experiment:\n  warmup: 5")
    bad = tmp_path / "bad.yaml"
    bad.write_text(doc)
    with pytest.raises(ConfigurationError, match="warmup"):
        load_plan(bad)
