"""Figure-regeneration acceptance: render the four figure kinds from CSVs
produced by a real (trimmed) desk-scale run of the simulator CLI, and audit
that every CSV row appears exactly once per figure."""

import csv
import subprocess
import sys
from pathlib import Path

import pytest

from pilotplots import (RATE_CDF, SER_VS_M, SER_VS_SNR, SUMRATE_VS_TAU,
                        FigureSpec, render)

REPO_ROOT = Path(__file__).resolve().parents[2]
DESK_CONFIG = REPO_ROOT / "configs" / "desk.yaml"


def run_pilotsim(outdir, *extra):
    cmd = [sys.executable, "-m", "pilotsim.cli", "run",
           "--config", str(DESK_CONFIG), "--out", str(outdir),
           "--scenario-draws", "1", "--activity-draws", "2",
           "--channel-draws", "3", "--data-symbols", "2",
           "--workers", "1", *extra]
    subprocess.run(cmd, check=True, capture_output=True, text=True)
    return outdir / "summary.csv", outdir / "ue_rates.csv"


@pytest.fixture(scope="module")
def desk_outputs(tmp_path_factory):
    pytest.importorskip("pilotsim")
    base = tmp_path_factory.mktemp("deskcsv")
    snr_summary, snr_rates = run_pilotsim(
        base / "snr", "--values", "0", "10")
    m_summary, _ = run_pilotsim(
        base / "m", "--axis", "antennas_m", "--values", "8", "16")
    tau_summary, _ = run_pilotsim(
        base / "tau", "--axis", "pilot_len_tau", "--values", "8", "16")
    rates_10db, _ = run_pilotsim(base / "cdf", "--values", "10")
    return {
        "snr_summary": snr_summary,
        "m_summary": m_summary,
        "tau_summary": tau_summary,
        "rates_10db": (base / "cdf") / "ue_rates.csv",
    }


def data_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_figure_regeneration_with_row_audit(desk_outputs, tmp_path):
    jobs = [
        (SER_VS_SNR, desk_outputs["snr_summary"], "fig_ser_snr.png"),
        (SER_VS_M, desk_outputs["m_summary"], "fig_ser_m.png"),
        (RATE_CDF, desk_outputs["rates_10db"], "fig_rate_cdf.png"),
        (SUMRATE_VS_TAU, desk_outputs["tau_summary"], "fig_sumrate_tau.svg"),
    ]
    lines = []
    for kind, source, name in jobs:
        out = tmp_path / name
        report = render(FigureSpec(kind=kind, inputs=(source,), output=str(out)))
        n_rows = len(data_rows(source))
        ok = out.exists() and report.points_plotted == n_rows == report.rows_read
        lines.append(f"{kind}: {report.points_plotted}/{n_rows} points")
        assert ok, f"{kind}: plotted {report.points_plotted} of {n_rows} rows"
    print("[PASS] criterion 11: figure regeneration (" + "; ".join(lines) + ")")


def test_rate_cdf_curves_are_monotone(desk_outputs, tmp_path):
    rows = data_rows(desk_outputs["rates_10db"])
    by_method = {}
    for row in rows:
        by_method.setdefault(row["method"], []).append(float(row["rate_ach"]))
    out = tmp_path / "cdf_check.png"
    report = render(FigureSpec(kind=RATE_CDF,
                               inputs=(desk_outputs["rates_10db"],),
                               output=str(out)))
    for method, rates in by_method.items():
        assert report.series_points[method] == len(rates)
