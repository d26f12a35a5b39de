"""Render the standard result figures from pilotsim CSV files.

Four figure kinds are supported, all reading only the documented CSV
schemas (`summary.csv` and `ue_rates.csv`):

- ``ser_vs_snr``     SER curves over the transmit-SNR axis (log y)
- ``ser_vs_m``       SER curves over antennas per sector (log y)
- ``rate_cdf``       empirical CDF of per-UE achievable rates
- ``sumrate_vs_tau`` sum rate over the pilot-length axis

Rendering never transforms the data beyond plotting; the returned report
counts the points actually handed to the axes so tests can audit that
every CSV row appears exactly once.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "pilotplots"  # reproducible SVG ids

import matplotlib.pyplot as plt

SER_VS_SNR = "ser_vs_snr"
SER_VS_M = "ser_vs_m"
RATE_CDF = "rate_cdf"
SUMRATE_VS_TAU = "sumrate_vs_tau"
FIGURE_KINDS = (SER_VS_SNR, SER_VS_M, RATE_CDF, SUMRATE_VS_TAU)

_AXIS_FOR_KIND = {
    SER_VS_SNR: ("snr_db", "SNR [dB]"),
    SER_VS_M: ("antennas_m", "antennas per sector M"),
    SUMRATE_VS_TAU: ("pilot_len_tau", "pilot length"),
}

_SUMMARY_COLUMNS = ("method", "axis_name", "axis_value", "ser", "ser_ci_lo",
                    "ser_ci_hi", "sum_rate", "net_sum_rate", "trials")
_RATES_COLUMNS = ("method", "axis_name", "axis_value", "ue_index", "n_samples",
                  "rate_ach", "rate_net")

METHOD_STYLES = {
    "PERFECT_CSI": dict(color="black", marker="v", linestyle="--"),
    "NN_POSITION": dict(color="tab:green", marker="s", linestyle="-"),
    "NN_CHART": dict(color="tab:blue", marker="o", linestyle="-"),
    "NN_CMD": dict(color="tab:orange", marker="d", linestyle="-"),
    "SGPS": dict(color="tab:purple", marker="^", linestyle="-."),
    "RANDOM": dict(color="tab:red", marker="x", linestyle=":"),
}


class SchemaError(ValueError):
    """An input CSV does not match the documented schema."""


@dataclass(frozen=True)
class FigureSpec:
    """One figure: kind, input CSVs, output image and styling options."""

    kind: str
    inputs: tuple
    output: str
    styles: dict = field(default_factory=dict)
    use_net: bool = False       # plot net rates instead of gross
    with_ci: bool = False       # add Wilson-interval error bars to SER plots

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}")
        if not self.inputs:
            raise SchemaError("at least one input CSV is required")


@dataclass
class RenderReport:
    """What was drawn: per-series point counts for the row audit."""

    kind: str
    output: str
    rows_read: int
    points_plotted: int
    series_points: dict
    y_scale: str


def _read_rows(paths, required):
    rows = []
    for path in paths:
        p = Path(path)
        if not p.exists():
            raise SchemaError(f"input CSV not found: {p}")
        with open(p, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            for column in required:
                if column not in header:
                    raise SchemaError(f"{p}: missing column '{column}'")
            rows.extend(reader)
    return rows


def _by_method(rows):
    grouped = {}
    for row in rows:
        grouped.setdefault(row["method"], []).append(row)
    return grouped


def _style(spec, method, index):
    if method in spec.styles:
        return spec.styles[method]
    if method in METHOD_STYLES:
        return METHOD_STYLES[method]
    cycle = ["tab:cyan", "tab:pink", "tab:olive", "tab:brown"]
    return dict(color=cycle[index % len(cycle)], marker=".", linestyle="-")


def _check_axis(rows, expected, kind):
    for row in rows:
        if row["axis_name"] != expected:
            raise SchemaError(
                f"{kind} expects axis_name={expected!r}, found {row['axis_name']!r}")


def _save(fig, output):
    suffix = Path(output).suffix.lower()
    metadata = None
    if suffix == ".svg":
        metadata = {"Date": None}          # keep re-renders byte-identical
    elif suffix == ".pdf":
        metadata = {"CreationDate": None}
    fig.savefig(output, metadata=metadata)
    plt.close(fig)


def render(spec: FigureSpec) -> RenderReport:
    """Draw one figure and report the per-series point counts."""
    if spec.kind == RATE_CDF:
        return _render_rate_cdf(spec)
    return _render_summary_lines(spec)


def _render_summary_lines(spec: FigureSpec) -> RenderReport:
    rows = _read_rows(spec.inputs, _SUMMARY_COLUMNS)
    axis_name, xlabel = _AXIS_FOR_KIND[spec.kind]
    _check_axis(rows, axis_name, spec.kind)
    ser_figure = spec.kind in (SER_VS_SNR, SER_VS_M)
    if ser_figure:
        ycol, ylabel = "ser", "symbol error rate"
    elif spec.use_net:
        ycol, ylabel = "net_sum_rate", "net sum rate [bit/s/Hz]"
    else:
        ycol, ylabel = "sum_rate", "sum rate [bit/s/Hz]"

    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    series_points = {}
    for index, (method, mrows) in enumerate(sorted(_by_method(rows).items())):
        mrows.sort(key=lambda r: float(r["axis_value"]))
        x = [float(r["axis_value"]) for r in mrows]
        y = [float(r[ycol]) for r in mrows]
        line, = ax.plot(x, y, label=method, **_style(spec, method, index))
        if ser_figure and spec.with_ci:
            lo = [float(r[ycol]) - float(r["ser_ci_lo"]) for r in mrows]
            hi = [float(r["ser_ci_hi"]) - float(r[ycol]) for r in mrows]
            ax.errorbar(x, y, yerr=[lo, hi], fmt="none",
                        ecolor=line.get_color(), capsize=2.0)
        series_points[method] = len(line.get_xdata())
    if ser_figure:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    y_scale = ax.get_yscale()
    _save(fig, spec.output)
    return RenderReport(kind=spec.kind, output=spec.output, rows_read=len(rows),
                        points_plotted=sum(series_points.values()),
                        series_points=series_points, y_scale=y_scale)


def _render_rate_cdf(spec: FigureSpec) -> RenderReport:
    rows = _read_rows(spec.inputs, _RATES_COLUMNS)
    values = {row["axis_value"] for row in rows}
    if len(values) > 1:
        raise SchemaError(
            f"rate_cdf expects a single axis point, found values {sorted(values)}")
    ycol = "rate_net" if spec.use_net else "rate_ach"

    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    series_points = {}
    for index, (method, mrows) in enumerate(sorted(_by_method(rows).items())):
        rates = sorted(float(r[ycol]) for r in mrows)
        probs = [(i + 1) / len(rates) for i in range(len(rates))]
        style = dict(_style(spec, method, index))
        style.pop("marker", None)
        line, = ax.plot(rates, probs, label=method, drawstyle="steps-post", **style)
        series_points[method] = len(line.get_xdata())
    ax.set_xlabel("per-UE achievable rate [bit/s/Hz]")
    ax.set_ylabel("CDF")
    ax.set_ylim(0.0, 1.02)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    y_scale = ax.get_yscale()
    _save(fig, spec.output)
    return RenderReport(kind=spec.kind, output=spec.output, rows_read=len(rows),
                        points_plotted=sum(series_points.values()),
                        series_points=series_points, y_scale=y_scale)
