"""Monte Carlo experiment engine.

A run sweeps one axis (transmit SNR, antennas per sector, or pilot
length) over a set of assignment methods. Per scenario the covariances,
features and pilot assignments are computed once over all N UEs;
activity and channel draws then loop underneath. Every random draw comes
from a substream derived from (master seed, fixed tag, indices) so that
results are bit-identical regardless of worker count, and activity and
channel realizations are shared across methods and axis points.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import yaml
from scipy.stats import norm
from threadpoolctl import threadpool_limits

from . import __version__
from .assignment import (NN_CHART, NN_CMD, NN_POSITION, RANDOM, SGPS,
                         copilot_sets, nearest_neighbor_assignment,
                         random_assignment, sgps_assignment)
from .channel import CovarianceSet, covariance_set, sample_channel_matrix
from .features import (cmd_feature, dissimilarity_matrix, laplacian_eigenmaps,
                       position_feature)
from .phy import (CONSTELLATIONS, PilotBook, build_pilot_book, complex_noise,
                  correlate_all, estimator_matrices, lmmse_combiner,
                  pilot_signal_matrix, slice_symbols, uplink_sinr_all)
from .scenario import (ConfigurationError, Scenario, SystemConfig,
                       build_scenario, config_from_dict, sample_active_set)

logger = logging.getLogger(__name__)

PERFECT_CSI = "PERFECT_CSI"
METHODS = (NN_CHART, NN_CMD, NN_POSITION, RANDOM, SGPS, PERFECT_CSI)

AXIS_SNR_DB = "snr_db"
AXIS_ANTENNAS_M = "antennas_m"
AXIS_PILOT_LEN_TAU = "pilot_len_tau"
AXES = (AXIS_SNR_DB, AXIS_ANTENNAS_M, AXIS_PILOT_LEN_TAU)

# Substream tags; never reorder, they define the reproducible stream layout.
_TAG_SCENARIO = 1
_TAG_ACTIVITY = 2
_TAG_CHANNEL = 3
_TAG_ASSIGNMENT = 4


def derive_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for a (seed, tag, indices...) substream."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, key)]))


@dataclass(frozen=True)
class ExperimentPlan:
    """Everything needed to reproduce one sweep."""

    config: SystemConfig
    axis: str = AXIS_SNR_DB
    axis_values: tuple = (0.0,)
    methods: tuple = METHODS
    scenario_draws: int = 1
    activity_draws: int = 50
    channel_draws: int = 200
    data_symbols: int = 8
    seed: int = 0

    def validate(self) -> None:
        if self.axis not in AXES:
            raise ConfigurationError(f"unknown sweep axis {self.axis!r}")
        values = list(self.axis_values)
        if not values:
            raise ConfigurationError("axis_values must be nonempty")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ConfigurationError("axis_values must be strictly increasing")
        if not self.methods:
            raise ConfigurationError("methods must be nonempty")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigurationError(f"unknown method {m!r}")
        if len(set(self.methods)) != len(self.methods):
            raise ConfigurationError("methods must be distinct")
        for name in ("scenario_draws", "activity_draws", "channel_draws", "data_symbols"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1")
        if self.seed < 0:
            raise ConfigurationError("seed must be >= 0")
        # Every axis point must yield a buildable configuration up front.
        for v in values:
            apply_axis(self.config, self.axis, v).validate()


def apply_axis(config: SystemConfig, axis: str, value) -> SystemConfig:
    """System configuration at one sweep point.

    The SNR axis is transmit SNR p_u / noise_power in dB, realised by
    scaling the noise power at fixed p_u.
    """
    if axis == AXIS_SNR_DB:
        return replace(config, noise_power=config.p_u * 10.0 ** (-float(value) / 10.0))
    if axis == AXIS_ANTENNAS_M:
        return replace(config, M=int(value))
    if axis == AXIS_PILOT_LEN_TAU:
        return replace(config, tau=int(value))
    raise ConfigurationError(f"unknown sweep axis {axis!r}")


def load_plan(path) -> ExperimentPlan:
    """Read the `system` and `experiment` sections of a YAML config file."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict) or "system" not in doc:
        raise ConfigurationError(f"{path}: missing top-level 'system' section")
    cfg = config_from_dict(doc["system"])
    exp = doc.get("experiment", {})
    if not isinstance(exp, dict):
        raise ConfigurationError(f"{path}: 'experiment' must be a mapping")
    known = {"axis", "values", "methods", "scenario_draws", "activity_draws",
             "channel_draws", "data_symbols", "seed"}
    unknown = sorted(set(exp) - known)
    if unknown:
        raise ConfigurationError(f"unknown experiment key(s): {', '.join(unknown)}")
    plan = ExperimentPlan(
        config=cfg,
        axis=str(exp.get("axis", AXIS_SNR_DB)).lower(),
        axis_values=tuple(exp.get("values", (cfg.snr_db,))),
        methods=tuple(exp.get("methods", METHODS)),
        scenario_draws=int(exp.get("scenario_draws", 1)),
        activity_draws=int(exp.get("activity_draws", 50)),
        channel_draws=int(exp.get("channel_draws", 200)),
        data_symbols=int(exp.get("data_symbols", 8)),
        seed=int(exp.get("seed", cfg.seed)),
    )
    plan.validate()
    return plan


# ---------------------------------------------------------------------------
# Metrics

def wilson_interval(errors: int, trials: int, confidence: float = 0.95):
    """Wilson score interval for a binomial proportion."""
    if trials == 0:
        return 0.0, 1.0
    z = norm.ppf(0.5 * (1.0 + confidence))
    p = errors / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    lo = 0.0 if errors == 0 else max(0.0, center - half)
    hi = 1.0 if errors == trials else min(1.0, center + half)
    return lo, hi


def achievable_rate(gammas, tau: int, coherence_len: int):
    """Mean log2(1 + gamma) and its net value after the pilot prelog."""
    g = np.asarray(gammas, dtype=float)
    if g.size == 0:
        raise ValueError("achievable_rate needs at least one SINR sample")
    if tau > coherence_len:
        raise ValueError("tau must be <= coherence_len")
    r_ach = float(np.mean(np.log2(1.0 + g)))
    return r_ach, (1.0 - tau / coherence_len) * r_ach


def empirical_cdf(samples):
    """Step CDF at the sorted sample points as (value, probability) pairs."""
    x = np.sort(np.asarray(samples, dtype=float))
    if x.size == 0:
        raise ValueError("empirical_cdf needs at least one sample")
    probs = np.arange(1, x.size + 1) / x.size
    return list(zip(x.tolist(), probs.tolist()))


@dataclass
class MethodPointResult:
    """Aggregated metrics of one (method, axis value) cell."""

    method: str
    axis_value: float
    tau: int
    prelog: float
    errors: int
    symbols: int
    ser: float
    ser_ci_lo: float
    ser_ci_hi: float
    sum_rate: float
    net_sum_rate: float
    rate_sum: np.ndarray    # (N,) accumulated log2(1+gamma) per UE
    rate_count: np.ndarray  # (N,) number of SINR samples per UE

    def per_ue_rates(self):
        """(ue index, mean achievable rate) for every UE that was ever active."""
        idx = np.flatnonzero(self.rate_count > 0)
        return idx, self.rate_sum[idx] / self.rate_count[idx]


@dataclass
class MetricsReport:
    """Full result of one experiment run, sufficient to emit all outputs."""

    axis: str
    axis_values: tuple
    methods: tuple
    seed: int
    config: SystemConfig
    config_sha256: str
    created_utc: str
    trial_counts: dict
    results: list

    def result(self, method: str, axis_value) -> MethodPointResult:
        for r in self.results:
            if r.method == method and r.axis_value == axis_value:
                return r
        raise KeyError((method, axis_value))


# ---------------------------------------------------------------------------
# Per-activity-draw Monte Carlo task

@dataclass
class _PointContext:
    """Immutable inputs shared by all activity tasks of one sweep point."""

    scenario: Scenario
    covariances: CovarianceSet | None
    assignments: dict
    book: PilotBook
    methods: tuple
    seed: int
    scen_idx: int
    channel_draws: int
    data_symbols: int


class _Accumulator:
    __slots__ = ("errors", "symbols", "rate_sum", "rate_count", "sumrate", "draws")

    def __init__(self, n_users: int):
        self.errors = 0
        self.symbols = 0
        self.rate_sum = np.zeros(n_users)
        self.rate_count = np.zeros(n_users, dtype=np.int64)
        self.sumrate = 0.0
        self.draws = 0

    def merge(self, other: "_Accumulator") -> None:
        self.errors += other.errors
        self.symbols += other.symbols
        self.rate_sum += other.rate_sum
        self.rate_count += other.rate_count
        self.sumrate += other.sumrate
        self.draws += other.draws


def _run_activity(ctx: _PointContext, act_idx: int) -> dict:
    cfg = ctx.scenario.config
    ms = cfg.antennas_total
    active = sample_active_set(
        ctx.scenario, derive_rng(ctx.seed, _TAG_ACTIVITY, ctx.scen_idx, act_idx))
    idx = active.indices
    k = idx.size
    pilot_noise_var = cfg.noise_power / (cfg.p_u * cfg.tau)
    const = CONSTELLATIONS[cfg.constellation]

    # Estimation matrices depend only on the activity pattern, not on the
    # channel realization: build them once per task and per method.
    dense_cache: dict[int, np.ndarray] = {}

    def dense(n: int) -> np.ndarray:
        if n not in dense_cache:
            dense_cache[n] = ctx.covariances.compound(n)
        return dense_cache[n]

    prep = {}
    for m in ctx.methods:
        if m == PERFECT_CSI:
            continue
        pa = ctx.assignments[m]
        cop = copilot_sets(pa, active)
        est = np.empty((k, ms, ms), dtype=complex)
        err_sum = np.zeros((ms, ms), dtype=complex)
        for i, ue in enumerate(idx):
            interf = [dense(int(j)) for j in cop.interferers_of(int(ue))]
            est[i], r_err = estimator_matrices(dense(int(ue)), interf, pilot_noise_var)
            err_sum += r_err
        psi = pilot_signal_matrix(pa.pilots[idx], ctx.book, cfg.p_u)
        prep[m] = (est, err_sum, psi)

    zero_err = np.zeros((ms, ms), dtype=complex)
    rng = derive_rng(ctx.seed, _TAG_CHANNEL, ctx.scen_idx, act_idx)
    acc = {m: _Accumulator(ctx.scenario.n_users) for m in ctx.methods}

    for _ in range(ctx.channel_draws):
        h = sample_channel_matrix(ctx.scenario, idx, rng)
        n_pilot = complex_noise(rng, (ms, cfg.tau), cfg.noise_power)
        sym = rng.integers(0, const.size, size=(k, ctx.data_symbols))
        n_data = complex_noise(rng, (ms, ctx.data_symbols), cfg.noise_power)
        y_data = h @ (math.sqrt(cfg.p_u) * const[sym]) + n_data

        for m in ctx.methods:
            if m == PERFECT_CSI:
                h_hat, err_sum = h, zero_err
            else:
                est, err_sum, psi = prep[m]
                y = h @ psi + n_pilot
                y_p = correlate_all(y, psi, cfg.p_u, cfg.tau)
                h_hat = np.einsum("kab,bk->ak", est, y_p)
            w = lmmse_combiner(h_hat, err_sum, cfg.p_u, cfg.noise_power)
            gammas = uplink_sinr_all(w, h_hat, err_sum, cfg.p_u, cfg.noise_power)
            log_rates = np.log2(1.0 + gammas)

            a = acc[m]
            a.rate_sum[idx] += log_rates
            a.rate_count[idx] += 1
            a.sumrate += float(log_rates.sum())
            a.draws += 1
            decided = slice_symbols(w.conj().T @ y_data, const)
            a.errors += int((decided != sym).sum())
            a.symbols += sym.size
    return acc


_WORKER_CTX: _PointContext | None = None


def _init_worker(ctx: _PointContext) -> None:
    global _WORKER_CTX
    _WORKER_CTX = ctx
    # One BLAS thread per worker: the matrices are small, and identical
    # threading across worker counts keeps reductions bit-identical.
    threadpool_limits(limits=1, user_api="blas")


def _worker_task(act_idx: int) -> dict:
    return _run_activity(_WORKER_CTX, act_idx)


# ---------------------------------------------------------------------------
# Run orchestration

def _prepare_point(plan: ExperimentPlan, cfg: SystemConfig, scen_idx: int) -> _PointContext:
    scen = build_scenario(cfg, derive_rng(plan.seed, _TAG_SCENARIO, scen_idx))
    need_cov = any(m != PERFECT_CSI for m in plan.methods)
    covs = covariance_set(scen) if need_cov else None
    need_d = any(m in (NN_CMD, NN_CHART, SGPS) for m in plan.methods)
    dism = dissimilarity_matrix(covs) if need_d else None

    assignments = {}
    for m in plan.methods:
        if m == PERFECT_CSI:
            continue
        rng = derive_rng(plan.seed, _TAG_ASSIGNMENT, scen_idx)
        if m == RANDOM:
            pa = random_assignment(cfg.N, cfg.tau, rng)
        elif m == SGPS:
            pa = sgps_assignment(dism, cfg.tau)
        elif m == NN_CMD:
            pa = nearest_neighbor_assignment(cmd_feature(dism), cfg.tau, rng)
        elif m == NN_CHART:
            chart = laplacian_eigenmaps(dism, cfg.chart_neighbors, cfg.chart_dim)
            pa = nearest_neighbor_assignment(chart, cfg.tau, rng)
        elif m == NN_POSITION:
            pa = nearest_neighbor_assignment(position_feature(scen), cfg.tau, rng)
        else:  # pragma: no cover
            raise ConfigurationError(f"unknown method {m!r}")
        assignments[m] = replace(pa, method=m, seed=plan.seed)

    return _PointContext(
        scenario=scen,
        covariances=covs,
        assignments=assignments,
        book=build_pilot_book(cfg.tau),
        methods=tuple(plan.methods),
        seed=plan.seed,
        scen_idx=scen_idx,
        channel_draws=plan.channel_draws,
        data_symbols=plan.data_symbols,
    )


def _run_point_tasks(ctx: _PointContext, activity_draws: int, workers: int) -> dict:
    """Execute all activity tasks and reduce them in task order."""
    totals = {m: _Accumulator(ctx.scenario.n_users) for m in ctx.methods}
    if workers <= 1:
        results = (_run_activity(ctx, a) for a in range(activity_draws))
        for part in results:
            for m in ctx.methods:
                totals[m].merge(part[m])
        return totals
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                             initargs=(ctx,)) as pool:
        for part in pool.map(_worker_task, range(activity_draws)):
            for m in ctx.methods:
                totals[m].merge(part[m])
    return totals


def config_hash(config: SystemConfig) -> str:
    blob = json.dumps(config.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def run_experiment(plan: ExperimentPlan, workers: int = 1) -> MetricsReport:
    """Execute the full sweep; deterministic in (plan, seed) for any worker count."""
    plan.validate()
    created = datetime.now(timezone.utc).isoformat(timespec="seconds")
    with threadpool_limits(limits=1, user_api="blas"):
        results = _run_all_points(plan, workers)
    return MetricsReport(
        axis=plan.axis,
        axis_values=tuple(float(v) for v in plan.axis_values),
        methods=tuple(plan.methods),
        seed=plan.seed,
        config=plan.config,
        config_sha256=config_hash(plan.config),
        created_utc=created,
        trial_counts={
            "scenario_draws": plan.scenario_draws,
            "activity_draws": plan.activity_draws,
            "channel_draws": plan.channel_draws,
            "data_symbols": plan.data_symbols,
        },
        results=results,
    )


def _run_all_points(plan: ExperimentPlan, workers: int) -> list:
    results = []
    for value in plan.axis_values:
        cfg = apply_axis(plan.config, plan.axis, value)
        prelog = 1.0 - cfg.tau / cfg.coherence_len
        totals = {m: _Accumulator(cfg.N) for m in plan.methods}
        for scen_idx in range(plan.scenario_draws):
            ctx = _prepare_point(plan, cfg, scen_idx)
            part = _run_point_tasks(ctx, plan.activity_draws, workers)
            for m in plan.methods:
                totals[m].merge(part[m])
        for m in plan.methods:
            t = totals[m]
            ser = t.errors / t.symbols
            lo, hi = wilson_interval(t.errors, t.symbols)
            sum_rate = t.sumrate / t.draws
            results.append(MethodPointResult(
                method=m, axis_value=float(value), tau=cfg.tau, prelog=prelog,
                errors=t.errors, symbols=t.symbols, ser=ser,
                ser_ci_lo=lo, ser_ci_hi=hi,
                sum_rate=sum_rate, net_sum_rate=prelog * sum_rate,
                rate_sum=t.rate_sum, rate_count=t.rate_count,
            ))
        logger.info("axis point %s=%s done", plan.axis, value)
    return results


# ---------------------------------------------------------------------------
# Output files

def _fmt(x: float) -> str:
    return f"{x:.12g}"


def emit_report(report: MetricsReport, outdir) -> dict:
    """Write summary CSV, per-UE rate CSV and the run-metadata JSON.

    Emitting the same report twice produces byte-identical files; the
    only timestamp is the run creation time stored inside the report.
    """
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "summary": out / "summary.csv",
        "rates": out / "ue_rates.csv",
        "metadata": out / "metadata.json",
    }

    ordered = [r for m in report.methods for r in report.results if r.method == m]
    with open(paths["summary"], "w", encoding="utf-8", newline="") as fh:
        fh.write("method,axis_name,axis_value,ser,ser_ci_lo,ser_ci_hi,"
                 "sum_rate,net_sum_rate,trials\n")
        for r in ordered:
            fh.write(",".join([
                r.method, report.axis, _fmt(r.axis_value), _fmt(r.ser),
                _fmt(r.ser_ci_lo), _fmt(r.ser_ci_hi), _fmt(r.sum_rate),
                _fmt(r.net_sum_rate), str(r.symbols),
            ]) + "\n")

    with open(paths["rates"], "w", encoding="utf-8", newline="") as fh:
        fh.write("method,axis_name,axis_value,ue_index,n_samples,rate_ach,rate_net\n")
        for r in ordered:
            idx, rates = r.per_ue_rates()
            for ue, rate in zip(idx, rates):
                fh.write(",".join([
                    r.method, report.axis, _fmt(r.axis_value), str(int(ue)),
                    str(int(r.rate_count[ue])), _fmt(rate), _fmt(r.prelog * rate),
                ]) + "\n")

    meta = {
        "pilotsim_version": __version__,
        "created_utc": report.created_utc,
        "seed": report.seed,
        "axis": report.axis,
        "axis_values": list(report.axis_values),
        "methods": list(report.methods),
        "trial_counts": report.trial_counts,
        "config": report.config.to_dict(),
        "config_sha256": report.config_sha256,
    }
    with open(paths["metadata"], "w", encoding="utf-8", newline="") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return paths
