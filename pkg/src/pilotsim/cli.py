"""Command line interface: run sweeps, validate configs, self-check oracles."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .assignment import (assignment_objective, brute_force_assignment,
                         nearest_neighbor_assignment, random_assignment)
from .channel import covariance_set, sample_channel_block, sample_covariance
from .features import cmd, cmd_feature, dissimilarity_matrix
from .harness import (METHODS, ExperimentPlan, derive_rng, emit_report,
                      load_plan, run_experiment)
from .phy import estimator_matrices
from .scenario import ConfigurationError, SystemConfig, build_scenario


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pilotsim",
                                     description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"pilotsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a Monte Carlo sweep from a YAML config")
    run.add_argument("--config", required=True, help="YAML config file")
    run.add_argument("--out", required=True, help="output directory for CSV/JSON")
    run.add_argument("--seed", type=int, default=None, help="override the master seed")
    run.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    run.add_argument("--axis", default=None, help="override the sweep axis")
    run.add_argument("--values", type=float, nargs="+", default=None,
                     help="override the sweep axis values")
    run.add_argument("--methods", nargs="+", default=None, choices=list(METHODS),
                     help="override the methods to compare")
    run.add_argument("--scenario-draws", type=int, default=None)
    run.add_argument("--activity-draws", type=int, default=None)
    run.add_argument("--channel-draws", type=int, default=None)
    run.add_argument("--data-symbols", type=int, default=None)
    run.add_argument("-v", "--verbose", action="store_true", help="log progress")

    val = sub.add_parser("validate", help="check a YAML config without running")
    val.add_argument("--config", required=True)

    orc = sub.add_parser("oracle", help="run the built-in oracle self-checks")
    orc.add_argument("--seed", type=int, default=1234)
    return parser


def _apply_overrides(plan: ExperimentPlan, args) -> ExperimentPlan:
    fields = {}
    if args.seed is not None:
        fields["seed"] = args.seed
    if args.axis is not None:
        fields["axis"] = args.axis.lower()
    if args.values is not None:
        fields["axis_values"] = tuple(args.values)
    if args.methods is not None:
        fields["methods"] = tuple(args.methods)
    for name in ("scenario_draws", "activity_draws", "channel_draws", "data_symbols"):
        value = getattr(args, name)
        if value is not None:
            fields[name] = value
    if fields:
        plan = replace(plan, **fields)
        plan.validate()
    return plan


def _cmd_run(args) -> int:
    if args.verbose:
        logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    plan = _apply_overrides(load_plan(args.config), args)
    report = run_experiment(plan, workers=max(1, args.workers))
    paths = emit_report(report, args.out)
    for name, path in paths.items():
        print(f"{name}: {path}")
    return 0


def _cmd_validate(args) -> int:
    plan = load_plan(args.config)
    print(f"OK: {args.config} ({len(plan.axis_values)} axis point(s), "
          f"{len(plan.methods)} method(s))")
    return 0


def _check(name: str, ok: bool, detail: str = "") -> bool:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"[{status}] {name}{suffix}")
    return ok


def _cmd_oracle(args) -> int:
    """Fast self-checks of the core algorithms against independent oracles."""
    rng = np.random.default_rng(args.seed)
    ok = True

    # Nearest-neighbour chain on a 1-D line: the hand-traceable instance.
    feats = np.arange(6.0)[:, None]
    pa = nearest_neighbor_assignment(feats, tau=3, start=0)
    ok &= _check("algorithm golden trace", pa.pilots.tolist() == [1, 2, 3, 1, 2, 3])

    # Brute force dominates the greedy chain and random assignment.
    cfg = SystemConfig(N=8, K=8, M=4, S=3, L=8, tau=2, chart_neighbors=3, chart_dim=2)
    scen = build_scenario(cfg, derive_rng(args.seed, 0))
    dism = dissimilarity_matrix(covariance_set(scen, quadrature_points=96))
    nn = nearest_neighbor_assignment(cmd_feature(dism), 2, derive_rng(args.seed, 1))
    best = brute_force_assignment(dism, 2)
    rnd = random_assignment(8, 2, derive_rng(args.seed, 2))
    obj = assignment_objective
    ok &= _check("brute force upper-bounds greedy",
                 obj(dism, best) >= obj(dism, nn) and obj(dism, best) >= obj(dism, rnd),
                 f"bf={obj(dism, best):.4f} nn={obj(dism, nn):.4f} rnd={obj(dism, rnd):.4f}")

    # CMD identities on random PSD pairs.
    def rand_psd(dim):
        a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        return a @ a.conj().T
    cmd_ok = True
    for _ in range(100):
        r_a, r_b = rand_psd(6), rand_psd(6)
        d = cmd(r_a, r_b)
        cmd_ok &= 0.0 <= d <= 1.0
        cmd_ok &= cmd(r_a, r_a) == 0.0
        cmd_ok &= abs(d - cmd(r_b, r_a)) <= 1e-12
        cmd_ok &= abs(cmd(2.5 * r_a, 0.3 * r_b) - d) <= 1e-12
    ok &= _check("cmd identities (100 random PSD pairs)", cmd_ok)

    # Scalar LMMSE sanity: R=1, pilot-noise term 1, y=2 -> estimate 1, error var 1/2.
    est, err = estimator_matrices(np.eye(1, dtype=complex), [], 1.0)
    ok &= _check("scalar lmmse", abs(est[0, 0] * 2.0 - 1.0) < 1e-12
                 and abs(err[0, 0] - 0.5) < 1e-12)

    # Analytic covariance against a sample average (small, fast).
    small = SystemConfig(N=4, K=4, M=4, S=1, L=4, tau=2, chart_dim=2, chart_neighbors=2)
    scen2 = build_scenario(small, derive_rng(args.seed, 3))
    samples = sample_channel_block(scen2.user(0), 0, small, derive_rng(args.seed, 4), 50_000)
    emp = sample_covariance(samples)
    ana = covariance_set(scen2, quadrature_points=256).compound(0)
    rel = np.linalg.norm(emp - ana) / np.linalg.norm(ana)
    ok &= _check("covariance sample vs quadrature", rel < 0.05, f"rel={rel:.4f}")

    return 0 if ok else 1


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "oracle":
            return _cmd_oracle(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
