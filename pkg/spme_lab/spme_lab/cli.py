# Copyright (c) 2026 spme_lab contributors. See LICENSE file for more info.

"""
Command line experiment runner. Every subcommand writes its data files and a manifest.json into --out.

Exit codes: 0 success, 1 scientific failure (violated inequality, blow-up of every path), 2 usage or
configuration error.
"""

import argparse
import logging
from dataclasses import replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np
import yaml

from spme_lab.artifacts import (
    RunManifest,
    write_budget_csv,
    write_comparison_csv,
    write_convergence_csv,
    write_density_csv,
    write_ensemble_csv,
    write_fits_csv,
    write_json,
    write_particle_csv,
    write_reports_txt,
    write_snapshots,
    write_trajectory_csv,
)
from spme_lab.estimators import (
    AllPathsBlewUpError,
    EnsembleConfig,
    estimate_temporal_holder,
    fit_decay,
    gamma_prime,
    hgamma_functional,
    power_regularity_check,
    run_ensemble,
    run_paths,
    spacetime_norm,
)
from spme_lab.params import (
    DEFAULTS_YAML,
    ConfigError,
    build_analysis_settings,
    build_convergence_kwargs,
    build_ensemble_config,
    build_initial,
    build_particle_config,
    build_particle_run_settings,
    build_particle_spde_config,
    build_sigma,
    build_solver_config,
    build_verify_settings,
    get_param_dict,
    resolve_master_seed,
    resolve_workers,
    snapshots_enabled,
)
from spme_lab.particles import compare_to_spde, run_particle_ensemble
from spme_lab.solver import convergence_study, energy_budget, run_path, total_mass
from spme_lab.spectral import GridFunction
from spme_lab.suites import verify_suite

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
LINEAR_MODE_RTOL = 1e-12

Params = Dict[str, Dict[str, Any]]


def cmd_verify(params: Params, seed: int, workers: int, out: Path) -> int:
    settings = build_verify_settings(params, seed)
    result = verify_suite(
        settings, build_sigma(params), m=float(params["solver"]["m"]), modes=int(params["solver"]["n_modes"])
    )
    write_reports_txt(out / "verify_reports.txt", result.reports)
    write_json(out / "verify_reports.json", [report.to_dict() for report in result.reports])
    for report in result.failed:
        logger.error(f"Violated: {report.to_record()}")
    if result.warning_count:
        logger.warning(f"{result.warning_count} warnings in regimes without guarantees")
    logger.info(f"{len(result.reports)} checks, {len(result.failed)} violations")
    return EXIT_OK if result.ok else EXIT_FAILURE


def cmd_simulate(params: Params, seed: int, workers: int, out: Path) -> int:
    cfg = build_solver_config(params, seed)
    trajectory = run_path(cfg, build_initial(params), path_index=0)
    write_trajectory_csv(out / "trajectory.csv", trajectory)
    summary: Dict[str, Any] = {
        "blowup_flag": trajectory.blowup_flag,
        "blowup_time": trajectory.blowup_time,
        "positivity_violation": trajectory.positivity_violation,
        "recorded_times": len(trajectory.states),
    }
    if trajectory.budget is not None:
        write_budget_csv(out / "budget.csv", trajectory.budget)
        budget = energy_budget(trajectory)
        summary["max_abs_residual"] = budget.max_abs_residual
        summary["cumulative_residual"] = budget.cumulative_residual
    if snapshots_enabled(params) and trajectory.states:
        write_snapshots(out / "snapshots.bin", trajectory.states)
    if trajectory.states and -1.0 < cfg.gamma_track < 0.0:
        summary["power_regularity"] = power_regularity_check(trajectory, cfg.m).to_dict()
    write_json(out / "summary.json", summary)
    if trajectory.blowup_flag:
        logger.error(f"The path blew up at t = {trajectory.blowup_time}")
        return EXIT_FAILURE
    return EXIT_OK


def _path_diagnostics(cfg: EnsembleConfig, params: Params) -> Dict[str, Any]:
    analysis = build_analysis_settings(params)
    (trajectory,) = run_paths(replace(cfg, paths=1, workers=1))
    solver = cfg.solver
    diagnostics: Dict[str, Any] = {}
    if trajectory.blowup_flag:
        return diagnostics
    g_prime = gamma_prime(solver.gamma_track, solver.m)
    if 0.0 < g_prime < 1.0:
        diagnostics["spacetime_norm"] = spacetime_norm(trajectory, g_prime, solver.m + 1.0)
        diagnostics["gamma_prime"] = g_prime
        diagnostics["power_regularity"] = power_regularity_check(trajectory, solver.m).to_dict()
    try:
        holder = estimate_temporal_holder(trajectory, solver.gamma_track, analysis.holder_epsilon)
        diagnostics["holder_exponent"] = holder.estimated_exponent
        diagnostics["holder_flat"] = holder.flat
    except ValueError as exc:
        logger.info(f"Skipping the Hoelder estimate: {exc}")
    return diagnostics


def cmd_estimate(params: Params, seed: int, workers: int, out: Path) -> int:
    cfg = build_ensemble_config(params, seed, workers)
    analysis = build_analysis_settings(params)
    estimate = run_ensemble(cfg)
    write_ensemble_csv(out / "ensemble.csv", estimate)
    fits = []
    for gamma in cfg.tracked_gammas:
        try:
            fits.append(fit_decay(estimate, hgamma_functional(gamma), analysis.decay_window))
        except ValueError as exc:
            logger.warning(f"No decay fit for gamma = {gamma}: {exc}")
    write_fits_csv(out / "fits.csv", fits)
    summary = {"paths": estimate.path_count, "blowups": estimate.blowup_count}
    summary.update(_path_diagnostics(cfg, params))
    write_json(out / "summary.json", summary)
    return EXIT_OK


def cmd_particles(params: Params, seed: int, workers: int, out: Path) -> int:
    cfg = build_particle_config(params, seed)
    settings = build_particle_run_settings(params)
    spde = build_particle_spde_config(params, seed)
    profile = build_initial(params, J=spde.J)
    if isinstance(profile, GridFunction):
        mass = total_mass(profile)
    else:
        raise ConfigError("The particle experiment needs grid initial data (bump, constant or barenblatt)")
    if not mass > 0.0:
        raise ConfigError("The particle experiment needs initial data with positive mass")
    profile = GridFunction(profile.values * (cfg.mass / mass))
    runs = run_particle_ensemble(cfg, profile, settings.runs, workers)
    write_particle_csv(out / "particles.csv", runs)
    centers = runs[0].measures[0].centers
    profiles = np.mean([[measure.density for measure in run.measures] for run in runs], axis=0)
    write_density_csv(out / "density.csv", runs[0].times, centers, profiles)
    summary: Dict[str, Any] = {"runs": settings.runs, "final_population": [int(run.population[-1]) for run in runs]}
    if settings.compare_spde:
        ensemble = EnsembleConfig(
            paths=settings.spde_paths, solver=spde, initial=profile, master_seed=seed, workers=workers
        )
        trajectories = run_paths(ensemble)
        report = compare_to_spde(runs, trajectories, mass=cfg.mass)
        write_comparison_csv(out / "comparison.csv", report)
        write_density_csv(out / "spde_density.csv", report.times, report.centers, report.spde_profiles)
        summary.update(
            {
                "consistent": report.consistent,
                "discrepancies": report.discrepancies,
                "first_exit_time": report.first_exit_time,
                "positivity_violation": report.positivity_violation,
                "l1_distance": report.l1_distance,
            }
        )
    write_json(out / "summary.json", summary)
    return EXIT_OK


def cmd_convergence(params: Params, seed: int, workers: int, out: Path) -> int:
    study = convergence_study(**build_convergence_kwargs(params))
    write_convergence_csv(out / "convergence.csv", study)
    write_json(
        out / "summary.json",
        {"linear_mode_error": study.linear_mode_error, "refinement_ratios": study.refinement_ratios()},
    )
    if study.linear_mode_error > LINEAR_MODE_RTOL:
        logger.error(f"Linear mode error {study.linear_mode_error} exceeds {LINEAR_MODE_RTOL}")
        return EXIT_FAILURE
    return EXIT_OK


COMMANDS: Dict[str, Callable[[Params, int, int, Path], int]] = {
    "verify": cmd_verify,
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "particles": cmd_particles,
    "convergence": cmd_convergence,
}


def cli() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spme_lab", description="Stochastic porous medium equation laboratory")
    parser.add_argument("--verbose", action="store_true", help="Log at debug level")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub = subparsers.add_parser(name)
        sub.add_argument("--config", type=str, default=None, help="Path to a YAML config file")
        sub.add_argument("--seed", type=int, default=None, help="Master seed, overrides SPME_MASTER_SEED")
        sub.add_argument("--workers", type=int, default=None, help="Worker processes, overrides SPME_WORKERS")
        sub.add_argument("--out", type=str, default=None, help="Output directory, spme_out/<command> by default")
    subparsers.add_parser("print-defaults", help="Print the commented default configuration")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = cli().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if not exc.code else EXIT_CONFIG
    logging.basicConfig(
        format="[%(filename)s:%(lineno)d] %(message)s", level=logging.DEBUG if args.verbose else logging.INFO
    )
    if args.command == "print-defaults":
        print(DEFAULTS_YAML, end="")
        return EXIT_OK
    try:
        params = get_param_dict(args.config)
        seed = resolve_master_seed(params, args.seed)
        workers = resolve_workers(params, args.workers)
    except (ConfigError, yaml.YAMLError, OSError) as exc:
        logger.error(f"Configuration error: {exc}")
        return EXIT_CONFIG
    out = Path(args.out) if args.out else Path("spme_out") / args.command
    out.mkdir(parents=True, exist_ok=True)
    params["noise"]["master_seed"] = seed
    params["ensemble"]["workers"] = workers
    manifest = RunManifest(command=args.command, config=params, master_seed=seed)
    manifest.mark_existing(out)
    try:
        code = COMMANDS[args.command](params, seed, workers, out)
    except AllPathsBlewUpError as exc:
        logger.error(str(exc))
        code = EXIT_FAILURE
    except ValueError as exc:
        # ConfigError included: values that only fail once combined, e.g. a branching rate too fast for dt.
        logger.error(f"Configuration error: {exc}")
        return EXIT_CONFIG
    manifest.finalize(out)
    return code


if __name__ == "__main__":
    exit(main())
