# Copyright (c) 2026 spme_lab contributors. See LICENSE file for more info.

"""
Tests to check the interacting branching particle system and its comparison against the SPDE.
"""

import logging
import math

import numpy as np
import pytest

from spme_lab.estimators import EnsembleConfig, run_paths
from spme_lab.particles import (
    Kernel,
    KernelKind,
    OffspringLaw,
    ParticleConfig,
    ParticleState,
    branch_step,
    compare_to_spde,
    drift_step,
    drift_velocity,
    empirical_measure,
    particle_rng,
    run_particle_ensemble,
    sample_initial_positions,
    simulate,
)
from spme_lab.solver import DtPolicy, SolverConfig, initial_bump

PARTICLE_MASS = 0.05


@pytest.mark.parametrize("kind", [KernelKind.EPANECHNIKOV, KernelKind.TRIANGLE])
def test_kernels_have_unit_mass(kind: KernelKind) -> None:
    kernel = Kernel(kind)
    assert kernel.integral() == pytest.approx(1.0, abs=1e-6)
    assert kernel.value(np.array([1.0, -1.5]))[1] == 0.0


def test_table_kernel() -> None:
    kernel = Kernel(KernelKind.TABLE, (-1.0, 0.0, 1.0), (0.0, 1.0, 0.0))
    assert kernel.integral() == pytest.approx(1.0, abs=1e-6)
    assert np.allclose(kernel.derivative(np.array([-0.5, 0.0, 0.5, 1.5])), [1.0, 0.0, -1.0, 0.0])
    assert np.allclose(kernel.value(np.array([0.5])), Kernel(KernelKind.TRIANGLE).value(np.array([0.5])))


@pytest.mark.parametrize(
    "z, v",
    [
        ((-1.0, 1.0), (0.0, 0.0)),
        ((-0.5, 0.0, 1.0), (0.0, 1.0, 0.0)),
        ((-1.0, 0.0, 1.0), (0.0, 2.0, 0.0)),
        ((-1.0, 0.0, 1.0), (0.1, 1.0, 0.0)),
    ],
)
def test_invalid_table_kernels(z: tuple, v: tuple) -> None:
    with pytest.raises(ValueError):
        Kernel(KernelKind.TABLE, z, v)


def test_offspring_laws() -> None:
    assert OffspringLaw.binary().mean == 1.0
    assert OffspringLaw.binary().variance == 1.0
    assert OffspringLaw.identity().variance == 0.0
    with pytest.raises(ValueError):
        OffspringLaw((0.3, 0.3, 0.4))
    with pytest.raises(ValueError):
        OffspringLaw((0.5, 0.6))


def test_particle_config_defaults_and_validation() -> None:
    cfg = ParticleConfig(N=100, base_rate=0.5)
    assert cfg.rate == 50.0
    assert cfg.weight == pytest.approx(0.01)
    assert cfg.record_times == (0.0, cfg.T)
    invalid = (
        {"N": 0},
        {"epsilon": 0.0},
        {"dt": 1.0, "T": 0.1},
        {"bins": 0},
        {"branch_rate": -1.0},
        {"N": 1000, "dt": 1e-3},
    )
    for kwargs in invalid:
        with pytest.raises(ValueError):
            ParticleConfig(**kwargs)
    with pytest.raises(ValueError):
        ParticleConfig(bandwidth=0.0)
    with pytest.raises(ValueError):
        ParticleConfig(record_times=(0.05, 0.01))


def test_single_particle_does_not_move() -> None:
    cfg = ParticleConfig(N=1, branch_rate=0.0)
    assert drift_velocity(np.array([0.3]), cfg)[0] == 0.0


@pytest.mark.parametrize("kind", [KernelKind.EPANECHNIKOV, KernelKind.TRIANGLE])
def test_pair_repels_symmetrically(kind: KernelKind) -> None:
    cfg = ParticleConfig(N=2, kernel=Kernel(kind), branch_rate=0.0)
    velocity = drift_velocity(np.array([0.51, 0.49]), cfg)
    assert velocity[0] > 0.0
    assert velocity[0] == pytest.approx(-velocity[1], rel=1e-12)


def test_distant_pair_does_not_interact() -> None:
    cfg = ParticleConfig(N=2, epsilon=0.05, branch_rate=0.0)
    assert np.all(drift_velocity(np.array([0.2, 0.8]), cfg) == 0.0)


def test_sweep_matches_pairwise_sum(rng: np.random.Generator) -> None:
    cfg = ParticleConfig(N=300, epsilon=0.05, branch_rate=0.0)
    positions = rng.uniform(0.3, 0.7, 300)
    d = (positions[:, None] - positions[None, :]) / cfg.epsilon
    direct = -cfg.interaction_weight / cfg.epsilon**2 * cfg.kernel.derivative(d).sum(axis=1)
    assert np.allclose(drift_velocity(positions, cfg), direct, rtol=1e-9, atol=1e-9)


def test_table_kernel_matches_triangle(rng: np.random.Generator) -> None:
    positions = rng.uniform(0.3, 0.7, 500)
    table = ParticleConfig(N=500, kernel=Kernel(KernelKind.TABLE, (-1.0, 0.0, 1.0), (0.0, 1.0, 0.0)), branch_rate=0.0)
    triangle = ParticleConfig(N=500, kernel=Kernel(KernelKind.TRIANGLE), branch_rate=0.0)
    assert np.allclose(drift_velocity(positions, table), drift_velocity(positions, triangle), atol=1e-9)


@pytest.mark.parametrize("kind", [KernelKind.EPANECHNIKOV, KernelKind.TRIANGLE])
def test_center_of_mass_is_invariant(kind: KernelKind, rng: np.random.Generator) -> None:
    cfg = ParticleConfig(N=10_000, epsilon=0.05, kernel=Kernel(kind), dt=1e-5, branch_rate=0.0)
    state = ParticleState(rng.uniform(0.4, 0.6, 10_000))
    moved = drift_step(state, cfg)
    assert not np.array_equal(moved.positions, state.positions)
    assert abs(float(np.mean(moved.positions)) - float(np.mean(state.positions))) < 1e-10


def test_drift_warns_when_under_resolved(caplog: pytest.LogCaptureFixture) -> None:
    cfg = ParticleConfig(N=2, epsilon=0.05, dt=1.0, T=1.0, mass=100.0, branch_rate=0.0)
    with caplog.at_level(logging.WARNING, logger="spme_lab.particles"):
        drift_step(ParticleState(np.array([0.49, 0.51])), cfg)
    assert "under-resolved" in caplog.text


def test_branching_with_identity_law_keeps_everyone(rng: np.random.Generator) -> None:
    cfg = ParticleConfig(N=100, branch_rate=50.0, dt=1e-3, offspring_law=OffspringLaw.identity())
    state = ParticleState(rng.uniform(size=100))
    assert np.array_equal(branch_step(state, cfg, rng).positions, state.positions)


def test_branching_with_zero_rate_is_a_no_op(rng: np.random.Generator) -> None:
    cfg = ParticleConfig(N=10, branch_rate=0.0)
    state = ParticleState(np.linspace(0.1, 0.9, 10))
    assert branch_step(state, cfg, rng) is state


def test_large_branching_probability_is_rejected() -> None:
    assert ParticleConfig(N=1000, dt=1e-4).rate == 1000.0
    with pytest.raises(ValueError):
        ParticleConfig(N=1000, dt=1e-3)
    with pytest.raises(ValueError):
        ParticleConfig(N=10, branch_rate=200.0, dt=1e-3)


def test_offspring_sit_on_the_parent(rng: np.random.Generator) -> None:
    cfg = ParticleConfig(N=1000, branch_rate=50.0, dt=1e-3)
    state = ParticleState(np.linspace(0.0, 1.0, 1000))
    children = branch_step(state, cfg, rng)
    assert set(children.positions.tolist()) <= set(state.positions.tolist())
    assert int(np.max(np.unique(children.positions, return_counts=True)[1])) <= 2


def test_critical_branching_preserves_mean_population() -> None:
    N, runs = 10_000, 200
    cfg = ParticleConfig(N=N, branch_rate=1.0, dt=0.05, T=1.0, interaction=False, seed=17)
    population = np.array([run.population[-1] for run in run_particle_ensemble(cfg, np.full(N, 0.5), runs)])
    standard_error = float(np.std(population, ddof=1)) / math.sqrt(runs)
    assert abs(float(np.mean(population)) - N) <= 3.0 * standard_error


def test_identity_system_stands_still(rng: np.random.Generator) -> None:
    cfg = ParticleConfig(
        N=50, branch_rate=10.0, dt=1e-3, T=0.01, offspring_law=OffspringLaw.identity(), interaction=False
    )
    positions = rng.uniform(size=50)
    run = simulate(cfg, positions)
    assert run.final is not None
    assert np.array_equal(run.final.positions, positions)
    assert run.population.tolist() == [50, 50]


def test_simulation_is_reproducible(rng: np.random.Generator) -> None:
    cfg = ParticleConfig(N=200, branch_rate=20.0, dt=1e-4, T=0.002, seed=4)
    positions = rng.uniform(0.3, 0.7, 200)
    first, second = simulate(cfg, positions), simulate(cfg, positions)
    assert first.final is not None and second.final is not None
    assert np.array_equal(first.final.positions, second.final.positions)
    assert first.rows() == second.rows()


def test_runs_use_distinct_generators() -> None:
    assert particle_rng(1, 0).random() != particle_rng(1, 1).random()


def test_empirical_measure_clips_outside_particles() -> None:
    cfg = ParticleConfig(N=4, bins=4)
    measure = empirical_measure(ParticleState(np.array([-0.1, 0.3, 0.6, 1.2])), cfg)
    assert measure.counts.tolist() == [1, 1, 1, 1]
    assert measure.outside_count == 2
    assert measure.total_mass == pytest.approx(1.0)
    assert np.allclose(measure.density, 1.0)


@pytest.mark.parametrize("bins", [1, 7, 64])
def test_empirical_mass_counts_alive_particles(bins: int, rng: np.random.Generator) -> None:
    cfg = ParticleConfig(N=500, mass=PARTICLE_MASS, branch_rate=50.0, dt=1e-3, bins=bins)
    state = ParticleState(rng.uniform(-0.1, 1.1, 500))
    for _ in range(20):
        state = branch_step(state, cfg, rng)
    measure = empirical_measure(state, cfg)
    assert measure.total_mass == pytest.approx(state.alive_count / cfg.N, rel=1e-12)
    assert float(measure.masses.sum()) == pytest.approx(state.alive_count / cfg.N, rel=1e-12)


def test_single_particle_in_one_bin_weighs_one_over_n() -> None:
    cfg = ParticleConfig(N=8, mass=PARTICLE_MASS, bins=1)
    assert empirical_measure(ParticleState(np.array([0.4])), cfg).total_mass == pytest.approx(1.0 / 8.0)


def test_recorded_mass_follows_the_population(rng: np.random.Generator) -> None:
    cfg = ParticleConfig(N=400, mass=PARTICLE_MASS, branch_rate=40.0, dt=1e-3, T=0.05, interaction=False, seed=2)
    run = simulate(cfg, rng.uniform(0.2, 0.8, 400))
    assert np.allclose(run.total_mass, run.population / cfg.N, rtol=1e-12, atol=0.0)
    assert [measure.total_mass for measure in run.measures] == pytest.approx(list(run.total_mass))


def test_kernel_density_of_uniform_cloud(rng: np.random.Generator) -> None:
    cfg = ParticleConfig(N=100_000, bins=20, bandwidth=0.05, branch_rate=0.0)
    measure = empirical_measure(ParticleState(rng.uniform(0.25, 0.75, 100_000)), cfg)
    middle = np.abs(measure.centers - 0.5) < 0.15
    assert np.allclose(measure.density[middle], 2.0, rtol=0.05)
    assert np.all(measure.density[measure.centers < 0.15] == 0.0)
    with pytest.raises(ValueError):
        empirical_measure(ParticleState(np.zeros(1)), cfg, bandwidth=-1.0)


def test_initial_positions_follow_the_profile(rng: np.random.Generator) -> None:
    J = 255
    positions = sample_initial_positions(initial_bump(J, 0.5, 0.1, 1.0), 5000, rng)
    h = 1.0 / (J + 1)
    assert positions.size == 5000
    assert np.all((positions > 0.4 - h) & (positions < 0.6 + h))
    assert float(np.mean(positions)) == pytest.approx(0.5, abs=0.01)
    with pytest.raises(ValueError):
        sample_initial_positions(initial_bump(J, 0.5, 0.1, 0.0), 10, rng)


def matched_systems(N: int, epsilon: float, T: float, runs: int) -> tuple:
    record_times = (0.0, 0.5 * T, T)
    J = 63
    initial = initial_bump(J, 0.5, 0.2, PARTICLE_MASS)
    particles = ParticleConfig(
        N=N,
        epsilon=epsilon,
        branch_rate=0.0,
        offspring_law=OffspringLaw.identity(),
        dt=1e-4,
        T=T,
        mass=PARTICLE_MASS,
        record_times=record_times,
        bins=32,
    )
    spde = SolverConfig(
        m=2.0,
        nu=1e-4,
        n_modes=1,
        J=J,
        T=T,
        dt_policy=DtPolicy.adaptive(dt_max=1e-4),
        nonlinear_gain=0.5,
        record_times=record_times,
    )
    particle_runs = run_particle_ensemble(particles, initial, runs)
    trajectories = run_paths(EnsembleConfig(paths=1, solver=spde, initial=initial))
    return particle_runs, trajectories


def test_comparison_without_noise() -> None:
    particle_runs, trajectories = matched_systems(2000, 0.05, 0.005, 2)
    report = compare_to_spde(particle_runs, trajectories, mass=PARTICLE_MASS)
    assert np.allclose(report.times, [0.0, 0.0025, 0.005])
    assert np.allclose(report.particle_mass.mean, 1.0)
    assert np.allclose(report.spde_mass.mean, 1.0, rtol=1e-2, atol=0.0)
    assert np.all(np.isfinite(report.l1_distance))
    assert np.all(report.l1_distance < 1.0)
    assert report.first_exit_time is None
    assert report.particle_profiles.shape == report.spde_profiles.shape == (3, 32)


def test_comparison_rejects_mismatched_horizons() -> None:
    particle_runs, trajectories = matched_systems(100, 0.05, 0.005, 1)
    with pytest.raises(ValueError):
        compare_to_spde(particle_runs, [])
    with pytest.raises(ValueError):
        compare_to_spde(particle_runs, trajectories, mass=0.0)
    shifted = particle_runs[0]
    shifted.times = shifted.times + 1.0
    with pytest.raises(ValueError):
        compare_to_spde([shifted], trajectories)


@pytest.mark.slow
def test_profiles_approach_the_spde_as_particles_multiply() -> None:
    coarse = compare_to_spde(*matched_systems(1_000, 0.1, 0.01, 2), mass=PARTICLE_MASS).l1_distance[-1]
    fine = compare_to_spde(*matched_systems(100_000, 0.05, 0.01, 2), mass=PARTICLE_MASS).l1_distance[-1]
    assert fine < coarse
