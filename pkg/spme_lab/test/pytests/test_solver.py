# Copyright (c) 2026 spme_lab contributors. See LICENSE file for more info.

"""
Tests to check the IMEX solver, the energy budget and the deterministic oracles.
"""

import dataclasses
import math
import typing

import numpy as np
import pytest

from spme_lab.estimators import fit_power_law
from spme_lab.noise import NoiseConfig, derive_stream, increments_at
from spme_lab.sigma import SigmaSpec
from spme_lab.spectral import GridFunction, SpectralCoeffs, eigenvalues, grid_nodes
from spme_lab.solver import (
    DEFAULT_SAFETY,
    ConvergenceRow,
    ConvergenceStudy,
    DtPolicy,
    PathState,
    SolverConfig,
    barenblatt,
    barenblatt_convergence,
    barenblatt_profile,
    barenblatt_support,
    energy_budget,
    hgamma_sq,
    initial_bump,
    initial_coefficients_power_decay,
    initial_constant,
    initial_from_function,
    linear_mode_error,
    positivity_violation,
    run_deterministic,
    run_path,
    step,
    total_mass,
)


def sine_profile(J: int, amplitude: float) -> GridFunction:
    return GridFunction(amplitude * math.sqrt(2.0) * np.sin(np.pi * grid_nodes(J)))


def test_zero_stays_zero(stochastic_config: SolverConfig) -> None:
    trajectory = run_path(stochastic_config, GridFunction(np.zeros(stochastic_config.J)))
    assert not trajectory.blowup_flag
    assert all(not np.any(state.v.values) for state in trajectory.states)


def test_linear_modes_are_exact(small_J: int, rng: np.random.Generator) -> None:
    nu, dt, steps = 0.5, 1e-3, 50
    cfg = SolverConfig(
        nu=nu,
        n_modes=1,
        J=small_J,
        T=steps * dt,
        dt_policy=DtPolicy.fixed(dt),
        nonlinear_gain=0.0,
        record_times=(steps * dt,),
    )
    c0 = rng.normal(size=small_J)
    final = run_deterministic(cfg, SpectralCoeffs(c0)).final
    expected = c0 * (1.0 + nu * eigenvalues(small_J) * dt) ** (-steps)
    assert final.step_count == steps
    assert np.allclose(final.vhat.coeffs, expected, rtol=1e-12, atol=0.0)


def test_linear_mode_error() -> None:
    assert linear_mode_error(0.5, 1e-3, 200) <= 1e-12


def test_odd_symmetry(deterministic_config: SolverConfig, rng: np.random.Generator) -> None:
    c0 = SpectralCoeffs(rng.normal(size=deterministic_config.J) / np.arange(1, deterministic_config.J + 1) ** 2)
    plus = run_deterministic(deterministic_config, c0)
    minus = run_deterministic(deterministic_config, SpectralCoeffs(-c0.coeffs))
    assert np.allclose(minus.coeff_matrix(), -plus.coeff_matrix(), atol=1e-12)


def test_fixed_step_record_times(deterministic_config: SolverConfig) -> None:
    trajectory = run_deterministic(deterministic_config, sine_profile(deterministic_config.J, 1.0))
    assert np.allclose(trajectory.times, deterministic_config.record_times)
    assert [state.step_count for state in trajectory.states] == [0, 50, 100]


def test_adaptive_steps_land_on_record_times(small_J: int) -> None:
    cfg = SolverConfig(J=small_J, n_modes=4, T=0.01, dt_policy=DtPolicy.adaptive(), record_times=(0.0, 0.0033, 0.01))
    trajectory = run_deterministic(cfg, sine_profile(small_J, 1.0))
    assert trajectory.times.tolist() == [0.0, 0.0033, 0.01]


def test_record_times_default_to_endpoints(small_J: int) -> None:
    assert SolverConfig(J=small_J, n_modes=1, T=0.5).record_times == (0.0, 0.5)


def test_same_seed_reproduces_path(stochastic_config: SolverConfig) -> None:
    v0 = sine_profile(stochastic_config.J, 1.0)
    first = run_path(stochastic_config, v0, path_index=2)
    second = run_path(stochastic_config, v0, path_index=2)
    other = run_path(stochastic_config, v0, path_index=3)
    assert np.array_equal(first.coeff_matrix(), second.coeff_matrix())
    assert not np.array_equal(first.coeff_matrix(), other.coeff_matrix())


def test_explicit_stream_matches_path_index(stochastic_config: SolverConfig) -> None:
    v0 = sine_profile(stochastic_config.J, 1.0)
    implicit = run_path(stochastic_config, v0, path_index=4)
    explicit = run_path(stochastic_config, v0, noise=derive_stream(stochastic_config.noise_config(4)), path_index=4)
    assert np.array_equal(implicit.coeff_matrix(), explicit.coeff_matrix())


def test_single_step_with_increments(stochastic_config: SolverConfig) -> None:
    state = PathState.from_grid(sine_profile(stochastic_config.J, 1.0))
    inc = increments_at(stochastic_config.noise_config(0), 0)
    moved = step(state, stochastic_config, inc)
    assert moved.step_count == 1
    assert moved.t == pytest.approx(inc.dt)
    assert not np.array_equal(moved.vhat.coeffs, step(state, stochastic_config).vhat.coeffs)


def test_step_rejects_bad_inputs(stochastic_config: SolverConfig) -> None:
    state = PathState.from_grid(sine_profile(stochastic_config.J, 1.0))
    with pytest.raises(ValueError):
        step(PathState.from_grid(sine_profile(stochastic_config.J + 1, 1.0)), stochastic_config)
    with pytest.raises(ValueError):
        step(state, stochastic_config, increments_at(NoiseConfig(n_modes=3, dt=1e-4, master_seed=0), 0))
    with pytest.raises(ValueError):
        step(dataclasses.replace(state, blowup_flag=True), stochastic_config)


def test_guard_flags_blowup(small_J: int) -> None:
    cfg = SolverConfig(
        J=small_J,
        n_modes=8,
        T=0.01,
        dt_policy=DtPolicy.fixed(1e-4),
        sigma=SigmaSpec.constant(1e4),
        blowup_guard=1.0,
    )
    trajectory = run_path(cfg, GridFunction(np.zeros(small_J)))
    assert trajectory.blowup_flag
    assert trajectory.blowup_time is not None
    assert len(trajectory.states) == 1


def test_run_deterministic_rejects_noise(stochastic_config: SolverConfig) -> None:
    with pytest.raises(ValueError):
        run_deterministic(stochastic_config, sine_profile(stochastic_config.J, 1.0))


def test_run_path_rejects_mismatched_grid(deterministic_config: SolverConfig) -> None:
    with pytest.raises(ValueError):
        run_path(deterministic_config, GridFunction(np.zeros(deterministic_config.J + 2)))


@pytest.mark.parametrize(
    "kwargs",
    [
        {"m": 1.0},
        {"nu": 0.0},
        {"nu": 2.0},
        {"J": 8, "n_modes": 9},
        {"T": -1.0},
        {"T": 1e-3, "dt_policy": DtPolicy.fixed(1e-2)},
        {"nonlinear_gain": 1.5},
        {"blowup_guard": 0.0},
        {"record_times": (0.1, 0.05)},
        {"T": 0.1, "record_times": (0.0, 0.2)},
    ],
)
def test_invalid_solver_configs(kwargs: dict) -> None:
    with pytest.raises(ValueError):
        SolverConfig(**kwargs)


def test_invalid_dt_policies() -> None:
    with pytest.raises(ValueError):
        DtPolicy.fixed(0.0)
    with pytest.raises(ValueError):
        DtPolicy.adaptive(dt_max=1e-6, dt_min=1e-3)


def test_default_safety_keeps_the_top_mode_stable() -> None:
    J = 127
    dx2 = 1.0 / (J + 1) ** 2
    assert DEFAULT_SAFETY * dx2 * eigenvalues(J)[-1] < 2.0
    assert DtPolicy().safety == DEFAULT_SAFETY


def test_mode_coupled_viscosity() -> None:
    cfg = SolverConfig.mode_coupled_viscosity(16, J=63)
    assert cfg.nu == pytest.approx(1.0 / 16.0)
    assert cfg.n_modes == 16


def test_budget_of_zero_path(stochastic_config: SolverConfig) -> None:
    cfg = dataclasses.replace(stochastic_config, track_budget=True)
    trajectory = run_path(cfg, GridFunction(np.zeros(cfg.J)))
    assert trajectory.budget is not None
    assert trajectory.budget.times.size == 100
    assert not np.any(trajectory.budget.d_norm)
    assert energy_budget(trajectory).max_abs_residual == 0.0


def deterministic_residual(dt: float, J: int) -> float:
    cfg = SolverConfig(J=J, n_modes=1, T=0.01, dt_policy=DtPolicy.fixed(dt), track_budget=True)
    return energy_budget(run_deterministic(cfg, sine_profile(J, 1.0))).max_abs_residual


def test_deterministic_residual_shrinks_with_dt(small_J: int) -> None:
    coarse = deterministic_residual(2e-4, small_J)
    fine = deterministic_residual(1e-4, small_J)
    assert 0.0 < fine < coarse


def test_stochastic_residual_shrinks_with_dt(stochastic_config: SolverConfig) -> None:
    def mean_residual(dt: float) -> float:
        cfg = dataclasses.replace(stochastic_config, dt_policy=DtPolicy.fixed(dt), track_budget=True)
        v0 = sine_profile(cfg.J, 1.0)
        return float(np.mean([energy_budget(run_path(cfg, v0, path_index=i)).max_abs_residual for i in range(4)]))

    assert mean_residual(1e-4) < mean_residual(4e-4)


def test_budget_summary_requires_tracking(deterministic_config: SolverConfig) -> None:
    trajectory = run_deterministic(deterministic_config, sine_profile(deterministic_config.J, 1.0))
    with pytest.raises(ValueError):
        energy_budget(trajectory)


def test_norm_decays_without_noise(deterministic_config: SolverConfig) -> None:
    trajectory = run_deterministic(deterministic_config, sine_profile(deterministic_config.J, 2.0))
    norms = [hgamma_sq(state, -0.75) for state in trajectory.states]
    assert norms == sorted(norms, reverse=True)
    assert np.all(np.diff(trajectory.lm1_integral) > 0.0)
    assert np.all(np.diff(trajectory.power_integral) > 0.0)


def test_comparison_principle() -> None:
    J = 63
    cfg = SolverConfig(J=J, n_modes=1, T=0.05, record_times=(0.0, 0.025, 0.05))
    lower = run_deterministic(cfg, sine_profile(J, 0.5))
    upper = run_deterministic(cfg, sine_profile(J, 1.0))
    for below, above in zip(lower.states, upper.states):
        assert np.all(below.v.values <= above.v.values + 1e-3 * np.max(above.v.values))


def test_barenblatt_mass_is_conserved() -> None:
    J = 127
    cfg = SolverConfig(J=J, n_modes=1, nu=1e-5, T=0.05, dt_policy=DtPolicy.adaptive(dt_max=1e-3))
    v0 = barenblatt(2.0, 0.0, 0.01, 0.5, 0.05, J)
    final = run_deterministic(cfg, v0).final
    assert total_mass(final.v) == pytest.approx(total_mass(v0), rel=1e-3)


def test_barenblatt_profile_shape() -> None:
    J = 1023
    early = barenblatt(2.0, 0.0, 0.01, 0.5, 0.05, J)
    late = barenblatt(2.0, 0.05, 0.01, 0.5, 0.05, J)
    assert np.all(early.values >= 0.0)
    assert early.values[0] == 0.0 and early.values[-1] == 0.0
    assert total_mass(late) == pytest.approx(total_mass(early), rel=1e-3)
    lo, hi = barenblatt_support(2.0, 0.05, 0.01, 0.5, 0.05)
    assert 0.0 < lo < 0.5 < hi < 1.0
    assert lo + hi == pytest.approx(1.0)


def test_barenblatt_solves_the_porous_medium_equation() -> None:
    """
    The finite-difference residual of d_t u - d_xx(u^m) inside the support shrinks like h^2.
    """
    m, t, t0, x0, c = 2.0, 0.02, 0.01, 0.5, 0.05
    lo, hi = barenblatt_support(m, t, t0, x0, c)
    x = np.linspace(x0 - 0.25 * (hi - lo), x0 + 0.25 * (hi - lo), 21)
    tau = 1e-6

    def residual(h: float) -> float:
        du_dt = (barenblatt_profile(m, t + tau, t0, x0, c, x) - barenblatt_profile(m, t - tau, t0, x0, c, x)) / (
            2.0 * tau
        )
        power = [barenblatt_profile(m, t, t0, x0, c, x + shift) ** m for shift in (-h, 0.0, h)]
        laplacian = (power[0] - 2.0 * power[1] + power[2]) / h**2
        return float(np.max(np.abs(du_dt - laplacian)))

    assert residual(1.0 / 256.0) < 0.25 * residual(1.0 / 64.0)


def test_barenblatt_rejects_wide_support() -> None:
    with pytest.raises(ValueError):
        barenblatt(2.0, 0.0, 0.01, 0.5, 1.0, 63)
    with pytest.raises(ValueError):
        barenblatt_profile(1.0, 0.0, 0.01, 0.5, 0.05, np.zeros(3))


def test_barenblatt_convergence_improves_with_resolution() -> None:
    rows = barenblatt_convergence(2.0, (63, 127), 0.01)
    assert [row.J for row in rows] == [63, 127]
    assert rows[1].l1_error < rows[0].l1_error


def test_refinement_ratios() -> None:
    rows = (ConvergenceRow(J=127, l1_error=4.0, steps=1), ConvergenceRow(J=255, l1_error=2.0, steps=1))
    assert ConvergenceStudy(rows, 0.0).refinement_ratios() == [2.0]
    zero = (rows[0], ConvergenceRow(J=255, l1_error=0.0, steps=1))
    assert ConvergenceStudy(zero, 0.0).refinement_ratios() == [math.inf]


def test_initial_data_helpers() -> None:
    assert np.all(initial_constant(7, 2.0).values == 2.0)
    decay = initial_coefficients_power_decay(4, 1.0, 2.0)
    assert np.allclose(decay.coeffs, [2.0, 1.0, 2.0 / 3.0, 0.5])
    assert np.allclose(initial_from_function(3, lambda x: x).values, [0.25, 0.5, 0.75])
    bump = initial_bump(255, 0.5, 0.2, 1.0)
    assert total_mass(bump) == pytest.approx(1.0, rel=1e-3)
    assert np.all(bump.values[np.abs(grid_nodes(255) - 0.5) >= 0.2] == 0.0)


def test_positivity_violation() -> None:
    state = PathState.from_grid(GridFunction(np.array([0.5, -0.25, 1.0])))
    assert positivity_violation(state) == 0.25
    assert positivity_violation(PathState.from_grid(GridFunction(np.ones(3)))) == 0.0


@pytest.mark.slow
def test_barenblatt_convergence_rate() -> None:
    rows = barenblatt_convergence(2.0, (127, 255, 511), 0.05)
    errors = [row.l1_error for row in rows]
    assert errors[0] / errors[1] >= 1.8
    assert errors[1] / errors[2] >= 1.8
    assert errors[2] < 1e-2


CONSTANT_AMPLITUDES = (10.0, 100.0, 1000.0)
FIT_TIMES = tuple(float(t) for t in np.linspace(0.01, 0.1, 10))


@pytest.fixture(scope="module")
def coming_down_curves() -> typing.Dict[float, np.ndarray]:
    """||v(t)||^2_{H^(-3/4)} from constant data A, recorded on [0.01, 0.1] and at 0.25, 0.5 and 1."""
    J = 63
    cfg = SolverConfig(
        J=J,
        n_modes=1,
        T=1.0,
        dt_policy=DtPolicy.adaptive(dt_max=1e-3),
        record_times=FIT_TIMES + (0.25, 0.5, 1.0),
    )
    return {
        a: np.array([hgamma_sq(state, -0.75) for state in run_deterministic(cfg, initial_constant(J, a)).states])
        for a in CONSTANT_AMPLITUDES
    }


@pytest.mark.slow
def test_coming_down_from_infinity(coming_down_curves: typing.Dict[float, np.ndarray]) -> None:
    """
    Large constant data forget their amplitude by t = 0.1. Data of size 10 start like the large-data solution shifted
    by t_A ~ 0.01 and stay strictly below it, so their gap decays like 2 t_A / t and closes within 5% by t = 1.
    """
    small, medium, large = (coming_down_curves[a] for a in CONSTANT_AMPLITUDES)
    at_tenth = len(FIT_TIMES) - 1
    assert medium[at_tenth] == pytest.approx(large[at_tenth], rel=0.05)
    assert np.all(small <= medium * (1.0 + 1e-9)) and np.all(medium <= large * (1.0 + 1e-9))
    gaps = 1.0 - small / large
    assert np.all(np.diff(gaps[at_tenth:]) < 0.0)
    assert small[-1] == pytest.approx(large[-1], rel=0.05)


@pytest.mark.slow
@pytest.mark.parametrize("amplitude", [100.0, 1000.0])
def test_coming_down_decay_rate(coming_down_curves: typing.Dict[float, np.ndarray], amplitude: float) -> None:
    curve = coming_down_curves[amplitude][: len(FIT_TIMES)]
    slope, _, r_squared = fit_power_law(np.array(FIT_TIMES), curve, (0.01, 0.1))
    assert slope <= -2.0 / (2.0 - 1.0) + 0.3
    assert r_squared > 0.99
