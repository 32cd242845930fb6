# Copyright (c) 2026 spme_lab contributors. See LICENSE file for more info.

"""
Time integration of the regularized equation

    dv = d_xx(nu v + v^[m]) dt + sum_{k <= n} sigma(x, v) e^k dw^k,    v(0) = v(1) = 0,

with an IMEX Euler-Maruyama scheme in the sine basis: the viscous term is implicit, the porous-medium term and
the noise are explicit. Also hosts the deterministic validation oracles and the pathwise energy budget.
"""

import functools
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Tuple, Union

import numpy as np

from spme_lab.noise import IncrementStream, NoiseConfig, WienerIncrements, derive_stream, modal_sum_array
from spme_lab.sigma import SigmaSpec
from spme_lab.spectral import (
    DEFAULT_OVERSAMPLING,
    GridFunction,
    SpectralCoeffs,
    eigenvalue_powers,
    eigenvalues,
    fine_values_array,
    forward_array,
    grid_nodes,
    inverse_array,
    signed_power,
)

logger = logging.getLogger(__name__)

DEFAULT_SAFETY = 0.15  # explicit v^[m] step is stable for safety <= 2 / pi^2 on the spectral Laplacian
DEFAULT_BLOWUP_GUARD = 1e8
_TIME_EPS = 1e-12


class DtPolicyKind(Enum):
    FIXED = "fixed"
    ADAPTIVE = "adaptive"

    def __repr__(self) -> str:
        return self.value


@dataclass(frozen=True)
class DtPolicy:
    """Time-step rule.

    fixed: every step has length dt.
    adaptive: dt = min(dt_max, safety dx^2 / (nu + gain m max|v|^(m-1))), floored at dt_min; max|v| is taken on the
    oversampled grid. Steps are shortened to land exactly on record times.
    """

    kind: DtPolicyKind = DtPolicyKind.ADAPTIVE
    dt: float = 1e-5
    safety: float = DEFAULT_SAFETY
    dt_max: float = 1e-4
    dt_min: float = 1e-12

    def __post_init__(self) -> None:
        if not isinstance(self.kind, DtPolicyKind):
            object.__setattr__(self, "kind", DtPolicyKind(self.kind))
        for name in ("dt", "safety", "dt_max", "dt_min"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"DtPolicy.{name} must be finite and positive, got {value}")
        if self.dt_min > self.dt_max:
            raise ValueError(f"DtPolicy needs dt_min <= dt_max, got {self.dt_min} > {self.dt_max}")

    @classmethod
    def fixed(cls, dt: float) -> "DtPolicy":
        return cls(kind=DtPolicyKind.FIXED, dt=dt)

    @classmethod
    def adaptive(cls, safety: float = DEFAULT_SAFETY, dt_max: float = 1e-4, dt_min: float = 1e-12) -> "DtPolicy":
        return cls(kind=DtPolicyKind.ADAPTIVE, safety=safety, dt_max=dt_max, dt_min=dt_min)

    @property
    def nominal_dt(self) -> float:
        return self.dt if self.kind == DtPolicyKind.FIXED else self.dt_max


@dataclass(frozen=True)
class SolverConfig:
    m: float = 2.0
    nu: float = 0.01
    n_modes: int = 32
    J: int = 127
    T: float = 0.2
    dt_policy: DtPolicy = DtPolicy()
    nonlinear_gain: float = 1.0
    sigma: SigmaSpec = SigmaSpec.zero()
    gamma_track: float = -0.75
    record_times: Tuple[float, ...] = ()
    oversampling: int = DEFAULT_OVERSAMPLING
    blowup_guard: float = DEFAULT_BLOWUP_GUARD
    master_seed: int = 0
    track_budget: bool = False

    def __post_init__(self) -> None:
        if not self.m > 1.0:
            raise ValueError(f"Porous medium exponent m must exceed 1, got {self.m}")
        if not 0.0 < self.nu <= 1.0:
            raise ValueError(f"Viscosity nu must lie in (0, 1], got {self.nu}")
        if self.J < 1:
            raise ValueError(f"Grid size J must be positive, got {self.J}")
        if not 1 <= self.n_modes <= self.J:
            raise ValueError(f"Noise modes must satisfy 1 <= n_modes <= J = {self.J}, got {self.n_modes}")
        if not (math.isfinite(self.T) and self.T > 0.0):
            raise ValueError(f"Horizon T must be finite and positive, got {self.T}")
        if self.dt_policy.kind == DtPolicyKind.FIXED and self.dt_policy.dt > self.T:
            raise ValueError(f"Fixed time step {self.dt_policy.dt} exceeds the horizon T = {self.T}")
        if not 0.0 <= self.nonlinear_gain <= 1.0:
            raise ValueError(f"nonlinear_gain must lie in [0, 1], got {self.nonlinear_gain}")
        if not self.blowup_guard > 0.0:
            raise ValueError(f"blowup_guard must be positive, got {self.blowup_guard}")
        times = tuple(float(t) for t in self.record_times) or (0.0, self.T)
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError(f"record_times must be strictly increasing, got {times}")
        if times[0] < 0.0 or times[-1] > self.T * (1.0 + _TIME_EPS):
            raise ValueError(f"record_times must lie in [0, T = {self.T}], got {times[0]} .. {times[-1]}")
        object.__setattr__(self, "record_times", times)
        if not -1.0 < self.gamma_track < -0.5:
            logger.debug(f"gamma_track = {self.gamma_track} lies outside (-1, -1/2); diagnostic use only")

    @classmethod
    def mode_coupled_viscosity(cls, n_modes: int, **kwargs: object) -> "SolverConfig":
        """Preset with nu = 1 / n_modes, the coupling used by the approximation argument."""
        return cls(nu=1.0 / n_modes, n_modes=n_modes, **kwargs)  # type: ignore[arg-type]

    @property
    def q(self) -> float:
        return 0.5 * (self.m + 1.0)

    def noise_config(self, path_index: int = 0) -> NoiseConfig:
        return NoiseConfig(
            n_modes=self.n_modes, dt=self.dt_policy.nominal_dt, master_seed=self.master_seed, path_index=path_index
        )


@dataclass(frozen=True)
class PathState:
    t: float
    v: GridFunction
    vhat: SpectralCoeffs
    step_count: int = 0
    blowup_flag: bool = False

    @classmethod
    def from_coeffs(cls, c: SpectralCoeffs, t: float = 0.0) -> "PathState":
        return cls(t=t, v=GridFunction(inverse_array(c.coeffs)), vhat=c)

    @classmethod
    def from_grid(cls, g: GridFunction, t: float = 0.0) -> "PathState":
        return cls(t=t, v=g, vhat=SpectralCoeffs(forward_array(g.values)))


def initial_state(v0: Union[GridFunction, SpectralCoeffs]) -> PathState:
    if isinstance(v0, SpectralCoeffs):
        return PathState.from_coeffs(v0)
    return PathState.from_grid(v0)


@dataclass
class EnergyBudget:
    """Per-step terms of the discrete Ito expansion of ||v||^2_{H^gamma}.

    d_norm = drift_visc + drift_nl + ito_correction + martingale_part + residual, with the residual defined as the
    difference.
    """

    gamma: float
    times: np.ndarray
    dt: np.ndarray
    d_norm: np.ndarray
    drift_visc: np.ndarray
    drift_nl: np.ndarray
    ito_correction: np.ndarray
    martingale_part: np.ndarray

    @property
    def residual(self) -> np.ndarray:
        return self.d_norm - (self.drift_visc + self.drift_nl + self.ito_correction + self.martingale_part)


@dataclass(frozen=True)
class EnergyBudgetSummary:
    steps: int
    max_abs_residual: float
    cumulative_residual: float


class _BudgetRecorder:
    _FIELDS = ("times", "dt", "d_norm", "drift_visc", "drift_nl", "ito_correction", "martingale_part")

    def __init__(self, gamma: float) -> None:
        self.gamma = gamma
        self._rows: List[Tuple[float, ...]] = []

    def add(self, row: Tuple[float, ...]) -> None:
        self._rows.append(row)

    def freeze(self) -> EnergyBudget:
        columns = np.array(self._rows, dtype=np.float64).reshape(-1, len(self._FIELDS)).T
        return EnergyBudget(self.gamma, *columns)


@dataclass
class Trajectory:
    """States of one path at the record times, plus running integrals and the energy budget.

    lm1_integral[i] and power_integral[i] hold the left-point time integrals of ||v||^(m+1)_{L^(m+1)} and
    ||v^[(m+1)/2]||^2_{H^(1+gamma)} from 0 to times[i].
    """

    config: SolverConfig
    path_index: int
    states: List[PathState]
    lm1_integral: np.ndarray
    power_integral: np.ndarray
    budget: Optional[EnergyBudget] = None
    blowup_flag: bool = False
    blowup_time: Optional[float] = None
    min_value: float = 0.0

    @property
    def times(self) -> np.ndarray:
        return np.array([state.t for state in self.states])

    @property
    def final(self) -> PathState:
        return self.states[-1]

    def coeff_matrix(self) -> np.ndarray:
        return np.stack([state.vhat.coeffs for state in self.states])

    @property
    def positivity_violation(self) -> float:
        """Magnitude of the most negative value seen along the path."""
        return max(0.0, -self.min_value)


def hgamma_sq(state: PathState, gamma: float) -> float:
    return float(np.sum(eigenvalue_powers(state.vhat.J, gamma) * state.vhat.coeffs**2))


def lm1_norm(state: PathState, m: float) -> float:
    """||v||^(m+1)_{L^(m+1)}."""
    return float(np.sum(np.abs(state.v.values) ** (m + 1.0)) / (state.v.J + 1))


def power_h1g(state: PathState, m: float, gamma: float, factor: int = DEFAULT_OVERSAMPLING) -> float:
    """||v^[(m+1)/2]||^2_{H^(1+gamma)} with the power evaluated on the oversampled grid."""
    fine = fine_values_array(state.vhat.coeffs, factor)
    coeffs = forward_array(signed_power(fine, 0.5 * (m + 1.0)))[: state.vhat.J]
    return float(np.sum(eigenvalue_powers(state.vhat.J, 1.0 + gamma) * coeffs**2))


def total_mass(g: GridFunction) -> float:
    return float(np.sum(g.values) / (g.J + 1))


def l1_error(g: GridFunction, reference: GridFunction) -> float:
    if g.J != reference.J:
        raise ValueError(f"L1 error needs equal grid sizes, got {g.J} and {reference.J}")
    return float(np.sum(np.abs(g.values - reference.values)) / (g.J + 1))


class _Stepper:
    """Immutable per-configuration tables and the single-step update."""

    def __init__(self, cfg: SolverConfig) -> None:
        self.cfg = cfg
        self.lam = eigenvalues(cfg.J)
        self.x = grid_nodes(cfg.J)
        self.weights = eigenvalue_powers(cfg.J, cfg.gamma_track)
        self.power_weights = eigenvalue_powers(cfg.J, 1.0 + cfg.gamma_track)
        self.noise_active = not cfg.sigma.is_zero
        modes = np.arange(1, cfg.n_modes + 1, dtype=np.float64)
        self.noise_basis = math.sqrt(2.0) * np.sin(np.pi * np.multiply.outer(modes, self.x))
        self.dx2 = 1.0 / (cfg.J + 1) ** 2

    def nonlinear(self, coeffs: np.ndarray) -> Tuple[np.ndarray, np.ndarray, float]:
        """Coefficients of v^[m] and v^[(m+1)/2] (first J modes) and max|v| on the oversampled grid."""
        cfg = self.cfg
        fine = fine_values_array(coeffs, cfg.oversampling)
        power_m = forward_array(signed_power(fine, cfg.m))[: cfg.J]
        power_q = forward_array(signed_power(fine, cfg.q))[: cfg.J]
        return power_m, power_q, float(np.max(np.abs(fine)))

    def adaptive_dt(self, fine_max: float) -> float:
        cfg = self.cfg
        policy = cfg.dt_policy
        diffusivity = cfg.nu + cfg.nonlinear_gain * cfg.m * fine_max ** (cfg.m - 1.0)
        return min(policy.dt_max, max(policy.dt_min, policy.safety * self.dx2 / diffusivity))

    def advance(
        self, state: PathState, dt: float, dw: Optional[np.ndarray], power_m: np.ndarray
    ) -> Tuple[PathState, Optional[Tuple[float, ...]]]:
        cfg = self.cfg
        c = state.vhat.coeffs
        rhs = c - dt * cfg.nonlinear_gain * self.lam * power_m
        noisy = dw is not None and self.noise_active
        if noisy:
            sigma_values = cfg.sigma(self.x, state.v.values)
            rhs = rhs + forward_array(sigma_values * modal_sum_array(dw, cfg.J))
        c_new = rhs / (1.0 + dt * cfg.nu * self.lam)
        v_new = inverse_array(c_new)
        step_count = state.step_count + 1
        if cfg.dt_policy.kind == DtPolicyKind.FIXED:
            t_new = step_count * cfg.dt_policy.dt
        else:
            t_new = state.t + dt
        if not (np.all(np.isfinite(c_new)) and np.all(np.isfinite(v_new))):
            return PathState(state.t, state.v, state.vhat, state.step_count, blowup_flag=True), None
        blowup = bool(np.max(np.abs(v_new)) > cfg.blowup_guard)
        new_state = PathState(t_new, GridFunction(v_new), SpectralCoeffs(c_new), step_count, blowup)
        if not cfg.track_budget:
            return new_state, None
        w = self.weights
        d_norm = float(np.sum(w * c_new**2) - np.sum(w * c**2))
        drift_visc = -2.0 * cfg.nu * dt * float(np.sum(self.lam * w * c**2))
        drift_nl = -2.0 * cfg.nonlinear_gain * dt * float(np.sum(self.lam * w * c * power_m))
        ito = martingale = 0.0
        if noisy:
            assert dw is not None
            modal = forward_array(sigma_values[None, :] * self.noise_basis[: dw.size])
            ito = dt * float(np.sum(w[None, :] * modal**2))
            martingale = 2.0 * float(np.dot(dw, modal @ (w * c)))
        return new_state, (state.t, dt, d_norm, drift_visc, drift_nl, ito, martingale)


@functools.lru_cache(maxsize=8)
def _stepper_for(cfg: SolverConfig) -> _Stepper:
    return _Stepper(cfg)


def step(
    state: PathState, cfg: SolverConfig, inc: Optional[WienerIncrements] = None, dt: Optional[float] = None
) -> PathState:
    """One IMEX Euler-Maruyama step.

    v_hat+_k = [v_hat_k - dt lambda_k gain (v^[m])^_k + (noise field)^_k] / (1 + dt nu lambda_k)

    Args:
        state: Current state; must not be flagged as blown up.
        cfg: Solver configuration.
        inc: Wiener increments of this step; None means no noise.
        dt: Step length. Defaults to inc.dt, else to the policy (fixed dt or the adaptive rule).

    Returns:
        The next state, with blowup_flag set when a value is non-finite or exceeds the guard.
    """
    if state.blowup_flag:
        raise ValueError("Cannot step a path that is flagged as blown up")
    if state.v.J != cfg.J:
        raise ValueError(f"State grid size {state.v.J} does not match the configured J = {cfg.J}")
    if inc is not None and inc.n_modes != cfg.n_modes:
        raise ValueError(f"Increments drive {inc.n_modes} modes but the configuration has n_modes={cfg.n_modes}")
    stepper = _stepper_for(cfg)
    power_m, _, fine_max = stepper.nonlinear(state.vhat.coeffs)
    if dt is None:
        if inc is not None:
            dt = inc.dt
        elif cfg.dt_policy.kind == DtPolicyKind.FIXED:
            dt = cfg.dt_policy.dt
        else:
            dt = stepper.adaptive_dt(fine_max)
    new_state, _ = stepper.advance(state, dt, None if inc is None else inc.dw, power_m)
    return new_state


def _reached(state: PathState, cfg: SolverConfig, target: float) -> bool:
    if cfg.dt_policy.kind == DtPolicyKind.FIXED:
        return state.step_count >= round(target / cfg.dt_policy.dt)
    return state.t >= target - _TIME_EPS * max(1.0, cfg.T)


def run_path(
    cfg: SolverConfig,
    v0: Union[GridFunction, SpectralCoeffs],
    noise: Optional[IncrementStream] = None,
    path_index: int = 0,
) -> Trajectory:
    """Integrate one path and record it at cfg.record_times.

    Without an explicit stream, a noise-driven configuration draws from the stream of `path_index`. A path whose
    guard trips is truncated at the last record time reached and flagged.
    """
    state = initial_state(v0)
    if state.v.J != cfg.J:
        raise ValueError(f"Initial data has J = {state.v.J} but the configuration has J = {cfg.J}")
    if noise is None and not cfg.sigma.is_zero:
        noise = derive_stream(cfg.noise_config(path_index))
    stepper = _stepper_for(cfg)
    recorder = _BudgetRecorder(cfg.gamma_track) if cfg.track_budget else None
    states: List[PathState] = []
    lm1_values: List[float] = []
    power_values: List[float] = []
    lm1_acc = power_acc = 0.0
    min_value = float(np.min(state.v.values))
    blowup_time: Optional[float] = None
    for target in cfg.record_times:
        while not _reached(state, cfg, target):
            power_m, power_q, fine_max = stepper.nonlinear(state.vhat.coeffs)
            landing = False
            if cfg.dt_policy.kind == DtPolicyKind.FIXED:
                dt = cfg.dt_policy.dt
            else:
                dt = stepper.adaptive_dt(fine_max)
                landing = dt >= target - state.t
                if landing:
                    dt = target - state.t
            dw = None if noise is None else noise.draw(state.step_count, dt).dw
            lm1_acc += dt * lm1_norm(state, cfg.m)
            power_acc += dt * float(np.sum(stepper.power_weights * power_q**2))
            state, terms = stepper.advance(state, dt, dw, power_m)
            if recorder is not None and terms is not None:
                recorder.add(terms)
            if state.blowup_flag:
                break
            if landing:
                state = PathState(target, state.v, state.vhat, state.step_count)
            min_value = min(min_value, float(np.min(state.v.values)))
        if state.blowup_flag:
            blowup_time = state.t
            logger.warning(f"Path {path_index} blew up at t = {state.t} after {state.step_count} steps")
            break
        states.append(state)
        lm1_values.append(lm1_acc)
        power_values.append(power_acc)
    return Trajectory(
        config=cfg,
        path_index=path_index,
        states=states,
        lm1_integral=np.array(lm1_values),
        power_integral=np.array(power_values),
        budget=None if recorder is None else recorder.freeze(),
        blowup_flag=blowup_time is not None,
        blowup_time=blowup_time,
        min_value=min_value,
    )


def run_deterministic(cfg: SolverConfig, v0: Union[GridFunction, SpectralCoeffs]) -> Trajectory:
    if not cfg.sigma.is_zero:
        raise ValueError("run_deterministic needs sigma = 0")
    return run_path(cfg, v0, noise=None)


def energy_budget(trajectory: Trajectory) -> EnergyBudgetSummary:
    if trajectory.budget is None:
        raise ValueError("Trajectory carries no energy budget; run it with track_budget=True")
    residual = trajectory.budget.residual
    if residual.size == 0:
        return EnergyBudgetSummary(steps=0, max_abs_residual=0.0, cumulative_residual=0.0)
    return EnergyBudgetSummary(
        steps=int(residual.size),
        max_abs_residual=float(np.max(np.abs(residual))),
        cumulative_residual=float(np.sum(residual)),
    )


# ---------------------------------------------------------------------------------------------------------------------
# Deterministic oracles


def _barenblatt_scales(m: float, t: float, t0: float) -> Tuple[float, float, float]:
    if not m > 1.0:
        raise ValueError(f"Barenblatt profile needs m > 1, got {m}")
    if not t0 > 0.0 or t + t0 <= 0.0:
        raise ValueError(f"Barenblatt profile needs t0 > 0 and t + t0 > 0, got t={t}, t0={t0}")
    alpha = 1.0 / (m + 1.0)
    kappa = (m - 1.0) * alpha / (2.0 * m)
    return alpha, kappa, t + t0


def barenblatt_support(m: float, t: float, t0: float, x0: float, mass_param: float) -> Tuple[float, float]:
    alpha, kappa, s = _barenblatt_scales(m, t, t0)
    half_width = math.sqrt(mass_param / kappa) * s**alpha
    return x0 - half_width, x0 + half_width


def barenblatt_profile(m: float, t: float, t0: float, x0: float, mass_param: float, x: np.ndarray) -> np.ndarray:
    """(t+t0)^(-alpha) (C - kappa (x - x0)^2 (t+t0)^(-2 alpha))_+^(1/(m-1)).

    Here alpha = 1/(m+1) and kappa = (m-1) alpha/(2m).
    """
    alpha, kappa, s = _barenblatt_scales(m, t, t0)
    core = np.maximum(mass_param - kappa * (np.asarray(x) - x0) ** 2 * s ** (-2.0 * alpha), 0.0)
    return s ** (-alpha) * core ** (1.0 / (m - 1.0))


def barenblatt(m: float, t: float, t0: float, x0: float, mass_param: float, J: int) -> GridFunction:
    """Source-type solution of d_t u = d_xx(u^m) sampled on the grid.

    Raises:
        ValueError: If the support at time t touches the boundary of (0, 1).
    """
    if not mass_param > 0.0:
        raise ValueError(f"Barenblatt mass parameter must be positive, got {mass_param}")
    lo, hi = barenblatt_support(m, t, t0, x0, mass_param)
    if lo <= 0.0 or hi >= 1.0:
        raise ValueError(
            f"Barenblatt support [{lo}, {hi}] at t={t} touches the boundary; the oracle is invalid under Dirichlet"
            " conditions"
        )
    return GridFunction(barenblatt_profile(m, t, t0, x0, mass_param, grid_nodes(J)))


@dataclass(frozen=True)
class ConvergenceRow:
    J: int
    l1_error: float
    steps: int


def barenblatt_convergence(
    m: float,
    grid_sizes: Tuple[int, ...],
    t_end: float,
    t0: float = 0.01,
    x0: float = 0.5,
    mass_param: float = 0.05,
    nu: float = 1e-5,
    safety: float = DEFAULT_SAFETY,
) -> List[ConvergenceRow]:
    """L1 error at t_end of the deterministic solver started from the Barenblatt profile, for each grid size."""
    rows = []
    for J in grid_sizes:
        cfg = SolverConfig(
            m=m,
            nu=nu,
            n_modes=1,
            J=J,
            T=t_end,
            dt_policy=DtPolicy.adaptive(safety=safety, dt_max=1e-3),
            record_times=(t_end,),
        )
        trajectory = run_deterministic(cfg, barenblatt(m, 0.0, t0, x0, mass_param, J))
        error = l1_error(trajectory.final.v, barenblatt(m, t_end, t0, x0, mass_param, J))
        logger.info(f"Barenblatt J={J}: L1 error {error} after {trajectory.final.step_count} steps")
        rows.append(ConvergenceRow(J=J, l1_error=error, steps=trajectory.final.step_count))
    return rows


def linear_mode_error(nu: float, dt: float, steps: int, J: int = 31, k: int = 1) -> float:
    """Relative error of mode k against (1 + nu lambda_k dt)^(-steps) with the nonlinearity switched off."""
    cfg = SolverConfig(
        m=2.0,
        nu=nu,
        n_modes=1,
        J=J,
        T=steps * dt,
        dt_policy=DtPolicy.fixed(dt),
        nonlinear_gain=0.0,
        record_times=(steps * dt,),
    )
    trajectory = run_deterministic(cfg, SpectralCoeffs.basis(J, k))
    exact = (1.0 + nu * eigenvalues(J)[k - 1] * dt) ** (-steps)
    return abs(trajectory.final.vhat.coeffs[k - 1] - exact) / exact


@dataclass(frozen=True)
class ConvergenceStudy:
    barenblatt_rows: Tuple[ConvergenceRow, ...]
    linear_mode_error: float

    def refinement_ratios(self) -> List[float]:
        """Error ratio between consecutive grid sizes; values near 2 mean first-order convergence in 1/J."""
        errors = [row.l1_error for row in self.barenblatt_rows]
        return [coarse / fine if fine > 0.0 else math.inf for coarse, fine in zip(errors, errors[1:])]


def convergence_study(
    m: float = 2.0,
    grid_sizes: Tuple[int, ...] = (127, 255, 511),
    t_end: float = 0.05,
    t0: float = 0.01,
    x0: float = 0.5,
    mass_param: float = 0.05,
    nu: float = 1e-5,
    safety: float = DEFAULT_SAFETY,
    linear_nu: float = 0.5,
    linear_dt: float = 1e-3,
    linear_steps: int = 200,
) -> ConvergenceStudy:
    rows = barenblatt_convergence(m, grid_sizes, t_end, t0, x0, mass_param, nu, safety)
    return ConvergenceStudy(tuple(rows), linear_mode_error(linear_nu, linear_dt, linear_steps))


# ---------------------------------------------------------------------------------------------------------------------
# Initial data


def initial_constant(J: int, amplitude: float) -> GridFunction:
    return GridFunction(np.full(J, float(amplitude)))


def initial_coefficients_power_decay(J: int, decay: float, amplitude: float = 1.0) -> SpectralCoeffs:
    """Coefficients amplitude * k^(-decay); small decay gives distribution-like data in H^gamma, gamma < -1/2."""
    return SpectralCoeffs(amplitude * np.arange(1, J + 1, dtype=np.float64) ** (-decay))


def initial_from_function(J: int, fn: Callable[[np.ndarray], np.ndarray]) -> GridFunction:
    return GridFunction(fn(grid_nodes(J)))


def positivity_violation(state: PathState) -> float:
    return max(0.0, -float(np.min(state.v.values)))


def initial_bump(J: int, center: float = 0.5, width: float = 0.1, mass: float = 1.0) -> GridFunction:
    """Compactly supported cosine bump with the given total mass, zero outside [center - width, center + width]."""
    x = grid_nodes(J)
    profile = np.where(np.abs(x - center) < width, 1.0 + np.cos(np.pi * (x - center) / width), 0.0)
    return GridFunction(mass * profile / (2.0 * width))


__all__ = [
    "DtPolicy",
    "DtPolicyKind",
    "EnergyBudget",
    "EnergyBudgetSummary",
    "PathState",
    "SolverConfig",
    "Trajectory",
    "barenblatt",
    "energy_budget",
    "run_deterministic",
    "run_path",
    "step",
]
