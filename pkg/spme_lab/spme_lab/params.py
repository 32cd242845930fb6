# Copyright (c) 2026 spme_lab contributors. See LICENSE file for more info.

"""
YAML configuration: loading, validation against the documented defaults and construction of the typed
configuration objects of every module.
"""

import copy
import os
from dataclasses import dataclass
from typing import Any, Dict, Literal, Optional, Tuple, Union

import numpy as np
import yaml

from spme_lab.estimators import EnsembleConfig
from spme_lab.particles import Kernel, KernelKind, OffspringLaw, ParticleConfig
from spme_lab.sigma import SigmaKind, SigmaSpec
from spme_lab.solver import (
    DtPolicy,
    DtPolicyKind,
    SolverConfig,
    barenblatt,
    initial_bump,
    initial_coefficients_power_decay,
    initial_constant,
)
from spme_lab.spectral import GridFunction, SpectralCoeffs

COLOR_END = "\33[0m"
COLOR_YELLOW = "\33[33m"

ROOT_KEY: Literal["spme_lab"] = "spme_lab"
_SOLVER: Literal["solver"] = "solver"
_INITIAL: Literal["initial"] = "initial"
_SIGMA: Literal["sigma"] = "sigma"
_NOISE: Literal["noise"] = "noise"
_ENSEMBLE: Literal["ensemble"] = "ensemble"
_PARTICLES: Literal["particles"] = "particles"
_VERIFY: Literal["verify"] = "verify"
_CONVERGENCE: Literal["convergence"] = "convergence"
_OUTPUT: Literal["output"] = "output"

ENV_MASTER_SEED = "SPME_MASTER_SEED"
ENV_WORKERS = "SPME_WORKERS"

DEFAULTS_YAML = """\
# Default configuration. Every key below may be overridden in a config file passed with --config;
# keys not listed here are rejected.
spme_lab:
  solver:
    m: 2.0                  # porous medium exponent, m > 1
    nu: 0.01                # viscosity, in (0, 1]
    mode_coupled_viscosity: false  # true sets nu = 1 / n_modes
    n_modes: 32             # noise truncation n, at most J
    J: 127                  # interior grid points; J + 1 a power of two uses the fast transform
    T: 0.2                  # horizon
    dt_policy: adaptive     # fixed | adaptive
    dt: 1.0e-5              # step of the fixed policy
    safety: 0.15            # adaptive: dt <= safety dx^2 / (nu + gain m max|v|^(m-1))
    dt_max: 1.0e-4
    dt_min: 1.0e-12
    nonlinear_gain: 1.0     # factor on the porous medium drift, in [0, 1]
    gamma_track: -0.75      # order of the tracked H^gamma norms
    record_times: []        # explicit record times; empty means record_count uniform times on [0, T]
    record_count: 21
    oversampling: 2         # fine-grid factor for pointwise nonlinearities
    blowup_guard: 1.0e+8    # max|v| beyond which a path is flagged as blown up
    track_budget: true      # record the per-step energy budget
  initial:
    kind: bump              # bump | constant | power_decay | barenblatt
    amplitude: 1.0          # constant: value; power_decay: coefficient scale
    center: 0.5             # bump / barenblatt centre
    width: 0.1              # bump half-width
    mass: 1.0               # bump total mass
    decay: 1.0              # power_decay: coefficients amplitude * k^(-decay)
    t0: 0.01                # barenblatt time shift
    mass_param: 0.05        # barenblatt height constant
  sigma:
    kind: power             # constant | power | sqrt_positive_part | table
    amplitude: 0.05
    mprime: null            # power exponent; null means (m + 1) / 2
    K: 0.0                  # declared additive growth constant
    delta: null             # declared growth factor; null means |amplitude|
    delta_bar: null         # declared power-Lipschitz constant; null means not declared
    table_r: []
    table_sigma: []
  noise:
    master_seed: 0          # overridden by --seed, then by SPME_MASTER_SEED
  ensemble:
    paths: 64
    workers: 1              # overridden by --workers, then by SPME_WORKERS
    batch_size: 8
    tracked_gammas: [-0.75]
    p_moments: [1.0, 2.0]   # moment orders, each in [0, m + 1]
    decay_window: [0.01, 0.1]
    holder_epsilon: 0.3
  particles:
    N: 1000
    epsilon: 0.05           # kernel width
    kernel: epanechnikov    # epanechnikov | triangle | table
    kernel_table_z: []
    kernel_table_v: []
    branch_rate: null       # null means N * base_rate (sped-up clock)
    base_rate: 1.0
    offspring: [0.5, 0.0, 0.5]  # P(k offspring), mean must be exactly 1
    dt: 1.0e-4
    T: 0.1
    mass: 0.05              # initial mass of the SPDE side, scales the interaction; particles weigh 1 / N
    bins: 64
    bandwidth: null         # kernel-density bandwidth; null keeps the plain histogram
    interaction: true
    runs: 8
    record_count: 5
    compare_spde: true      # run the matching SPDE ensemble (m = 2, gain 1/2, sigma = c sqrt(u+))
    spde_J: 127
    spde_paths: 8
    spde_noise_amplitude: 0.0   # c; 0 compares against the deterministic equation
    spde_nu: 1.0e-4
  verify:
    suites: [krylov, stroock_varopoulos, pointwise, power_regularity, energy_gap, sigma, coercivity,
             monotonicity, interpolation]
    samples: 20             # random grid functions per parameter point
    J: 255
    oversampling: 4
    m_values: [1.5, 2.0, 3.0, 5.0]
    betas: [0.05, 0.25, 0.45]
    gammas: [-0.6, -0.75, -1.0]
    pointwise_pairs: 100000
    pointwise_bound: 10.0
    krylov_terms: 10000
  convergence:
    m: 2.0
    grid_sizes: [127, 255, 511]
    t_end: 0.05
    t0: 0.01
    x0: 0.5
    mass_param: 0.05
    nu: 1.0e-5
    safety: 0.15
    linear_nu: 0.5
    linear_dt: 1.0e-3
    linear_steps: 200
  output:
    snapshots: false        # write binary field snapshots next to the CSV files
"""


class ConfigError(ValueError):
    pass


def default_param_dict() -> Dict[str, Dict[str, Any]]:
    return yaml.safe_load(DEFAULTS_YAML)[ROOT_KEY]


def merge_params(overrides: Dict[str, Any]) -> Dict[str, Dict[str, Any]]:
    """Overlay a parsed `spme_lab` mapping on the defaults.

    Raises:
        ConfigError: On unknown sections or keys, or a section that is not a mapping.
    """
    params = default_param_dict()
    for section, values in (overrides or {}).items():
        if section not in params:
            raise ConfigError(f"Unknown config section '{section}'; valid sections are {sorted(params)}")
        if values is None:
            continue
        if not isinstance(values, dict):
            raise ConfigError(f"Config section '{section}' must be a mapping, got {type(values).__name__}")
        unknown = sorted(set(values) - set(params[section]))
        if unknown:
            raise ConfigError(f"Unknown keys {unknown} in config section '{section}'")
        params[section].update(copy.deepcopy(values))
    return params


def get_param_dict(config_file_path: Optional[str]) -> Dict[str, Dict[str, Any]]:
    """Get the merged parameter sections from a config yaml file.

    Args:
        config_file_path (str): Path to the config yaml. None or empty means defaults only.

    Raises:
        YAMLError: If the yaml can't be parsed
        ConfigError: If the yaml file doesn't follow the `spme_lab` layout or holds unknown keys
        OSError: If the file can't be read

    Returns:
        dict[str, dict[str, Any]]: section name -> key -> value, defaults filled in.
    """
    if not config_file_path:
        return default_param_dict()
    with open(config_file_path, "r") as config_yaml:
        try:
            config_dict = yaml.safe_load(config_yaml)
        except yaml.YAMLError as exc:
            raise yaml.YAMLError(f"Config file {config_file_path} couldn't be parsed: failed with '{exc}'")
    if not isinstance(config_dict, dict) or ROOT_KEY not in config_dict:
        raise ConfigError(
            f"Config file {config_file_path} does not follow the expected layout! Make sure it starts with"
            f" '{ROOT_KEY}:' followed by its sections."
        )
    extra = sorted(set(config_dict) - {ROOT_KEY})
    if extra:
        raise ConfigError(f"Config file {config_file_path} has unknown top-level keys {extra}")
    return merge_params(config_dict[ROOT_KEY])


def get_from_env_and_fall_back(env_name: str, flag_value: Any, param_value: Any) -> Any:
    """CLI flag, else environment variable, else the configured value, converted to the configured type."""
    if flag_value is not None:
        return flag_value
    value = os.environ.get(env_name)
    if value is None:
        return param_value
    print(f"{COLOR_YELLOW}WARNING: Using {env_name}={value} from the environment, not the config file.{COLOR_END}")
    try:
        return type(param_value)(value)
    except ValueError:
        raise ConfigError(f"Environment variable {env_name}={value!r} is not a valid {type(param_value).__name__}")


def resolve_master_seed(params: Dict[str, Dict[str, Any]], seed_flag: Optional[int] = None) -> int:
    seed = get_from_env_and_fall_back(ENV_MASTER_SEED, seed_flag, int(params[_NOISE]["master_seed"]))
    if not 0 <= seed < 1 << 64:
        raise ConfigError(f"master_seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def resolve_workers(params: Dict[str, Dict[str, Any]], workers_flag: Optional[int] = None) -> int:
    workers = get_from_env_and_fall_back(ENV_WORKERS, workers_flag, int(params[_ENSEMBLE]["workers"]))
    if workers < 1:
        raise ConfigError(f"workers must be a positive integer, got {workers}")
    return workers


def _wrap(section: str, fn: Any, *args: Any, **kwargs: Any) -> Any:
    try:
        return fn(*args, **kwargs)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"Invalid values in config section '{section}': {exc}")


def _uniform_times(T: float, count: int) -> Tuple[float, ...]:
    if count < 1:
        raise ValueError(f"record_count must be positive, got {count}")
    if count == 1:
        return (T,)
    return tuple(float(t) for t in np.linspace(0.0, T, count))


def build_sigma(params: Dict[str, Dict[str, Any]]) -> SigmaSpec:
    section = params[_SIGMA]
    m = float(params[_SOLVER]["m"])

    def build() -> SigmaSpec:
        kind = SigmaKind(section["kind"])
        if kind == SigmaKind.CONSTANT:
            return SigmaSpec.constant(float(section["amplitude"]))
        if kind == SigmaKind.POWER:
            mprime = 0.5 * (m + 1.0) if section["mprime"] is None else float(section["mprime"])
            return SigmaSpec.power(
                float(section["amplitude"]),
                mprime,
                K=float(section["K"]),
                delta=section["delta"],
                delta_bar=section["delta_bar"],
            )
        if kind == SigmaKind.SQRT_POSITIVE_PART:
            delta = 0.0 if section["delta"] is None else float(section["delta"])
            return SigmaSpec.sqrt_positive_part(float(section["amplitude"]), K=float(section["K"]), delta=delta)
        delta = 0.0 if section["delta"] is None else float(section["delta"])
        return SigmaSpec.table(
            section["table_r"],
            section["table_sigma"],
            K=float(section["K"]),
            delta=delta,
            delta_bar=section["delta_bar"],
        )

    return _wrap(_SIGMA, build)


def build_solver_config(params: Dict[str, Dict[str, Any]], master_seed: int = 0) -> SolverConfig:
    section = params[_SOLVER]

    def build() -> SolverConfig:
        kind = DtPolicyKind(section["dt_policy"])
        if kind == DtPolicyKind.FIXED:
            policy = DtPolicy.fixed(float(section["dt"]))
        else:
            policy = DtPolicy.adaptive(float(section["safety"]), float(section["dt_max"]), float(section["dt_min"]))
        T = float(section["T"])
        record_times = tuple(float(t) for t in section["record_times"])
        if not record_times:
            record_times = _uniform_times(T, int(section["record_count"]))
        n_modes = int(section["n_modes"])
        nu = 1.0 / n_modes if section["mode_coupled_viscosity"] else float(section["nu"])
        return SolverConfig(
            m=float(section["m"]),
            nu=nu,
            n_modes=n_modes,
            J=int(section["J"]),
            T=T,
            dt_policy=policy,
            nonlinear_gain=float(section["nonlinear_gain"]),
            sigma=build_sigma(params),
            gamma_track=float(section["gamma_track"]),
            record_times=record_times,
            oversampling=int(section["oversampling"]),
            blowup_guard=float(section["blowup_guard"]),
            master_seed=master_seed,
            track_budget=bool(section["track_budget"]),
        )

    return _wrap(_SOLVER, build)


def build_initial(params: Dict[str, Dict[str, Any]], J: Optional[int] = None) -> Union[GridFunction, SpectralCoeffs]:
    section = params[_INITIAL]
    J = int(params[_SOLVER]["J"]) if J is None else J
    m = float(params[_SOLVER]["m"])

    def build() -> Union[GridFunction, SpectralCoeffs]:
        kind = section["kind"]
        if kind == "bump":
            return initial_bump(J, float(section["center"]), float(section["width"]), float(section["mass"]))
        if kind == "constant":
            return initial_constant(J, float(section["amplitude"]))
        if kind == "power_decay":
            return initial_coefficients_power_decay(J, float(section["decay"]), float(section["amplitude"]))
        if kind == "barenblatt":
            return barenblatt(m, 0.0, float(section["t0"]), float(section["center"]), float(section["mass_param"]), J)
        raise ConfigError(f"Unknown initial kind '{kind}'; valid kinds are bump, constant, power_decay, barenblatt")

    return _wrap(_INITIAL, build)


def build_ensemble_config(params: Dict[str, Dict[str, Any]], master_seed: int = 0, workers: int = 1) -> EnsembleConfig:
    section = params[_ENSEMBLE]
    solver = build_solver_config(params, master_seed)
    return _wrap(
        _ENSEMBLE,
        EnsembleConfig,
        paths=int(section["paths"]),
        solver=solver,
        initial=build_initial(params),
        master_seed=master_seed,
        tracked_gammas=tuple(float(g) for g in section["tracked_gammas"]),
        p_moments=tuple(float(p) for p in section["p_moments"]),
        workers=workers,
        batch_size=int(section["batch_size"]),
    )


def build_particle_config(params: Dict[str, Dict[str, Any]], master_seed: int = 0) -> ParticleConfig:
    section = params[_PARTICLES]

    def build() -> ParticleConfig:
        kernel = Kernel(
            KernelKind(section["kernel"]),
            tuple(float(z) for z in section["kernel_table_z"]),
            tuple(float(v) for v in section["kernel_table_v"]),
        )
        T = float(section["T"])
        return ParticleConfig(
            N=int(section["N"]),
            epsilon=float(section["epsilon"]),
            kernel=kernel,
            branch_rate=None if section["branch_rate"] is None else float(section["branch_rate"]),
            base_rate=float(section["base_rate"]),
            offspring_law=OffspringLaw(tuple(float(p) for p in section["offspring"])),
            dt=float(section["dt"]),
            T=T,
            seed=master_seed,
            mass=float(section["mass"]),
            record_times=_uniform_times(T, int(section["record_count"])),
            bins=int(section["bins"]),
            interaction=bool(section["interaction"]),
            bandwidth=None if section["bandwidth"] is None else float(section["bandwidth"]),
        )

    return _wrap(_PARTICLES, build)


def build_particle_spde_config(params: Dict[str, Dict[str, Any]], master_seed: int = 0) -> SolverConfig:
    """SPDE counterpart of the particle system: m = 2, drift gain 1/2, sigma = c sqrt(u+), same record times."""
    particles = build_particle_config(params, master_seed)
    section = params[_PARTICLES]
    amplitude = float(section["spde_noise_amplitude"])
    sigma = SigmaSpec.sqrt_positive_part(amplitude) if amplitude else SigmaSpec.zero()
    J = int(section["spde_J"])
    return _wrap(
        _PARTICLES,
        SolverConfig,
        m=2.0,
        nu=float(section["spde_nu"]),
        n_modes=min(J, int(params[_SOLVER]["n_modes"])),
        J=J,
        T=particles.T,
        dt_policy=DtPolicy.adaptive(),
        nonlinear_gain=0.5,
        sigma=sigma,
        record_times=particles.record_times,
        master_seed=master_seed,
    )


VERIFY_SUITES = (
    "krylov",
    "stroock_varopoulos",
    "pointwise",
    "power_regularity",
    "energy_gap",
    "sigma",
    "coercivity",
    "monotonicity",
    "interpolation",
)


@dataclass(frozen=True)
class VerifySettings:
    suites: Tuple[str, ...]
    samples: int
    J: int
    oversampling: int
    m_values: Tuple[float, ...]
    betas: Tuple[float, ...]
    gammas: Tuple[float, ...]
    pointwise_pairs: int
    pointwise_bound: float
    krylov_terms: int
    seed: int = 0

    def __post_init__(self) -> None:
        unknown = sorted(set(self.suites) - set(VERIFY_SUITES))
        if unknown:
            raise ValueError(f"Unknown verify suites {unknown}, choose from {list(VERIFY_SUITES)}")


def build_verify_settings(params: Dict[str, Dict[str, Any]], master_seed: int = 0) -> VerifySettings:
    section = params[_VERIFY]
    return _wrap(
        _VERIFY,
        VerifySettings,
        suites=tuple(str(s) for s in section["suites"]),
        samples=int(section["samples"]),
        J=int(section["J"]),
        oversampling=int(section["oversampling"]),
        m_values=tuple(float(m) for m in section["m_values"]),
        betas=tuple(float(b) for b in section["betas"]),
        gammas=tuple(float(g) for g in section["gammas"]),
        pointwise_pairs=int(section["pointwise_pairs"]),
        pointwise_bound=float(section["pointwise_bound"]),
        krylov_terms=int(section["krylov_terms"]),
        seed=master_seed,
    )


def build_convergence_kwargs(params: Dict[str, Dict[str, Any]]) -> Dict[str, Any]:
    section = params[_CONVERGENCE]
    kwargs: Dict[str, Any] = {key: float(value) for key, value in section.items() if key != "grid_sizes"}
    kwargs["grid_sizes"] = tuple(int(J) for J in section["grid_sizes"])
    kwargs["linear_steps"] = int(section["linear_steps"])
    if not kwargs["grid_sizes"]:
        raise ConfigError("Config section 'convergence' needs at least one grid size")
    return kwargs


@dataclass(frozen=True)
class AnalysisSettings:
    decay_window: Tuple[float, float]
    holder_epsilon: float


def build_analysis_settings(params: Dict[str, Dict[str, Any]]) -> AnalysisSettings:
    section = params[_ENSEMBLE]
    window = tuple(float(t) for t in section["decay_window"])
    if len(window) != 2:
        raise ConfigError(f"decay_window must hold two times, got {section['decay_window']}")
    return AnalysisSettings(decay_window=(window[0], window[1]), holder_epsilon=float(section["holder_epsilon"]))


@dataclass(frozen=True)
class ParticleRunSettings:
    runs: int
    compare_spde: bool
    spde_paths: int


def build_particle_run_settings(params: Dict[str, Dict[str, Any]]) -> ParticleRunSettings:
    section = params[_PARTICLES]
    runs, spde_paths = int(section["runs"]), int(section["spde_paths"])
    if runs < 1 or spde_paths < 1:
        raise ConfigError(f"particles.runs and particles.spde_paths must be positive, got {runs} and {spde_paths}")
    return ParticleRunSettings(runs, bool(section["compare_spde"]), spde_paths)


def snapshots_enabled(params: Dict[str, Dict[str, Any]]) -> bool:
    return bool(params[_OUTPUT]["snapshots"])
