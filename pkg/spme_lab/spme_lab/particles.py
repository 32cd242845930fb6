# Copyright (c) 2026 spme_lab contributors. See LICENSE file for more info.

"""
Interacting branching particle system whose mean-field limit, as the kernel width shrinks, is the porous medium
equation with m = 2, drift coefficient 1/2 and noise c sqrt(u).

The empirical measure weighs every particle 1/N. A particle moves with velocity -(mass/N) sum_j d_x V_eps(Y_i - Y_j),
where V_eps(z) = V(z / eps) / eps, so the normalized measure tracks u / mass for the solution u of total mass `mass`.
Independently, at rate `branch_rate`, a particle dies and leaves k offspring at its position, k drawn from a critical
offspring law.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from spme_lab.estimators import FunctionalStats, describe
from spme_lab.solver import Trajectory, total_mass
from spme_lab.spectral import GridFunction, evaluate_series

logger = logging.getLogger(__name__)

MAX_BRANCH_PROBABILITY = 0.1
KERNEL_MASS_TOL = 1e-10
OFFSPRING_MEAN_TOL = 1e-12
_TABLE_CHUNK = 2048


class KernelKind(Enum):
    EPANECHNIKOV = "epanechnikov"
    TRIANGLE = "triangle"
    TABLE = "table"

    def __repr__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Kernel:
    """Interaction kernel V supported in [-1, 1], nonnegative with unit integral.

    epanechnikov: V(z) = 3/4 (1 - z^2)_+
    triangle: V(z) = (1 - |z|)_+
    table: piecewise-linear through (table_z, table_v); table_z must span exactly [-1, 1]
    """

    kind: KernelKind = KernelKind.EPANECHNIKOV
    table_z: Tuple[float, ...] = ()
    table_v: Tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if not isinstance(self.kind, KernelKind):
            object.__setattr__(self, "kind", KernelKind(self.kind))
        if self.kind == KernelKind.TABLE:
            self._check_table()

    def _check_table(self) -> None:
        z = np.asarray(self.table_z, dtype=np.float64)
        v = np.asarray(self.table_v, dtype=np.float64)
        if z.size < 3 or z.size != v.size:
            raise ValueError(f"Table kernel needs matching nodes and values, at least three, got {z.size} and {v.size}")
        if z[0] != -1.0 or z[-1] != 1.0 or np.any(np.diff(z) <= 0.0):
            raise ValueError("Table kernel nodes must increase strictly from -1 to 1")
        if np.any(v < 0.0) or v[0] != 0.0 or v[-1] != 0.0:
            raise ValueError("Table kernel values must be nonnegative and vanish at -1 and 1")
        mass = float(np.sum(0.5 * (v[1:] + v[:-1]) * np.diff(z)))
        if abs(mass - 1.0) > KERNEL_MASS_TOL:
            raise ValueError(f"Table kernel must integrate to one, got {mass}")

    def value(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        if self.kind == KernelKind.EPANECHNIKOV:
            return 0.75 * np.maximum(1.0 - z**2, 0.0)
        if self.kind == KernelKind.TRIANGLE:
            return np.maximum(1.0 - np.abs(z), 0.0)
        return np.interp(z, self.table_z, self.table_v, left=0.0, right=0.0)

    def derivative(self, z: np.ndarray) -> np.ndarray:
        """V'(z), taken as 0 at kinks of even kernels and outside the support."""
        z = np.asarray(z, dtype=np.float64)
        inside = np.abs(z) < 1.0
        if self.kind == KernelKind.EPANECHNIKOV:
            return np.where(inside, -1.5 * z, 0.0)
        if self.kind == KernelKind.TRIANGLE:
            return np.where(inside, -np.sign(z), 0.0)
        nodes = np.asarray(self.table_z)
        slopes = np.diff(np.asarray(self.table_v)) / np.diff(nodes)
        segment = np.clip(np.searchsorted(nodes, z, side="right") - 1, 0, slopes.size - 1)
        result = np.where(inside, slopes[segment], 0.0)
        # even tables: a node at 0 is a kink
        return np.where(z == 0.0, 0.0, result)

    def integral(self, points: int = 20001) -> float:
        z = np.linspace(-1.0, 1.0, points)
        values = self.value(z)
        return float(np.sum(0.5 * (values[1:] + values[:-1]) * np.diff(z)))


@dataclass(frozen=True)
class OffspringLaw:
    """Distribution of the offspring count: probabilities[k] = P(k offspring)."""

    probabilities: Tuple[float, ...] = (0.5, 0.0, 0.5)

    def __post_init__(self) -> None:
        p = np.asarray(self.probabilities, dtype=np.float64)
        if p.size < 2 or np.any(p < 0.0) or not np.all(np.isfinite(p)):
            raise ValueError(f"Offspring law needs finite nonnegative probabilities, got {self.probabilities}")
        if abs(float(p.sum()) - 1.0) > OFFSPRING_MEAN_TOL:
            raise ValueError(f"Offspring probabilities must sum to one, got {float(p.sum())}")
        if abs(self.mean - 1.0) > OFFSPRING_MEAN_TOL:
            raise ValueError(f"Branching must be critical: offspring mean must be 1, got {self.mean}")

    @classmethod
    def binary(cls) -> "OffspringLaw":
        return cls((0.5, 0.0, 0.5))

    @classmethod
    def identity(cls) -> "OffspringLaw":
        return cls((0.0, 1.0))

    @property
    def mean(self) -> float:
        return float(np.dot(np.arange(len(self.probabilities)), self.probabilities))

    @property
    def variance(self) -> float:
        k = np.arange(len(self.probabilities))
        return float(np.dot(k**2, self.probabilities)) - self.mean**2


@dataclass(frozen=True)
class ParticleConfig:
    """Particle system parameters.

    `mass` scales the pairwise interaction only; the empirical measure stays normalized with weight 1 / N.

    The branching rate is expressed in the clock of the simulation. The sped-up clock in which each particle
    branches at rate N corresponds to branch_rate = N * base_rate, which is the value used when branch_rate is None.
    """

    N: int = 1000
    epsilon: float = 0.05
    kernel: Kernel = Kernel()
    branch_rate: Optional[float] = None
    base_rate: float = 1.0
    offspring_law: OffspringLaw = OffspringLaw()
    dt: float = 1e-4
    T: float = 0.1
    seed: int = 0
    mass: float = 1.0
    record_times: Tuple[float, ...] = ()
    bins: int = 64
    domain: Tuple[float, float] = (0.0, 1.0)
    interaction: bool = True
    bandwidth: Optional[float] = None

    def __post_init__(self) -> None:
        if self.N < 1:
            raise ValueError(f"Particle count N must be positive, got {self.N}")
        for name in ("epsilon", "dt", "T", "mass"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"ParticleConfig.{name} must be finite and positive, got {value}")
        if self.dt > self.T:
            raise ValueError(f"Particle time step {self.dt} exceeds the horizon {self.T}")
        if self.rate < 0.0:
            raise ValueError(f"Branching rate must be nonnegative, got {self.rate}")
        if self.rate * self.dt > MAX_BRANCH_PROBABILITY * (1.0 + 1e-12):
            raise ValueError(
                f"Branching probability per step rate*dt = {self.rate * self.dt} exceeds {MAX_BRANCH_PROBABILITY};"
                " reduce dt or branch_rate"
            )
        if self.bins < 1:
            raise ValueError(f"Histogram needs at least one bin, got {self.bins}")
        if self.bandwidth is not None and not self.bandwidth > 0.0:
            raise ValueError(f"Kernel density bandwidth must be positive, got {self.bandwidth}")
        if not self.domain[0] < self.domain[1]:
            raise ValueError(f"Histogram domain must be an increasing pair, got {self.domain}")
        times = tuple(float(t) for t in self.record_times) or (0.0, self.T)
        if any(b <= a for a, b in zip(times, times[1:])) or times[0] < 0.0 or times[-1] > self.T * (1.0 + 1e-12):
            raise ValueError(f"record_times must increase strictly inside [0, T], got {times}")
        object.__setattr__(self, "record_times", times)

    @property
    def rate(self) -> float:
        return self.N * self.base_rate if self.branch_rate is None else self.branch_rate

    @property
    def weight(self) -> float:
        return 1.0 / self.N

    @property
    def interaction_weight(self) -> float:
        return self.mass / self.N


@dataclass(frozen=True, eq=False)
class ParticleState:
    positions: np.ndarray
    t: float = 0.0
    step_count: int = 0

    def __post_init__(self) -> None:
        positions = np.asarray(self.positions, dtype=np.float64).ravel()
        if not np.all(np.isfinite(positions)):
            raise ValueError("Particle positions must all be finite")
        object.__setattr__(self, "positions", positions)

    @property
    def alive_count(self) -> int:
        return int(self.positions.size)


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """Histogram of the weighted empirical measure. Particles outside the domain are counted into the end bins."""

    edges: np.ndarray
    counts: np.ndarray
    weight: float
    outside_count: int = 0
    bandwidth: Optional[float] = None
    smoothed: Optional[np.ndarray] = None

    @property
    def masses(self) -> np.ndarray:
        return self.counts * self.weight

    @property
    def total_mass(self) -> float:
        return float(self.counts.sum()) * self.weight

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def density(self) -> np.ndarray:
        """Histogram density (mass per unit length), or the kernel-density estimate when a bandwidth was given."""
        if self.smoothed is not None:
            return self.smoothed
        return self.masses / np.diff(self.edges)


def _window_bounds(sorted_positions: np.ndarray, width: float) -> Tuple[np.ndarray, np.ndarray]:
    """Index range [lo, hi) of partners with |Y_j - Y_i| < width for each sorted Y_i."""
    lo = np.searchsorted(sorted_positions, sorted_positions - width, side="right")
    hi = np.searchsorted(sorted_positions, sorted_positions + width, side="left")
    return lo, hi


def _epanechnikov_velocity(s: np.ndarray, eps: float, weight: float) -> np.ndarray:
    lo, hi = _window_bounds(s, eps)
    prefix = np.concatenate(([0.0], np.cumsum(s)))
    window_sum = prefix[hi] - prefix[lo]
    return 1.5 * weight / eps**3 * ((hi - lo) * s - window_sum)


def _triangle_velocity(s: np.ndarray, eps: float, weight: float) -> np.ndarray:
    lo, hi = _window_bounds(s, eps)
    below = np.searchsorted(s, s, side="left") - lo
    above = hi - np.searchsorted(s, s, side="right")
    return weight / eps**2 * (below - above).astype(np.float64)


def _table_velocity(s: np.ndarray, eps: float, weight: float, kernel: Kernel) -> np.ndarray:
    lo, hi = _window_bounds(s, eps)
    velocity = np.empty_like(s)
    for start in range(0, s.size, _TABLE_CHUNK):
        stop = min(start + _TABLE_CHUNK, s.size)
        partners = s[lo[start] : hi[stop - 1]]
        d = s[start:stop, None] - partners[None, :]
        velocity[start:stop] = -weight / eps**2 * kernel.derivative(d / eps).sum(axis=1)
    return velocity


def drift_velocity(positions: np.ndarray, cfg: ParticleConfig) -> np.ndarray:
    """-(mass/N) sum_j d_x V_eps(Y_i - Y_j) for every particle, by a sweep over sorted positions."""
    if positions.size == 0 or not cfg.interaction:
        return np.zeros_like(positions)
    order = np.argsort(positions, kind="stable")
    shift = float(np.mean(positions))
    s = positions[order] - shift
    if cfg.kernel.kind == KernelKind.EPANECHNIKOV:
        sorted_velocity = _epanechnikov_velocity(s, cfg.epsilon, cfg.interaction_weight)
    elif cfg.kernel.kind == KernelKind.TRIANGLE:
        sorted_velocity = _triangle_velocity(s, cfg.epsilon, cfg.interaction_weight)
    else:
        sorted_velocity = _table_velocity(s, cfg.epsilon, cfg.interaction_weight, cfg.kernel)
    velocity = np.empty_like(positions)
    velocity[order] = sorted_velocity
    return velocity


def drift_step(state: ParticleState, cfg: ParticleConfig) -> ParticleState:
    """Forward Euler step of the pairwise interaction; warns when a particle moves more than eps/4."""
    displacement = cfg.dt * drift_velocity(state.positions, cfg)
    if displacement.size and float(np.max(np.abs(displacement))) > 0.25 * cfg.epsilon:
        logger.warning(
            f"Drift under-resolved at t = {state.t}: max displacement {float(np.max(np.abs(displacement)))} exceeds"
            f" eps/4 = {0.25 * cfg.epsilon}"
        )
    return ParticleState(state.positions + displacement, state.t, state.step_count)


def branch_step(state: ParticleState, cfg: ParticleConfig, rng: np.random.Generator) -> ParticleState:
    """Tau-leap critical branching: each particle triggers with probability rate * dt and is replaced by k ~ law.

    Raises:
        ValueError: If rate * dt exceeds 0.1.
    """
    probability = cfg.rate * cfg.dt
    if probability > MAX_BRANCH_PROBABILITY * (1.0 + 1e-12):
        raise ValueError(
            f"Branching probability per step rate*dt = {probability} exceeds {MAX_BRANCH_PROBABILITY}; reduce dt"
        )
    if probability == 0.0 or state.alive_count == 0:
        return state
    triggered = rng.random(state.alive_count) < probability
    copies = np.ones(state.alive_count, dtype=np.int64)
    law = cfg.offspring_law.probabilities
    copies[triggered] = rng.choice(len(law), size=int(np.count_nonzero(triggered)), p=law)
    return ParticleState(np.repeat(state.positions, copies), state.t, state.step_count)


def _kernel_density(positions: np.ndarray, x: np.ndarray, bandwidth: float, weight: float) -> np.ndarray:
    """Epanechnikov kernel density of the weighted measure at the points x, via prefix sums of Y and Y^2."""
    s = np.sort(positions)
    lo = np.searchsorted(s, x - bandwidth, side="right")
    hi = np.searchsorted(s, x + bandwidth, side="left")
    first = np.concatenate(([0.0], np.cumsum(s)))
    second = np.concatenate(([0.0], np.cumsum(s**2)))
    count = (hi - lo).astype(np.float64)
    sum_y = first[hi] - first[lo]
    sum_y2 = second[hi] - second[lo]
    quadratic = count * x**2 - 2.0 * x * sum_y + sum_y2
    return 0.75 * weight / bandwidth * (count - quadratic / bandwidth**2)


def empirical_measure(
    state: ParticleState, cfg: ParticleConfig, bins: Optional[int] = None, bandwidth: Optional[float] = None
) -> EmpiricalMeasure:
    bins = cfg.bins if bins is None else bins
    bandwidth = cfg.bandwidth if bandwidth is None else bandwidth
    if bins < 1:
        raise ValueError(f"Histogram needs at least one bin, got {bins}")
    lo, hi = cfg.domain
    edges = np.linspace(lo, hi, bins + 1)
    outside = int(np.count_nonzero((state.positions < lo) | (state.positions > hi)))
    counts, _ = np.histogram(np.clip(state.positions, lo, hi), bins=edges)
    smoothed = None
    if bandwidth is not None:
        if not bandwidth > 0.0:
            raise ValueError(f"Kernel density bandwidth must be positive, got {bandwidth}")
        smoothed = _kernel_density(state.positions, 0.5 * (edges[1:] + edges[:-1]), bandwidth, cfg.weight)
    return EmpiricalMeasure(edges, counts, cfg.weight, outside, bandwidth, smoothed)


def sample_initial_positions(profile: GridFunction, N: int, rng: np.random.Generator) -> np.ndarray:
    """N positions drawn from the density proportional to the positive part of a grid profile.

    The profile is extended by zero at x = 0 and x = 1 and inverted through its piecewise-linear cumulative mass.
    """
    if N < 0:
        raise ValueError(f"Cannot sample a negative number of particles, got {N}")
    x = np.concatenate(([0.0], profile.nodes, [1.0]))
    density = np.concatenate(([0.0], np.maximum(profile.values, 0.0), [0.0]))
    cdf = np.concatenate(([0.0], np.cumsum(0.5 * (density[1:] + density[:-1]) * np.diff(x))))
    if N and cdf[-1] <= 0.0:
        raise ValueError("Cannot sample particles from a profile without positive mass")
    return np.interp(rng.random(N) * cdf[-1], cdf, x)


def particle_rng(seed: int, run_index: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed + (run_index << 64)))


@dataclass
class ParticleRun:
    times: np.ndarray
    population: np.ndarray
    total_mass: np.ndarray
    center_of_mass: np.ndarray
    second_moment: np.ndarray
    measures: List[EmpiricalMeasure] = field(default_factory=list)
    final: Optional[ParticleState] = None

    def rows(self) -> List[Tuple[float, int, float, float, float]]:
        """(t, population, total_mass, center_of_mass, second_moment) per record time."""
        return [
            (float(t), int(p), float(mass), float(com), float(m2))
            for t, p, mass, com, m2 in zip(
                self.times, self.population, self.total_mass, self.center_of_mass, self.second_moment
            )
        ]


class ParticleSimulator:
    """Runs one realization of the particle system and records it at the configured times."""

    def __init__(self, cfg: ParticleConfig, rng: np.random.Generator) -> None:
        self.cfg = cfg
        self.rng = rng
        self._logger = logging.getLogger(f"{__name__}.{type(self).__name__}")

    def _observe(self, state: ParticleState, run: ParticleRun, index: int) -> None:
        cfg = self.cfg
        positions = state.positions
        run.population[index] = state.alive_count
        run.total_mass[index] = state.alive_count * cfg.weight
        run.center_of_mass[index] = float(np.mean(positions)) if positions.size else math.nan
        run.second_moment[index] = cfg.weight * float(np.sum(positions**2))
        run.measures.append(empirical_measure(state, cfg))

    def run(self, initial_positions: np.ndarray) -> ParticleRun:
        cfg = self.cfg
        n = len(cfg.record_times)
        run = ParticleRun(
            times=np.array(cfg.record_times),
            population=np.zeros(n, dtype=np.int64),
            total_mass=np.zeros(n),
            center_of_mass=np.zeros(n),
            second_moment=np.zeros(n),
        )
        state = ParticleState(initial_positions)
        for index, target in enumerate(cfg.record_times):
            target_step = round(target / cfg.dt)
            while state.step_count < target_step:
                state = drift_step(state, cfg)
                state = branch_step(state, cfg, self.rng)
                step_count = state.step_count + 1
                state = ParticleState(state.positions, step_count * cfg.dt, step_count)
            self._observe(state, run, index)
        self._logger.debug(f"Particle run finished with {state.alive_count} particles at t = {state.t}")
        run.final = state
        return run


def simulate(
    cfg: ParticleConfig, initial_positions: np.ndarray, rng: Optional[np.random.Generator] = None
) -> ParticleRun:
    return ParticleSimulator(cfg, particle_rng(cfg.seed) if rng is None else rng).run(initial_positions)


def _simulate_run(cfg: ParticleConfig, initial: Union[GridFunction, np.ndarray], run_index: int) -> ParticleRun:
    rng = particle_rng(cfg.seed, run_index)
    if isinstance(initial, GridFunction):
        positions = sample_initial_positions(initial, cfg.N, rng)
    else:
        positions = np.asarray(initial, dtype=np.float64)
    return ParticleSimulator(cfg, rng).run(positions)


def run_particle_ensemble(
    cfg: ParticleConfig, initial: Union[GridFunction, np.ndarray], runs: int, workers: int = 1
) -> List[ParticleRun]:
    """Independent runs 0..runs-1, each with its own generator derived from (seed, run index).

    A GridFunction initial condition is sampled afresh in every run; an array of positions is shared.
    """
    if runs < 1 or workers < 1:
        raise ValueError(f"Need runs >= 1 and workers >= 1, got {runs} and {workers}")
    if workers == 1:
        return [_simulate_run(cfg, initial, index) for index in range(runs)]
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(_simulate_run, [cfg] * runs, [initial] * runs, range(runs)))


# ---------------------------------------------------------------------------------------------------------------------
# Cross-check against the SPDE


@dataclass
class ComparisonReport:
    times: np.ndarray
    particle_mass: FunctionalStats
    spde_mass: FunctionalStats
    particle_second_moment: FunctionalStats
    spde_second_moment: FunctionalStats
    centers: np.ndarray
    particle_profiles: np.ndarray
    spde_profiles: np.ndarray
    l1_distance: np.ndarray
    mass_overlap: List[Optional[bool]]
    second_moment_overlap: List[Optional[bool]]
    discrepancies: List[str] = field(default_factory=list)
    first_exit_time: Optional[float] = None
    positivity_violation: float = 0.0

    @property
    def consistent(self) -> bool:
        """True when every statistically resolved band comparison overlaps."""
        checks = [flag for flag in self.mass_overlap + self.second_moment_overlap if flag is not None]
        return all(checks)


def _bands_overlap(a: FunctionalStats, b: FunctionalStats, i: int) -> Optional[bool]:
    width_a, width_b = a.half_width[i], b.half_width[i]
    if not (np.isfinite(width_a) and np.isfinite(width_b)) or width_a + width_b == 0.0:
        return None
    return bool(abs(a.mean[i] - b.mean[i]) <= width_a + width_b)


def compare_to_spde(
    particle_runs: Sequence[ParticleRun], spde_trajectories: Sequence[Trajectory], mass: float = 1.0
) -> ComparisonReport:
    """Mean total mass, second moment and density profile of both systems at their common record times.

    The SPDE side is divided by `mass`, the total initial mass of its solution, so both sides describe normalized
    measures.

    Band overlap is asserted only where both sides have finite, nonzero confidence half-widths; elsewhere the gap is
    recorded as a discrepancy.

    Raises:
        ValueError: If either side is empty, the record times differ or mass is not positive.
    """
    if not (math.isfinite(mass) and mass > 0.0):
        raise ValueError(f"Comparison mass must be finite and positive, got {mass}")
    if not particle_runs or not spde_trajectories:
        raise ValueError("Comparison needs at least one particle run and one SPDE trajectory")
    times = particle_runs[0].times
    for trajectory in spde_trajectories:
        if trajectory.blowup_flag or trajectory.times.shape != times.shape or not np.allclose(trajectory.times, times):
            raise ValueError(
                f"Mismatched horizons: particle record times {times.tolist()} vs SPDE times {trajectory.times.tolist()}"
            )
    edges = particle_runs[0].measures[0].edges
    centers = 0.5 * (edges[1:] + edges[:-1])
    p_mass = describe(np.stack([run.total_mass for run in particle_runs]))
    p_second = describe(np.stack([run.second_moment for run in particle_runs]))
    s_mass = describe(np.array([[total_mass(state.v) / mass for state in tr.states] for tr in spde_trajectories]))
    s_second = describe(
        np.array(
            [
                [float(np.sum(state.v.nodes**2 * state.v.values)) / (state.v.J + 1) / mass for state in tr.states]
                for tr in spde_trajectories
            ]
        )
    )
    particle_profiles = np.mean([[measure.density for measure in run.measures] for run in particle_runs], axis=0)
    spde_values = np.mean(
        [[evaluate_series(state.vhat, centers) for state in tr.states] for tr in spde_trajectories], axis=0
    )
    spde_profiles = spde_values / mass
    l1 = np.sum(np.abs(particle_profiles - spde_profiles) * np.diff(edges)[None, :], axis=1)
    report = ComparisonReport(
        times=times,
        particle_mass=p_mass,
        spde_mass=s_mass,
        particle_second_moment=p_second,
        spde_second_moment=s_second,
        centers=centers,
        particle_profiles=particle_profiles,
        spde_profiles=spde_profiles,
        l1_distance=l1,
        mass_overlap=[_bands_overlap(p_mass, s_mass, i) for i in range(times.size)],
        second_moment_overlap=[_bands_overlap(p_second, s_second, i) for i in range(times.size)],
        positivity_violation=max(tr.positivity_violation for tr in spde_trajectories),
    )
    for i, t in enumerate(times):
        if report.mass_overlap[i] is None and p_mass.mean[i] != s_mass.mean[i]:
            report.discrepancies.append(f"t={t!r}: mass {p_mass.mean[i]!r} vs {s_mass.mean[i]!r} (unresolved bands)")
        if report.mass_overlap[i] is False:
            report.discrepancies.append(f"t={t!r}: mass bands do not overlap")
        if report.second_moment_overlap[i] is False:
            report.discrepancies.append(f"t={t!r}: second moment bands do not overlap")
    exits = [
        t for i, t in enumerate(times) if any(run.measures[i].outside_count > 0 for run in particle_runs)
    ]
    report.first_exit_time = float(exits[0]) if exits else None
    if report.discrepancies:
        logger.warning(f"Particle/SPDE comparison recorded {len(report.discrepancies)} discrepancies")
    return report
