# Copyright (c) 2026 spme_lab contributors. See LICENSE file for more info.

"""
Monte Carlo ensembles over solver paths and the statistical reductions built on them: energy functionals with
confidence intervals, decay fits, temporal Hoelder exponents and mixed space-time norms.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import trapezoid

from spme_lab.inequalities import InequalityReport, power_regularity_constant
from spme_lab.solver import SolverConfig, Trajectory, hgamma_sq, run_path
from spme_lab.spectral import (
    GridFunction,
    SpectralCoeffs,
    eigenvalue_powers,
    forward_array,
    signed_power,
    slobodeckij_norm,
)

logger = logging.getLogger(__name__)

CI_Z = 1.96
MIN_HOLDER_LAGS = 4
MIN_HOLDER_TIMES = 64
DEFAULT_DECAY_WINDOW = (0.01, 0.1)
DEFAULT_BATCH_SIZE = 8
LM1_INTEGRAL = "lm1_integral"
POWER_INTEGRAL = "power_integral"


class AllPathsBlewUpError(RuntimeError):
    pass


def hgamma_functional(gamma: float) -> str:
    return f"hgamma_sq[{gamma:g}]"


def sup_moment_functional(gamma: float, p: float) -> str:
    return f"sup_hgamma_pow[{gamma:g},{p:g}]"


@dataclass(frozen=True)
class EnsembleConfig:
    """M independent paths of one solver configuration started from common initial data.

    master_seed overrides the seed carried by the solver configuration.
    """

    paths: int
    solver: SolverConfig
    initial: Union[GridFunction, SpectralCoeffs]
    master_seed: int = 0
    tracked_gammas: Tuple[float, ...] = (-0.75,)
    p_moments: Tuple[float, ...] = (1.0, 2.0)
    workers: int = 1
    batch_size: int = DEFAULT_BATCH_SIZE

    def __post_init__(self) -> None:
        if self.paths < 1:
            raise ValueError(f"An ensemble needs at least one path, got paths={self.paths}")
        if self.workers < 1 or self.batch_size < 1:
            raise ValueError(f"workers and batch_size must be positive, got {self.workers} and {self.batch_size}")
        upper = self.solver.m + 1.0
        for p in self.p_moments:
            if not 0.0 <= p <= upper:
                raise ValueError(f"Moment order p must lie in [0, m+1] = [0, {upper}], got {p}")
        if self.solver.master_seed != self.master_seed:
            object.__setattr__(self, "solver", replace(self.solver, master_seed=self.master_seed))

    @property
    def functionals(self) -> List[str]:
        names = [hgamma_functional(gamma) for gamma in self.tracked_gammas]
        names += [LM1_INTEGRAL, POWER_INTEGRAL]
        names += [sup_moment_functional(gamma, p) for gamma in self.tracked_gammas for p in self.p_moments]
        return names


@dataclass(frozen=True)
class PathSummary:
    path_index: int
    blowup: bool
    values: Dict[str, np.ndarray] = field(default_factory=dict)


@dataclass(frozen=True)
class FunctionalStats:
    mean: np.ndarray
    variance: np.ndarray
    half_width: np.ndarray


@dataclass
class EnsembleEstimate:
    times: np.ndarray
    stats: Dict[str, FunctionalStats]
    path_count: int
    blowup_count: int
    m: float

    def functional(self, name: str) -> FunctionalStats:
        if name not in self.stats:
            raise ValueError(f"Functional {name!r} is not tracked; tracked: {sorted(self.stats)}")
        return self.stats[name]

    def rows(self) -> Iterator[Tuple[float, str, float, float, float, int, int]]:
        """(t, functional, mean, variance, ci_half_width, paths, blowups), functionals in sorted order."""
        for name in sorted(self.stats):
            stats = self.stats[name]
            for i, t in enumerate(self.times):
                yield (
                    float(t),
                    name,
                    float(stats.mean[i]),
                    float(stats.variance[i]),
                    float(stats.half_width[i]),
                    self.path_count,
                    self.blowup_count,
                )


def summarize_path(trajectory: Trajectory, tracked_gammas: Sequence[float], p_moments: Sequence[float]) -> PathSummary:
    if trajectory.blowup_flag:
        return PathSummary(trajectory.path_index, blowup=True)
    values: Dict[str, np.ndarray] = {}
    for gamma in tracked_gammas:
        energy = np.array([hgamma_sq(state, gamma) for state in trajectory.states])
        values[hgamma_functional(gamma)] = energy
        running_sup = np.sqrt(np.maximum.accumulate(energy))
        for p in p_moments:
            values[sup_moment_functional(gamma, p)] = running_sup**p
    values[LM1_INTEGRAL] = trajectory.lm1_integral
    values[POWER_INTEGRAL] = trajectory.power_integral
    return PathSummary(trajectory.path_index, blowup=False, values=values)


def describe(samples: np.ndarray) -> FunctionalStats:
    """Mean, unbiased variance and 95% half-width of each column of an (M, T) sample matrix.

    Columns with identical samples get variance exactly 0. With M = 1 the variance is reported as 0 and the
    half-width as NaN (not applicable).
    """
    samples = np.atleast_2d(samples)
    count = samples.shape[0]
    mean = samples.mean(axis=0)
    if count == 1:
        return FunctionalStats(
            mean=samples[0].copy(), variance=np.zeros_like(mean), half_width=np.full_like(mean, np.nan)
        )
    variance = samples.var(axis=0, ddof=1)
    flat = np.ptp(samples, axis=0) == 0.0
    mean[flat] = samples[0, flat]
    variance[flat] = 0.0
    return FunctionalStats(mean=mean, variance=variance, half_width=CI_Z * np.sqrt(variance / count))


def merge_summaries(
    summaries: Sequence[PathSummary], times: np.ndarray, functionals: Sequence[str], m: float
) -> EnsembleEstimate:
    ordered = sorted(summaries, key=lambda summary: summary.path_index)
    kept = [summary for summary in ordered if not summary.blowup]
    blowups = len(ordered) - len(kept)
    if not kept:
        raise AllPathsBlewUpError(f"All {len(ordered)} paths blew up; no statistics can be formed")
    stats = {name: describe(np.stack([summary.values[name] for summary in kept])) for name in functionals}
    return EnsembleEstimate(times=np.asarray(times), stats=stats, path_count=len(kept), blowup_count=blowups, m=m)


def batch_size_at(paths: int, batch_size: int, batch_number: int) -> int:
    """
    Return the size of a batch of path indices.

    Args:
        paths: Total number of paths.
        batch_size: The batch size.
        batch_number: The batch number.

    Returns:
        The size of the requested batch.

    Examples:

        paths:    0 1 2 3 4 5 6 7 8 9 A B C
        paths = 13
        batch_size = 5
        batch1:   0 1 2 3 4
        batch2:             5 6 7 8 9
        batch3:                       A B C
        batch sizes = [5, 5, 3]
    """
    num_full_batches = paths // batch_size
    if batch_number >= num_full_batches:
        return max(0, paths - batch_size * batch_number)
    return batch_size


def batch_path_indices(paths: int, batch_size: int) -> List[List[int]]:
    if paths < 0 or batch_size < 1:
        raise ValueError(f"Need paths >= 0 and batch_size >= 1, got {paths} and {batch_size}")
    batches = []
    for batch_number in range(math.ceil(paths / batch_size)):
        start = batch_number * batch_size
        batches.append(list(range(start, start + batch_size_at(paths, batch_size, batch_number))))
    return batches


def _run_batch(
    solver: SolverConfig, initial: Union[GridFunction, SpectralCoeffs], indices: Sequence[int]
) -> List[Trajectory]:
    return [run_path(solver, initial, path_index=index) for index in indices]


def _summarize_batch(
    solver: SolverConfig,
    initial: Union[GridFunction, SpectralCoeffs],
    indices: Sequence[int],
    tracked_gammas: Tuple[float, ...],
    p_moments: Tuple[float, ...],
) -> List[PathSummary]:
    trajectories = _run_batch(solver, initial, indices)
    return [summarize_path(trajectory, tracked_gammas, p_moments) for trajectory in trajectories]


class EnsembleRunner:
    """Runs the paths of an EnsembleConfig, serially or on a process pool, and reduces them."""

    def __init__(self, cfg: EnsembleConfig) -> None:
        self.cfg = cfg
        self._logger = logging.getLogger(f"{__name__}.{type(self).__name__}")

    def _batches(self) -> List[List[int]]:
        return batch_path_indices(self.cfg.paths, self.cfg.batch_size)

    def trajectories(self) -> List[Trajectory]:
        cfg = self.cfg
        batches = self._batches()
        if cfg.workers == 1:
            results = [_run_batch(cfg.solver, cfg.initial, batch) for batch in batches]
        else:
            with ProcessPoolExecutor(max_workers=cfg.workers) as executor:
                results = list(
                    executor.map(_run_batch, [cfg.solver] * len(batches), [cfg.initial] * len(batches), batches)
                )
        return [trajectory for batch in results for trajectory in batch]

    def summaries(self) -> List[PathSummary]:
        cfg = self.cfg
        batches = self._batches()
        self._logger.info(f"Running {cfg.paths} paths in {len(batches)} batches on {cfg.workers} worker(s)")
        args = (cfg.solver, cfg.initial)
        if cfg.workers == 1:
            results = [_summarize_batch(*args, batch, cfg.tracked_gammas, cfg.p_moments) for batch in batches]
        else:
            n = len(batches)
            with ProcessPoolExecutor(max_workers=cfg.workers) as executor:
                results = list(
                    executor.map(
                        _summarize_batch,
                        [cfg.solver] * n,
                        [cfg.initial] * n,
                        batches,
                        [cfg.tracked_gammas] * n,
                        [cfg.p_moments] * n,
                    )
                )
        return [summary for batch in results for summary in batch]

    def run(self) -> EnsembleEstimate:
        summaries = self.summaries()
        blowups = sum(summary.blowup for summary in summaries)
        if blowups:
            self._logger.warning(f"{blowups} of {len(summaries)} paths blew up and are excluded from the statistics")
        solver = self.cfg.solver
        return merge_summaries(summaries, np.array(solver.record_times), self.cfg.functionals, solver.m)


def run_ensemble(cfg: EnsembleConfig) -> EnsembleEstimate:
    """Run paths 0..M-1 and reduce them to per-time statistics of every tracked functional.

    Raises:
        AllPathsBlewUpError: If no path survives to the horizon.
    """
    return EnsembleRunner(cfg).run()


def run_paths(cfg: EnsembleConfig, workers: Optional[int] = None) -> List[Trajectory]:
    """Full trajectories of paths 0..M-1 in path order."""
    if workers is not None:
        cfg = replace(cfg, workers=workers)
    return EnsembleRunner(cfg).trajectories()


# ---------------------------------------------------------------------------------------------------------------------
# Decay fits


@dataclass(frozen=True)
class DecayFit:
    functional: str
    t_lo: float
    t_hi: float
    slope: float
    intercept: float
    r_squared: float
    target_slope: float = math.nan

    def to_row(self) -> Tuple[str, float, float, float, float, float, float]:
        return self.functional, self.t_lo, self.t_hi, self.slope, self.intercept, self.r_squared, self.target_slope


def fit_power_law(
    times: np.ndarray, values: np.ndarray, window: Tuple[float, float] = DEFAULT_DECAY_WINDOW
) -> Tuple[float, float, float]:
    """Least squares line through (log t, log value) on the window; returns (slope, intercept, r_squared)."""
    t_lo, t_hi = window
    if not 0.0 < t_lo < t_hi:
        raise ValueError(f"Decay window needs 0 < t_lo < t_hi, got [{t_lo}, {t_hi}]")
    times = np.asarray(times, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if t_hi > times[-1] * (1.0 + 1e-12):
        raise ValueError(f"Decay window [{t_lo}, {t_hi}] exceeds the recorded horizon {times[-1]}")
    mask = (times >= t_lo * (1.0 - 1e-12)) & (times <= t_hi * (1.0 + 1e-12))
    if np.count_nonzero(mask) < 2:
        raise ValueError(f"Decay window [{t_lo}, {t_hi}] holds fewer than two recorded times")
    if np.any(values[mask] <= 0.0):
        raise ValueError("Decay fit needs positive values throughout the window")
    log_t = np.log(times[mask])
    log_y = np.log(values[mask])
    slope, intercept = np.polyfit(log_t, log_y, 1)
    residual = log_y - (slope * log_t + intercept)
    total = float(np.sum((log_y - log_y.mean()) ** 2))
    r_squared = 1.0 if total == 0.0 else 1.0 - float(np.sum(residual**2)) / total
    return float(slope), float(intercept), r_squared


def fit_decay(
    est: EnsembleEstimate, functional: str, window: Tuple[float, float] = DEFAULT_DECAY_WINDOW
) -> DecayFit:
    """Log-log fit of the ensemble mean of `functional`, compared against the slope -2/(m-1)."""
    stats = est.functional(functional)
    slope, intercept, r_squared = fit_power_law(est.times, stats.mean, window)
    return DecayFit(
        functional=functional,
        t_lo=window[0],
        t_hi=window[1],
        slope=slope,
        intercept=intercept,
        r_squared=r_squared,
        target_slope=-2.0 / (est.m - 1.0),
    )


# ---------------------------------------------------------------------------------------------------------------------
# Temporal regularity


@dataclass(frozen=True)
class HolderEstimate:
    epsilon: float
    estimated_exponent: float
    lags: Tuple[float, ...]
    structure: Tuple[float, ...]
    flat: bool = False


def estimate_holder_from_coeffs(
    times: np.ndarray, coeffs: np.ndarray, gamma: float, epsilon: float
) -> HolderEstimate:
    """Structure-function exponent of t -> c(t) in H^(gamma - epsilon).

    S(tau) is the mean over t of ||c(t + tau) - c(t)||_{H^(gamma-epsilon)} over dyadic lags tau up to an eighth of
    the record; the exponent is the log-log slope of S. A path that never moves is flat with exponent inf.
    """
    if not epsilon > 0.0:
        raise ValueError(f"Hoelder estimate needs epsilon > 0, got {epsilon}")
    times = np.asarray(times, dtype=np.float64)
    coeffs = np.asarray(coeffs, dtype=np.float64)
    n = times.size
    if n < MIN_HOLDER_TIMES:
        raise ValueError(f"Hoelder estimate needs at least {MIN_HOLDER_TIMES} recorded times, got {n}")
    spacing = np.diff(times)
    if not np.allclose(spacing, spacing[0], rtol=1e-9, atol=0.0):
        raise ValueError("Hoelder estimate needs uniformly spaced record times")
    weights = eigenvalue_powers(coeffs.shape[1], gamma - epsilon)
    lags = []
    structure = []
    lag = 1
    while lag <= n // 8:
        diff = coeffs[lag:] - coeffs[:-lag]
        lags.append(lag * float(spacing[0]))
        structure.append(float(np.mean(np.sqrt(diff**2 @ weights))))
        lag *= 2
    values = np.array(structure)
    if np.all(values == 0.0):
        return HolderEstimate(epsilon, math.inf, tuple(lags), tuple(structure), flat=True)
    usable = values > 0.0
    found = int(np.count_nonzero(usable))
    if found < MIN_HOLDER_LAGS:
        raise ValueError(f"Hoelder estimate needs at least {MIN_HOLDER_LAGS} usable lags, got {found}")
    slope, _ = np.polyfit(np.log(np.array(lags)[usable]), np.log(values[usable]), 1)
    return HolderEstimate(epsilon, float(slope), tuple(lags), tuple(structure))


def estimate_temporal_holder(trajectory: Trajectory, gamma: float, epsilon: float) -> HolderEstimate:
    return estimate_holder_from_coeffs(trajectory.times, trajectory.coeff_matrix(), gamma, epsilon)


# ---------------------------------------------------------------------------------------------------------------------
# Space-time norms


def gamma_prime(gamma: float, m: float) -> float:
    """Spatial order 2(1 + gamma)/(m + 1) of the L^(m+1)_t W^(gamma',m+1)_x energy term."""
    return 2.0 * (1.0 + gamma) / (m + 1.0)


def spacetime_norm(trajectory: Trajectory, gamma_prime: float, p: float) -> float:
    """(int_0^T ||v(t)||^p_{W^(gamma',p)} dt)^(1/p) by trapezoidal quadrature over the record times."""
    values = np.array([slobodeckij_norm(state.v, gamma_prime, p) ** p for state in trajectory.states])
    if values.size < 2:
        return 0.0
    return float(trapezoid(values, trajectory.times) ** (1.0 / p))


def power_regularity_check(trajectory: Trajectory, m: float, gamma: Optional[float] = None) -> InequalityReport:
    """Per-snapshot ||v||^(m+1)_{W^((1+gamma)/q, m+1)} <= N(q) ||v^[q]||^2_{W^(1+gamma, 2)}, q = (m+1)/2.

    N(q) is the brute-forced power regularity constant. The report carries the worst snapshot; the ratio of the
    left side to the spectral ||v^[q]||^2_{H^(1+gamma)} is recorded in the metadata.
    """
    gamma = trajectory.config.gamma_track if gamma is None else gamma
    if not -1.0 < gamma < 0.0:
        raise ValueError(f"Power regularity check needs gamma in (-1, 0), got {gamma}")
    q = 0.5 * (m + 1.0)
    constant = power_regularity_constant(q).sup_ratio
    order = (1.0 + gamma) / q
    worst: Optional[Tuple[float, float, float, float]] = None
    spectral_ratio = 0.0
    for state in trajectory.states:
        lhs = slobodeckij_norm(state.v, order, m + 1.0) ** (m + 1.0)
        power = GridFunction(signed_power(state.v.values, q))
        rhs = constant * slobodeckij_norm(power, 1.0 + gamma, 2.0) ** 2
        margin = rhs - lhs
        if worst is None or margin < worst[2]:
            worst = (lhs, rhs, margin, state.t)
        spectral = float(np.sum(eigenvalue_powers(state.v.J, 1.0 + gamma) * forward_array(power.values) ** 2))
        if spectral > 0.0:
            spectral_ratio = max(spectral_ratio, lhs / spectral)
    if worst is None:
        raise ValueError("Power regularity check needs at least one recorded state")
    lhs, rhs, margin, t = worst
    return InequalityReport(
        name="power_regularity_path",
        lhs=lhs,
        rhs=rhs,
        margin=margin,
        tolerance=1e-9 * (abs(lhs) + abs(rhs)),
        metadata={
            "m": m,
            "gamma": gamma,
            "constant": constant,
            "worst_t": t,
            "snapshots": len(trajectory.states),
            "spectral_ratio": spectral_ratio,
        },
    )
