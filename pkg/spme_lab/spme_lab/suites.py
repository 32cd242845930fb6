# Copyright (c) 2026 spme_lab contributors. See LICENSE file for more info.

"""
Batteries of inequality checks over random grid functions and parameter grids, aggregated into one sorted result.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from spme_lab.inequalities import (
    InequalityReport,
    krylov_constant,
    power_regularity_constant,
    scan_pointwise_monotonicity,
    validate_sigma,
    verify_coercivity,
    verify_energy_constant_gap,
    verify_krylov,
    verify_operator_monotonicity,
    verify_stroock_varopoulos,
)
from spme_lab.params import VerifySettings
from spme_lab.sigma import SigmaSpec
from spme_lab.spectral import GridFunction, SpectralCoeffs, check_interpolation, inverse_array

logger = logging.getLogger(__name__)

POWER_CONSTANT_RTOL = 1e-3
KRYLOV_WIDTH_LIMIT = 1e-6


def random_grid_function(J: int, rng: np.random.Generator, max_scale: float = 10.0) -> GridFunction:
    """Random band-limited function: normal coefficients decaying like 1/k, rescaled to a random sup norm."""
    coeffs = rng.standard_normal(J) / np.arange(1, J + 1)
    values = inverse_array(coeffs)
    peak = float(np.max(np.abs(values)))
    scale = rng.uniform(0.1, max_scale)
    return GridFunction(values * (scale / peak if peak > 0.0 else 0.0))


@dataclass
class SuiteResult:
    reports: List[InequalityReport] = field(default_factory=list)

    @property
    def failed(self) -> List[InequalityReport]:
        return [report for report in self.reports if report.failed]

    @property
    def warning_count(self) -> int:
        return sum(len(report.warnings) for report in self.reports)

    @property
    def ok(self) -> bool:
        return not self.failed


def _krylov_suite(settings: VerifySettings, rng: np.random.Generator, **_: object) -> List[InequalityReport]:
    constant = krylov_constant(-1.0, settings.krylov_terms)
    target = 1.0 / 3.0
    distance = max(constant.lower - target, target - constant.upper, 0.0)
    bracket = InequalityReport(
        name="krylov_constant_bracket",
        lhs=distance + constant.width,
        rhs=KRYLOV_WIDTH_LIMIT,
        margin=KRYLOV_WIDTH_LIMIT - constant.width - distance,
        tolerance=0.0,
        metadata={"gamma_tilde": -1.0, "lower": constant.lower, "upper": constant.upper, "terms": constant.terms},
    )
    reports = [bracket]
    for gamma in settings.gammas:
        for _sample in range(settings.samples):
            u = random_grid_function(settings.J, rng)
            reports.append(verify_krylov(u, gamma, oversampling=settings.oversampling, terms=settings.krylov_terms))
    return reports


def _stroock_varopoulos_suite(
    settings: VerifySettings, rng: np.random.Generator, **_: object
) -> List[InequalityReport]:
    reports = []
    for m in settings.m_values:
        for beta in settings.betas:
            for _sample in range(settings.samples):
                u = random_grid_function(settings.J, rng)
                reports.append(verify_stroock_varopoulos(u, m, beta, settings.oversampling))
    return reports


def _pointwise_suite(settings: VerifySettings, **_: object) -> List[InequalityReport]:
    return [
        scan_pointwise_monotonicity(m, settings.pointwise_pairs, settings.pointwise_bound, settings.seed)
        for m in settings.m_values
    ]


def _power_regularity_suite(settings: VerifySettings, **_: object) -> List[InequalityReport]:
    reports = []
    for m in settings.m_values:
        m_tilde = 0.5 * (m + 1.0)
        found = power_regularity_constant(m_tilde)
        target = 2.0 ** (2.0 * (m_tilde - 1.0))
        relative = abs(found.sup_ratio - target) / target
        reports.append(
            InequalityReport(
                name="power_regularity_constant",
                lhs=relative,
                rhs=POWER_CONSTANT_RTOL,
                margin=POWER_CONSTANT_RTOL - relative,
                tolerance=0.0,
                metadata={"m_tilde": m_tilde, "sup_ratio": found.sup_ratio, "closed_form": target},
            )
        )
    return reports


def _energy_gap_suite(settings: VerifySettings, **_: object) -> List[InequalityReport]:
    return [verify_energy_constant_gap(m) for m in settings.m_values if m > 1.0]


def _sigma_suite(sigma: SigmaSpec, m: float, **_: object) -> List[InequalityReport]:
    return [validate_sigma(sigma, m)]


def _coercivity_suite(
    settings: VerifySettings, rng: np.random.Generator, sigma: SigmaSpec, m: float, modes: int, **_: object
) -> List[InequalityReport]:
    return [
        verify_coercivity(random_grid_function(settings.J, rng), m, sigma, modes, settings.oversampling)
        for _sample in range(settings.samples)
    ]


def _monotonicity_suite(
    settings: VerifySettings, rng: np.random.Generator, sigma: SigmaSpec, m: float, modes: int, **_: object
) -> List[InequalityReport]:
    reports = []
    for _sample in range(settings.samples):
        v1 = random_grid_function(settings.J, rng)
        v2 = random_grid_function(settings.J, rng)
        reports.append(verify_operator_monotonicity(v1, v2, m, sigma, modes, settings.oversampling))
    return reports


def _interpolation_suite(settings: VerifySettings, rng: np.random.Generator, **_: object) -> List[InequalityReport]:
    reports = []
    for gamma0, gamma1, theta in ((-1.0, 0.0, 0.5), (-0.75, 1.0, 0.25), (-1.0, 1.0, 0.5)):
        for _sample in range(settings.samples):
            c = SpectralCoeffs(rng.standard_normal(settings.J) / np.arange(1, settings.J + 1))
            found = check_interpolation(c, gamma0, gamma1, theta)
            reports.append(
                InequalityReport(
                    name="interpolation",
                    lhs=found.lhs,
                    rhs=found.rhs,
                    margin=found.rhs - found.lhs,
                    tolerance=1e-8 * max(abs(found.lhs), abs(found.rhs)),
                    metadata={"gamma0": gamma0, "gamma1": gamma1, "theta": theta, "J": settings.J},
                )
            )
    return reports


SUITES: Dict[str, Callable[..., List[InequalityReport]]] = {
    "krylov": _krylov_suite,
    "stroock_varopoulos": _stroock_varopoulos_suite,
    "pointwise": _pointwise_suite,
    "power_regularity": _power_regularity_suite,
    "energy_gap": _energy_gap_suite,
    "sigma": _sigma_suite,
    "coercivity": _coercivity_suite,
    "monotonicity": _monotonicity_suite,
    "interpolation": _interpolation_suite,
}


def verify_suite(
    settings: VerifySettings, sigma: Optional[SigmaSpec] = None, m: float = 2.0, modes: Optional[int] = None
) -> SuiteResult:
    """Run every enabled suite; reports come back sorted by (name, parameters).

    Suites touching sigma (sigma, coercivity, monotonicity) use the given coefficient at exponent m with `modes`
    noise modes, all modes of the grid by default.

    Raises:
        ValueError: On an unknown suite name.
    """
    unknown = sorted(set(settings.suites) - set(SUITES))
    if unknown:
        raise ValueError(f"Unknown verification suites {unknown}; valid suites are {sorted(SUITES)}")
    sigma = SigmaSpec.zero() if sigma is None else sigma
    modes = settings.J if modes is None else min(modes, settings.J)
    result = SuiteResult()
    for name in SUITES:
        if name not in settings.suites:
            continue
        # generator keyed by (seed, suite position)
        rng = np.random.default_rng([settings.seed, list(SUITES).index(name)])
        reports = SUITES[name](settings=settings, rng=rng, sigma=sigma, m=m, modes=modes)
        logger.info(f"Suite {name}: {len(reports)} checks, {sum(r.failed for r in reports)} violations")
        result.reports.extend(reports)
    result.reports.sort(key=lambda report: report.sort_key())
    return result
