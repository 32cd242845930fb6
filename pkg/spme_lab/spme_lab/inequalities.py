# Copyright (c) 2026 spme_lab contributors. See LICENSE file for more info.

"""
Numerical verifiers and brute-force oracles for the explicit inequalities and constants behind the a priori
estimates of the stochastic porous medium equation.

Every verifier returns an InequalityReport. A report never raises on a violated inequality; it records the margin
and whether it lies within tolerance. Regimes in which an inequality is no longer guaranteed produce warnings.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from spme_lab.sigma import SigmaSpec
from spme_lab.spectral import (
    VERIFY_OVERSAMPLING,
    GridFunction,
    eigenvalue_powers,
    fine_size,
    fine_values_array,
    forward_array,
    grid_nodes,
    lp_norm,
    signed_power,
)

logger = logging.getLogger(__name__)

# c_0 bounds sum_k ||u e^k||^2_{H^-1} by c_0 ||u||^2_{L^2}; equal to the Krylov constant at order -1
C0 = 1.0 / 3.0
SPECTRAL_RTOL = 1e-8
NONLINEAR_RTOL = 1e-6
POINTWISE_RTOL = 1e-12
KRYLOV_DEFAULT_TERMS = 10_000
_KRYLOV_CHUNK = 1_000_000


def _plain(value: Any) -> Any:
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


@dataclass
class InequalityReport:
    """Uniform result record. `margin` is positive when the inequality holds with room to spare."""

    name: str
    lhs: float
    rhs: float
    margin: float
    tolerance: float
    metadata: Dict[str, Any] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)
    holds: bool = field(init=False)

    def __post_init__(self) -> None:
        if not self.tolerance >= 0.0:
            raise ValueError(f"Report tolerance must be nonnegative, got {self.tolerance}")
        self.lhs = float(self.lhs)
        self.rhs = float(self.rhs)
        self.margin = float(self.margin)
        self.holds = bool(self.margin >= -self.tolerance)

    @property
    def failed(self) -> bool:
        """A violation outside every warned regime."""
        return not self.holds and not self.warnings

    def sort_key(self) -> Tuple[str, str]:
        return self.name, repr(sorted((k, repr(_plain(v))) for k, v in self.metadata.items()))

    def to_record(self) -> str:
        """One line: name, parameters, lhs, rhs, margin, holds."""
        params = " ".join(f"{k}={_plain(v)!r}" for k, v in sorted(self.metadata.items()))
        return (
            f"name={self.name} {params} lhs={self.lhs!r} rhs={self.rhs!r} margin={self.margin!r}"
            f" tolerance={self.tolerance!r} holds={self.holds} warnings={len(self.warnings)}"
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "tolerance": self.tolerance,
            "holds": self.holds,
            "metadata": {k: _plain(v) for k, v in sorted(self.metadata.items())},
            "warnings": list(self.warnings),
        }


def _upper_bound(name: str, lhs: float, rhs: float, tolerance: float, **metadata: Any) -> InequalityReport:
    """Report for lhs <= rhs."""
    return InequalityReport(name=name, lhs=lhs, rhs=rhs, margin=rhs - lhs, tolerance=tolerance, metadata=metadata)


def _lower_bound(name: str, lhs: float, rhs: float, tolerance: float, **metadata: Any) -> InequalityReport:
    """Report for lhs >= rhs."""
    return InequalityReport(name=name, lhs=lhs, rhs=rhs, margin=lhs - rhs, tolerance=tolerance, metadata=metadata)


def _nonlinear_tolerance(lhs: float, rhs: float) -> float:
    return NONLINEAR_RTOL * (abs(lhs) + abs(rhs) + 1.0)


@dataclass(frozen=True)
class ScanRange:
    """Scalar scan used by the brute-force checks on sigma.

    The scan is the union of a uniform grid on [-r_max, r_max], geometric grids towards 0 on both sides and 0
    itself. Growth at infinity is judged on a separate geometric tail [r_far / 10, r_far].
    """

    r_max: float = 100.0
    points: int = 4001
    geometric_points: int = 241
    r_min: float = 1e-8
    r_far: float = 1e6
    lipschitz_points: int = 401
    x_points: int = 5

    def __post_init__(self) -> None:
        for name in ("r_max", "r_min", "r_far"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"ScanRange.{name} must be finite and positive, got {value}")
        if self.r_min >= self.r_max or self.r_max > self.r_far:
            raise ValueError(
                f"ScanRange needs r_min < r_max <= r_far, got {self.r_min}, {self.r_max}, {self.r_far}"
            )
        for name in ("points", "geometric_points", "lipschitz_points", "x_points"):
            if getattr(self, name) < 2:
                raise ValueError(f"ScanRange.{name} must be at least 2, got {getattr(self, name)}")

    def values(self) -> np.ndarray:
        geometric = np.geomspace(self.r_min, self.r_max, self.geometric_points)
        return np.unique(
            np.concatenate((np.linspace(-self.r_max, self.r_max, self.points), geometric, -geometric, [0.0]))
        )

    def lipschitz_values(self) -> np.ndarray:
        geometric = np.geomspace(self.r_min, self.r_max, self.lipschitz_points // 4)
        return np.unique(
            np.concatenate(
                (np.linspace(-self.r_max, self.r_max, self.lipschitz_points), geometric, -geometric, [0.0])
            )
        )

    def tail(self) -> np.ndarray:
        far = np.geomspace(self.r_far / 10.0, self.r_far, 64)
        return np.concatenate((-far[::-1], far))

    def x_nodes(self) -> np.ndarray:
        return np.arange(1, self.x_points + 1, dtype=np.float64) / (self.x_points + 1)


def stroock_varopoulos_constant(m: float) -> float:
    """4m / (m + 1)^2, equal to 1 at m = 1 and below 1 otherwise."""
    return 4.0 * m / (m + 1.0) ** 2


# ---------------------------------------------------------------------------------------------------------------------
# Krylov constant


@dataclass(frozen=True)
class KrylovConstant:
    """N(gamma_tilde) = 2 sum_l (pi l)^(2 gamma_tilde) bracketed by integral-test tail bounds.

    `partial` is the truncated sum over `terms` modes; the true value lies in [lower, upper] with
    lower = partial + integral over [terms + 1, inf) and upper = partial + integral over [terms, inf).
    """

    gamma_tilde: float
    terms: int
    partial: float
    lower: float
    upper: float

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def value(self) -> float:
        """Certified upper bound, the safe choice wherever the constant bounds something from above."""
        return self.upper

    def contains(self, x: float) -> bool:
        return self.lower <= x <= self.upper


def _krylov_tail(gamma_tilde: float, start: float) -> float:
    """Integral of 2 (pi x)^(2 gamma_tilde) over [start, inf)."""
    exponent = 2.0 * gamma_tilde + 1.0
    return 2.0 * math.pi ** (2.0 * gamma_tilde) * start**exponent / (-exponent)


def krylov_constant(gamma_tilde: float, terms: int = KRYLOV_DEFAULT_TERMS) -> KrylovConstant:
    """Partial sum over `terms` modes with integral-test tail bounds.

    Raises:
        ValueError: If gamma_tilde >= -1/2 (divergent series) or terms < 1.
    """
    if not gamma_tilde < -0.5:
        raise ValueError(f"gamma_tilde must be < -1/2 for the Krylov series to converge, got {gamma_tilde}")
    if terms < 1:
        raise ValueError(f"Krylov constant needs at least one term, got {terms}")
    partial = 0.0
    # smallest terms first
    for stop in range(terms, 0, -_KRYLOV_CHUNK):
        start = max(stop - _KRYLOV_CHUNK, 0)
        l = np.arange(start + 1, stop + 1, dtype=np.float64)[::-1]
        partial += float(np.sum(2.0 * (np.pi * l) ** (2.0 * gamma_tilde)))
    return KrylovConstant(
        gamma_tilde=gamma_tilde,
        terms=terms,
        partial=partial,
        lower=partial + _krylov_tail(gamma_tilde, terms + 1.0),
        upper=partial + _krylov_tail(gamma_tilde, float(terms)),
    )


def _fine_grid(u: GridFunction, factor: int) -> Tuple[np.ndarray, np.ndarray]:
    values = fine_values_array(forward_array(u.values), factor)
    return grid_nodes(values.size), values


def _sum_over_noise_modes(values: np.ndarray, x: np.ndarray, modes: int, gamma: float) -> float:
    """sum_{k <= modes} ||values * e^k||^2_{H^gamma}, all products and norms taken on the grid of x."""
    k = np.arange(1, modes + 1, dtype=np.float64)
    basis = math.sqrt(2.0) * np.sin(np.pi * np.multiply.outer(k, x))
    coeffs = forward_array(basis * values[None, :])
    return float(np.sum(eigenvalue_powers(x.size, gamma)[None, :] * coeffs**2))


def verify_krylov(
    u: GridFunction,
    gamma_tilde: float,
    modes: Optional[int] = None,
    oversampling: int = VERIFY_OVERSAMPLING,
    terms: int = KRYLOV_DEFAULT_TERMS,
) -> InequalityReport:
    """sum_{k <= modes} ||u e^k||^2_{H^gamma_tilde} <= N(gamma_tilde) ||u||^2_{L^2}."""
    modes = u.J if modes is None else modes
    if not 1 <= modes <= u.J:
        raise ValueError(f"Krylov check needs 1 <= modes <= J = {u.J}, got {modes}")
    constant = krylov_constant(gamma_tilde, terms)
    x, values = _fine_grid(u, oversampling)
    lhs = _sum_over_noise_modes(values, x, modes, gamma_tilde)
    rhs = constant.value * lp_norm(u, 2.0) ** 2
    return _upper_bound(
        "krylov",
        lhs,
        rhs,
        SPECTRAL_RTOL * max(abs(lhs), abs(rhs)),
        gamma_tilde=gamma_tilde,
        modes=modes,
        J=u.J,
        oversampling=oversampling,
    )


# ---------------------------------------------------------------------------------------------------------------------
# Stroock-Varopoulos


def _check_sv_order(beta: float) -> None:
    if not 0.0 < beta < 0.5:
        raise ValueError(f"Stroock-Varopoulos order beta must lie in (0, 1/2), got {beta}")


def verify_stroock_varopoulos(
    u: GridFunction, m: float, beta: float, oversampling: int = VERIFY_OVERSAMPLING
) -> InequalityReport:
    """integral u^[m] (-Delta)^beta u >= 4m/(m+1)^2 integral |(-Delta)^(beta/2) u^[(m+1)/2]|^2.

    u is taken as the band-limited function with the same J sine coefficients; both powers are evaluated on the
    grid refined by `oversampling`.
    """
    _check_sv_order(beta)
    if m < 1.0:
        raise ValueError(f"Stroock-Varopoulos check needs m >= 1, got {m}")
    coeffs = forward_array(u.values)
    J_fine = fine_size(u.J, oversampling)
    x = grid_nodes(J_fine)
    values = fine_values_array(coeffs, oversampling)
    power_m = forward_array(signed_power(values, m))[: u.J]
    lhs = float(np.sum(eigenvalue_powers(u.J, beta) * coeffs * power_m))
    power_q = forward_array(signed_power(values, 0.5 * (m + 1.0)))
    rhs = stroock_varopoulos_constant(m) * float(np.sum(eigenvalue_powers(x.size, beta) * power_q**2))
    return _lower_bound(
        "stroock_varopoulos",
        lhs,
        rhs,
        _nonlinear_tolerance(lhs, rhs),
        m=m,
        beta=beta,
        J=u.J,
        oversampling=oversampling,
    )


def verify_stroock_varopoulos_general(
    u: GridFunction,
    f: Callable[[np.ndarray], np.ndarray],
    g: Callable[[np.ndarray], np.ndarray],
    beta: float,
    oversampling: int = VERIFY_OVERSAMPLING,
) -> InequalityReport:
    """integral f(u) (-Delta)^beta u >= integral |(-Delta)^(beta/2) g(u)|^2 for a pair with f' = (g')^2."""
    _check_sv_order(beta)
    coeffs = forward_array(u.values)
    values = fine_values_array(coeffs, oversampling)
    f_coeffs = forward_array(f(values))[: u.J]
    g_coeffs = forward_array(g(values))
    lhs = float(np.sum(eigenvalue_powers(u.J, beta) * coeffs * f_coeffs))
    rhs = float(np.sum(eigenvalue_powers(values.size, beta) * g_coeffs**2))
    return _lower_bound(
        "stroock_varopoulos_general", lhs, rhs, _nonlinear_tolerance(lhs, rhs), beta=beta, J=u.J
    )


# ---------------------------------------------------------------------------------------------------------------------
# Elementary scalar inequalities


def _pointwise_sides(a: np.ndarray, b: np.ndarray, m: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    q = 0.5 * (m + 1.0)
    lhs = (a - b) * (signed_power(a, m) - signed_power(b, m))
    rhs = stroock_varopoulos_constant(m) * (signed_power(a, q) - signed_power(b, q)) ** 2
    # magnitude of the terms entering the two sides, bounding their floating-point error
    scale = np.abs(a - b) * (np.abs(a) ** m + np.abs(b) ** m) + (np.abs(a) ** q + np.abs(b) ** q) ** 2
    return lhs, rhs, scale


def verify_pointwise_monotonicity(a: float, b: float, m: float) -> InequalityReport:
    """(a - b)(a^[m] - b^[m]) >= 4m/(m+1)^2 |a^[(m+1)/2] - b^[(m+1)/2]|^2."""
    lhs, rhs, scale = _pointwise_sides(np.asarray(a, float), np.asarray(b, float), m)
    return _lower_bound(
        "pointwise_monotonicity", float(lhs), float(rhs), POINTWISE_RTOL * float(scale), m=m, a=a, b=b
    )


def scan_pointwise_monotonicity(m: float, pairs: int, bound: float, seed: int) -> InequalityReport:
    """Brute-force scan over uniformly drawn (a, b) in [-bound, bound]^2 plus the diagonal a = -b.

    The reported margin is the worst margin relative to the magnitude of the terms.
    """
    rng = np.random.default_rng(seed)
    a = rng.uniform(-bound, bound, pairs)
    b = rng.uniform(-bound, bound, pairs)
    antipodal = np.geomspace(1e-6, bound, 64)
    a = np.concatenate((a, antipodal))
    b = np.concatenate((b, -antipodal))
    lhs, rhs, scale = _pointwise_sides(a, b, m)
    with np.errstate(invalid="ignore", divide="ignore"):
        relative = np.where(scale > 0.0, (lhs - rhs) / scale, 0.0)
    worst = int(np.argmin(relative))
    return _lower_bound(
        "pointwise_monotonicity_scan",
        float(relative[worst]) + 1.0,
        1.0,
        POINTWISE_RTOL,
        m=m,
        pairs=int(a.size),
        bound=bound,
        seed=seed,
        worst_a=float(a[worst]),
        worst_b=float(b[worst]),
    )


def verify_pointwise_general(
    a: float, b: float, f: Callable[[float], float], g: Callable[[float], float]
) -> InequalityReport:
    """(a - b)(f(a) - f(b)) >= |g(a) - g(b)|^2 for a pair with f' = (g')^2."""
    lhs = (a - b) * (f(a) - f(b))
    rhs = (g(a) - g(b)) ** 2
    return _lower_bound("pointwise_general", lhs, rhs, POINTWISE_RTOL * (abs(lhs) + abs(rhs)), a=a, b=b)


@dataclass(frozen=True)
class PowerRegularityConstant:
    m_tilde: float
    sup_ratio: float
    argmax_a: float
    argmax_b: float
    points: int


def power_regularity_constant(m_tilde: float, points: int = 200_001) -> PowerRegularityConstant:
    """Brute-force sup of |a - b|^(2 m_tilde) / |a^[m_tilde] - b^[m_tilde]|^2.

    The ratio is invariant under swapping, joint sign change and joint scaling of (a, b), so a = 1 and
    b in [-1, 1) covers every pair. The scan is uniform plus geometric clusters at b = -1 and b = 1.
    """
    if m_tilde < 1.0:
        raise ValueError(f"Power regularity constant needs m_tilde >= 1, got {m_tilde}")
    cluster = np.geomspace(1e-12, 0.5, 512)
    b = np.unique(np.concatenate((np.linspace(-1.0, 1.0, points)[:-1], -1.0 + cluster, 1.0 - cluster)))
    b = b[b < 1.0]
    ratio = np.abs(1.0 - b) ** (2.0 * m_tilde) / (1.0 - signed_power(b, m_tilde)) ** 2
    worst = int(np.argmax(ratio))
    return PowerRegularityConstant(
        m_tilde=m_tilde, sup_ratio=float(ratio[worst]), argmax_a=1.0, argmax_b=float(b[worst]), points=int(b.size)
    )


def verify_energy_constant_gap(m: float) -> InequalityReport:
    """8m / (m + 1)^2 >= 2 / m, strict for m > 1."""
    if m < 1.0:
        raise ValueError(f"Energy constant gap needs m >= 1, got {m}")
    lhs = 2.0 * stroock_varopoulos_constant(m)
    return _lower_bound("energy_constant_gap", lhs, 2.0 / m, POINTWISE_RTOL, m=m)


# ---------------------------------------------------------------------------------------------------------------------
# Sigma growth and power-Lipschitz bounds


def growth_constant_k(sigma: SigmaSpec, m: float, delta: float, scan: Optional[ScanRange] = None) -> float:
    """Smallest K with |sigma(x, r)| <= K + delta |r|^((m+1)/2) on the scan."""
    scan = scan or ScanRange()
    r = scan.values()
    excess = np.abs(sigma(scan.x_nodes()[:, None], r[None, :])) - delta * np.abs(r) ** (0.5 * (m + 1.0))
    return max(0.0, float(np.max(excess)))


def effective_delta(sigma: SigmaSpec, m: float, K: float, scan: Optional[ScanRange] = None) -> float:
    """Smallest delta with |sigma(x, r)| <= K + delta |r|^((m+1)/2) on the scan."""
    scan = scan or ScanRange()
    r = scan.values()
    r = r[r != 0.0]
    excess = np.maximum(np.abs(sigma(scan.x_nodes()[:, None], r[None, :])) - K, 0.0)
    return float(np.max(excess / np.abs(r) ** (0.5 * (m + 1.0))))


def quadratic_growth(sigma: SigmaSpec, m: float, scan: Optional[ScanRange] = None) -> Tuple[float, float]:
    """Effective quadratic constants (delta_2, C) with |sigma(x, r)|^2 <= delta_2 |r|^(m+1) + C.

    delta_2 is the largest ratio |sigma|^2 / |r|^(m+1) on the far tail; C is then the smallest additive constant
    making the bound hold on the main scan.
    """
    scan = scan or ScanRange()
    x = scan.x_nodes()[:, None]
    tail = scan.tail()
    delta_2 = float(np.max(sigma(x, tail[None, :]) ** 2 / np.abs(tail) ** (m + 1.0)))
    r = scan.values()
    constant = float(np.max(sigma(x, r[None, :]) ** 2 - delta_2 * np.abs(r) ** (m + 1.0)))
    return delta_2, max(constant, 0.0)


def validate_sigma(sigma: SigmaSpec, m: float, scan: Optional[ScanRange] = None) -> InequalityReport:
    """Check the declared growth constants (K, delta) and, when declared, the power-Lipschitz constant delta_bar.

    The report compares the K needed for the declared delta (lhs) against the declared K (rhs); the Lipschitz
    excess, when present, is folded into the margin.
    """
    scan = scan or ScanRange()
    q = 0.5 * (m + 1.0)
    x = scan.x_nodes()[:, None]
    r = scan.values()
    sigma_values = np.abs(sigma(x, r[None, :]))
    growth_bound = sigma.delta * np.abs(r) ** q
    needed_k = float(np.max(sigma_values - growth_bound))
    scale = 1.0 + sigma.K + float(np.max(sigma_values))
    margin = sigma.K - needed_k
    metadata: Dict[str, Any] = {
        "kind": sigma.kind.value,
        "m": m,
        "K": sigma.K,
        "delta": sigma.delta,
        "delta_bar": sigma.delta_bar,
        "growth_excess": max(0.0, needed_k - sigma.K),
        "k_for_delta": max(0.0, needed_k),
        "delta_for_k": effective_delta(sigma, m, sigma.K, scan),
    }
    if sigma.delta_bar is not None:
        s = scan.lipschitz_values()
        values = sigma(x, s[None, :])
        powers = signed_power(s, q)
        diff_sigma = np.abs(values[:, :, None] - values[:, None, :])
        diff_power = sigma.delta_bar * np.abs(powers[:, None] - powers[None, :])[None, :, :]
        lipschitz_excess = float(np.max(diff_sigma - diff_power))
        metadata["lipschitz_excess"] = max(0.0, lipschitz_excess)
        margin = min(margin, -lipschitz_excess)
    delta_2, constant = quadratic_growth(sigma, m, scan)
    metadata["delta_2"] = delta_2
    metadata["quadratic_constant"] = constant
    report = InequalityReport(
        name="sigma_bounds",
        lhs=needed_k,
        rhs=sigma.K,
        margin=margin,
        tolerance=1e-10 * scale,
        metadata=metadata,
    )
    if not report.holds:
        logger.debug(f"Declared constants of {sigma} are violated on the scan, margin {report.margin}")
    return report


# ---------------------------------------------------------------------------------------------------------------------
# Operator conditions of the variational well-posedness theory


def monotonicity_threshold(m: float) -> float:
    """24m / (m + 1)^2 = 8m / (c_0 (m + 1)^2), the largest delta_bar for which monotonicity is asserted."""
    return 2.0 * stroock_varopoulos_constant(m) / C0


def verify_operator_monotonicity(
    v1: GridFunction,
    v2: GridFunction,
    m: float,
    sigma: SigmaSpec,
    modes: Optional[int] = None,
    oversampling: int = VERIFY_OVERSAMPLING,
) -> InequalityReport:
    """-2 integral (v1 - v2)(v1^[m] - v2^[m]) + sum_k ||(sigma(v1) - sigma(v2)) e^k||^2_{H^-1} <= 0."""
    if v1.J != v2.J:
        raise ValueError(f"Monotonicity check needs equal grid sizes, got {v1.J} and {v2.J}")
    modes = v1.J if modes is None else modes
    x, values1 = _fine_grid(v1, oversampling)
    _, values2 = _fine_grid(v2, oversampling)
    difference = values1 - values2
    drift = -2.0 * float(np.sum(difference * (signed_power(values1, m) - signed_power(values2, m)))) / (x.size + 1)
    noise = _sum_over_noise_modes(sigma(x, values1) - sigma(x, values2), x, modes, -1.0)
    lhs = drift + noise
    threshold = monotonicity_threshold(m)
    report = _upper_bound(
        "operator_monotonicity",
        lhs,
        0.0,
        _nonlinear_tolerance(lhs, 0.0),
        m=m,
        modes=modes,
        J=v1.J,
        delta_bar=sigma.delta_bar,
        threshold=threshold,
        drift_part=drift,
        noise_part=noise,
    )
    if sigma.delta_bar is None:
        report.warnings.append("sigma declares no power-Lipschitz constant; monotonicity is not guaranteed")
    elif sigma.delta_bar > threshold:
        report.warnings.append(
            f"delta_bar = {sigma.delta_bar} exceeds 24m/(m+1)^2 = {threshold}; monotonicity is not guaranteed"
        )
    return report


def verify_coercivity(
    v: GridFunction,
    m: float,
    sigma: SigmaSpec,
    modes: Optional[int] = None,
    oversampling: int = VERIFY_OVERSAMPLING,
    scan: Optional[ScanRange] = None,
) -> InequalityReport:
    """-2 ||v||^(m+1)_{L^(m+1)} + sum_k ||sigma(v) e^k||^2_{H^-1} <= -(2 - c_0 delta_2) ||v||^(m+1)_{L^(m+1)} + M.

    M = c_0 C |I| with (delta_2, C) from quadratic_growth; all quantities live on the oversampled grid. The
    additive constant is certified for grid values inside the scan range.
    """
    modes = v.J if modes is None else modes
    delta_2, constant = quadratic_growth(sigma, m, scan)
    x, values = _fine_grid(v, oversampling)
    power_norm = float(np.sum(np.abs(values) ** (m + 1.0))) / (x.size + 1)
    noise = _sum_over_noise_modes(sigma(x, values), x, modes, -1.0)
    mu = 2.0 - C0 * delta_2
    big_m = C0 * constant
    lhs = -2.0 * power_norm + noise
    rhs = -mu * power_norm + big_m
    report = _upper_bound(
        "coercivity",
        lhs,
        rhs,
        _nonlinear_tolerance(lhs, rhs),
        m=m,
        modes=modes,
        J=v.J,
        delta=sigma.delta,
        delta_2=delta_2,
        mu=mu,
        M=big_m,
    )
    if delta_2 >= 2.0 / C0:
        report.warnings.append(f"delta_2 = {delta_2} is not below 2/c_0 = 6; coercivity margin is not positive")
    return report


def delta_threshold(gamma: float, m: float, terms: int = KRYLOV_DEFAULT_TERMS) -> float:
    """1 / (m N(gamma)), a certified sufficient bound for the first smallness condition on delta.

    The second smallness condition carries a constant that is never made explicit and is not covered here.
    """
    if not gamma < -0.5:
        raise ValueError(f"delta_threshold needs gamma < -1/2, got {gamma}")
    if m <= 0.0:
        raise ValueError(f"delta_threshold needs m > 0, got {m}")
    return 1.0 / (m * krylov_constant(gamma, terms).value)


def coming_down_bound(m: float, N: float, t: float) -> float:
    """Bound at time t > 0 for any g >= 0 with g' + g^((m+1)/2) / m <= N, independent of g(0).

    Where g^((m+1)/2) >= 2mN the inequality forces g' <= -g^((m+1)/2) / (2m), whose solutions from +infinity are
    (4m / ((m - 1) t))^(2/(m-1)).
    """
    if m <= 1.0:
        raise ValueError(f"coming_down_bound needs m > 1, got {m}")
    if t <= 0.0 or N < 0.0:
        raise ValueError(f"coming_down_bound needs t > 0 and N >= 0, got t={t}, N={N}")
    return max((2.0 * m * N) ** (2.0 / (m + 1.0)), (4.0 * m / ((m - 1.0) * t)) ** (2.0 / (m - 1.0)))
