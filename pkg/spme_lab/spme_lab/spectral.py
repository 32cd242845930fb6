# Copyright (c) 2026 spme_lab contributors. See LICENSE file for more info.

"""
Sine-spectral representation of functions on (0, 1) with homogeneous Dirichlet boundary conditions.

A function is stored either by its values on the uniform interior grid x_j = j / (J + 1), j = 1..J, or by its
coefficients in the orthonormal basis e^k(x) = sqrt(2) sin(pi k x), k = 1..J. Fractional powers of the Dirichlet
Laplacian are diagonal in the sine basis with the continuum eigenvalues lambda_k = (pi k)^2.
"""

import functools
import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Union

import numpy as np
import scipy.fft

DEFAULT_OVERSAMPLING = 2
VERIFY_OVERSAMPLING = 4

ArrayLike = Union[float, np.ndarray]
PointwiseMap = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _read_only(values: np.ndarray) -> np.ndarray:
    array = np.array(values, dtype=np.float64, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Nodal values at x_j = j / (J + 1), j = 1..J. The boundary values are implicitly zero and never stored."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size == 0:
            raise ValueError(f"GridFunction needs a non-empty 1-D array of values, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("GridFunction values must all be finite")
        object.__setattr__(self, "values", _read_only(values))

    @property
    def J(self) -> int:
        return int(self.values.size)

    @property
    def nodes(self) -> np.ndarray:
        return grid_nodes(self.J)


@dataclass(frozen=True, eq=False)
class SpectralCoeffs:
    """Sine coefficients; entry k - 1 holds (v, e^k) in L^2(0, 1)."""

    coeffs: np.ndarray

    def __post_init__(self) -> None:
        coeffs = np.asarray(self.coeffs, dtype=np.float64)
        if coeffs.ndim != 1 or coeffs.size == 0:
            raise ValueError(f"SpectralCoeffs needs a non-empty 1-D array, got shape {coeffs.shape}")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("SpectralCoeffs entries must all be finite")
        object.__setattr__(self, "coeffs", _read_only(coeffs))

    @property
    def J(self) -> int:
        return int(self.coeffs.size)

    @classmethod
    def basis(cls, J: int, k: int) -> "SpectralCoeffs":
        """The coefficients of e^k on a grid of size J."""
        if not 1 <= k <= J:
            raise ValueError(f"Mode index k must lie in [1, {J}], got {k}")
        coeffs = np.zeros(J)
        coeffs[k - 1] = 1.0
        return cls(coeffs)


@dataclass(frozen=True)
class FractionalExponent:
    beta: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.beta):
            raise ValueError(f"Fractional exponent must be finite, got {self.beta}")


@dataclass(frozen=True)
class InterpolationReport:
    lhs: float
    rhs: float
    holds: bool


def grid_nodes(J: int) -> np.ndarray:
    return np.arange(1, J + 1, dtype=np.float64) / (J + 1)


@functools.lru_cache(maxsize=32)
def eigenvalues(J: int) -> np.ndarray:
    """lambda_k = (pi k)^2 for k = 1..J."""
    lam = (np.pi * np.arange(1, J + 1, dtype=np.float64)) ** 2
    lam.setflags(write=False)
    return lam


@functools.lru_cache(maxsize=32)
def eigenvalue_powers(J: int, gamma: float) -> np.ndarray:
    """lambda_k^gamma = (pi k)^(2 gamma) for k = 1..J."""
    weights = (np.pi * np.arange(1, J + 1, dtype=np.float64)) ** (2.0 * gamma)
    weights.setflags(write=False)
    return weights


@functools.lru_cache(maxsize=16)
def _sine_matrix(J: int) -> np.ndarray:
    idx = np.arange(1, J + 1, dtype=np.float64)
    matrix = np.sin(np.pi * np.outer(idx, idx) / (J + 1))
    matrix.setflags(write=False)
    return matrix


def _is_power_of_two(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


def _dst1(values: np.ndarray) -> np.ndarray:
    """Unnormalized type-I DST along the last axis, y_k = 2 sum_j x_j sin(pi k j / (J + 1))."""
    J = values.shape[-1]
    if _is_power_of_two(J + 1):
        return scipy.fft.dst(values, type=1, axis=-1)
    # the sine matrix is symmetric, so right-multiplication transforms every row
    return 2.0 * (values @ _sine_matrix(J))


def forward_array(values: np.ndarray) -> np.ndarray:
    """Grid values to sine coefficients along the last axis (array version of dst_forward)."""
    J = values.shape[-1]
    return _dst1(values) / (math.sqrt(2.0) * (J + 1))


def inverse_array(coeffs: np.ndarray) -> np.ndarray:
    """Sine coefficients to grid values along the last axis (array version of dst_inverse)."""
    return _dst1(coeffs) / math.sqrt(2.0)


def fine_size(J: int, factor: int) -> int:
    """Size of the grid refined by `factor`; the coarse nodes are a subset of the fine ones."""
    if factor < 1:
        raise ValueError(f"Oversampling factor must be a positive integer, got {factor}")
    return factor * (J + 1) - 1


def pad_coeffs(coeffs: np.ndarray, size: int) -> np.ndarray:
    """Zero-pad (or truncate) coefficients along the last axis to `size` modes."""
    current = coeffs.shape[-1]
    if size <= current:
        return coeffs[..., :size]
    padding = [(0, 0)] * (coeffs.ndim - 1) + [(0, size - current)]
    return np.pad(coeffs, padding)


def fine_values_array(coeffs: np.ndarray, factor: int) -> np.ndarray:
    return inverse_array(pad_coeffs(coeffs, fine_size(coeffs.shape[-1], factor)))


def nonlinear_coeffs_array(
    coeffs: np.ndarray, fn: PointwiseMap, factor: int = DEFAULT_OVERSAMPLING, keep: Optional[int] = None
) -> np.ndarray:
    """Sine coefficients of fn(x, v) evaluated pointwise on the oversampled grid.

    Args:
        coeffs: Coefficients of v on a grid of size J.
        fn: Pointwise map (x, values) -> values.
        factor: Oversampling factor.
        keep: Number of leading modes to return; defaults to J, and -1 returns every fine-grid mode.

    Returns:
        The leading `keep` coefficients of fn(x, v).
    """
    J = coeffs.shape[-1]
    J_fine = fine_size(J, factor)
    values = inverse_array(pad_coeffs(coeffs, J_fine))
    transformed = forward_array(fn(grid_nodes(J_fine), values))
    if keep is None:
        keep = J
    elif keep < 0:
        keep = J_fine
    return transformed[..., :keep]


def dst_forward(g: GridFunction) -> SpectralCoeffs:
    return SpectralCoeffs(forward_array(g.values))


def dst_inverse(c: SpectralCoeffs) -> GridFunction:
    return GridFunction(inverse_array(c.coeffs))


def to_fine_grid(c: SpectralCoeffs, factor: int = DEFAULT_OVERSAMPLING) -> GridFunction:
    """Spectral interpolation of c onto the grid refined by `factor`."""
    return GridFunction(fine_values_array(c.coeffs, factor))


def nonlinear_coeffs(
    c: SpectralCoeffs, fn: PointwiseMap, factor: int = DEFAULT_OVERSAMPLING, keep: Optional[int] = None
) -> SpectralCoeffs:
    return SpectralCoeffs(nonlinear_coeffs_array(c.coeffs, fn, factor, keep))


def _beta_value(beta: Union[float, FractionalExponent]) -> float:
    if isinstance(beta, FractionalExponent):
        return beta.beta
    return FractionalExponent(float(beta)).beta


def fractional_laplacian(c: SpectralCoeffs, beta: Union[float, FractionalExponent]) -> SpectralCoeffs:
    """Coefficients of (-Delta)^beta v, i.e. lambda_k^beta c_k."""
    return SpectralCoeffs(eigenvalue_powers(c.J, _beta_value(beta)) * c.coeffs)


def h_gamma_norm_array(coeffs: np.ndarray, gamma: float) -> np.ndarray:
    """H^gamma norm along the last axis."""
    weights = eigenvalue_powers(coeffs.shape[-1], float(gamma))
    return np.sqrt(np.sum(weights * coeffs**2, axis=-1))


def h_gamma_norm(c: SpectralCoeffs, gamma: float) -> float:
    return float(h_gamma_norm_array(c.coeffs, gamma))


def lp_norm(g: GridFunction, p: float) -> float:
    """Discrete L^p norm ((1 / (J + 1)) sum |v_j|^p)^(1/p); the implicit boundary zeros contribute nothing."""
    if p < 1:
        raise ValueError(f"lp_norm needs p >= 1, got {p}")
    return float(np.sum(np.abs(g.values) ** p) / (g.J + 1)) ** (1.0 / p)


def signed_power(r: ArrayLike, q: float) -> ArrayLike:
    """|r|^(q-1) r, the odd extension of r^q."""
    if q <= 0:
        raise ValueError(f"signed_power needs q > 0, got {q}")
    result = np.sign(r) * np.abs(r) ** q
    if np.ndim(result) == 0:
        return float(result)
    return result


def _slobodeckij_parts(values: np.ndarray, gamma: float, p: float) -> Tuple[float, float]:
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"Slobodeckij order gamma must lie in (0, 1), got {gamma}")
    if p <= 1.0:
        raise ValueError(f"Slobodeckij integrability p must exceed 1, got {p}")
    J = values.size
    h = 1.0 / (J + 1)
    # trapezoid rule on [0, 1] including the boundary nodes, where the function vanishes
    padded = np.concatenate(([0.0], values, [0.0]))
    x = np.arange(J + 2, dtype=np.float64) * h
    weights = np.full(J + 2, h)
    weights[0] = weights[-1] = 0.5 * h
    lp_term = float(np.sum(weights * np.abs(padded) ** p))
    distance = np.abs(x[:, None] - x[None, :])
    np.fill_diagonal(distance, 1.0)
    integrand = np.abs(padded[:, None] - padded[None, :]) ** p / distance ** (1.0 + gamma * p)
    np.fill_diagonal(integrand, 0.0)
    double_term = float(weights @ integrand @ weights)
    return lp_term, double_term


def slobodeckij_norm(g: GridFunction, gamma: float, p: float) -> float:
    """(||v||_{L^p}^p + double integral of |v(x) - v(y)|^p / |x - y|^(1 + gamma p))^(1/p).

    The double integral uses trapezoid weights on both axes (boundary nodes included) with the diagonal excluded.
    """
    lp_term, double_term = _slobodeckij_parts(g.values, gamma, p)
    return (lp_term + double_term) ** (1.0 / p)


def gagliardo_seminorm(g: GridFunction, gamma: float, p: float) -> float:
    _, double_term = _slobodeckij_parts(g.values, gamma, p)
    return double_term ** (1.0 / p)


def check_interpolation(c: SpectralCoeffs, gamma0: float, gamma1: float, theta: float) -> InterpolationReport:
    """Check ||v||_{H^gamma} <= ||v||_{H^gamma0}^(1-theta) ||v||_{H^gamma1}^theta.

    Here gamma = (1-theta) gamma0 + theta gamma1.

    Raises:
        ValueError: If gamma0 >= gamma1, theta is outside (0, 1) or c vanishes.
    """
    if gamma0 == gamma1:
        raise ValueError(f"Interpolation needs distinct orders, got gamma0 = gamma1 = {gamma0}")
    if gamma0 > gamma1:
        raise ValueError(f"Interpolation needs gamma0 < gamma1, got {gamma0} and {gamma1}")
    if not 0.0 < theta < 1.0:
        raise ValueError(f"Interpolation parameter theta must lie in (0, 1), got {theta}")
    if not np.any(c.coeffs):
        raise ValueError("Interpolation check needs nonzero coefficients")
    gamma = (1.0 - theta) * gamma0 + theta * gamma1
    lhs = h_gamma_norm(c, gamma)
    rhs = h_gamma_norm(c, gamma0) ** (1.0 - theta) * h_gamma_norm(c, gamma1) ** theta
    return InterpolationReport(lhs=lhs, rhs=rhs, holds=lhs <= rhs * (1.0 + 1e-12))


def evaluate_series(c: SpectralCoeffs, x: np.ndarray) -> np.ndarray:
    """Evaluate sum_k c_k e^k(x) at arbitrary points."""
    x = np.asarray(x, dtype=np.float64)
    k = np.arange(1, c.J + 1, dtype=np.float64)
    return math.sqrt(2.0) * (np.sin(np.pi * np.multiply.outer(x, k)) @ c.coeffs)
