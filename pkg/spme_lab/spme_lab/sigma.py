# Copyright (c) 2026 spme_lab contributors. See LICENSE file for more info.

"""
Diffusion coefficients sigma(x, r) of the multiplicative noise together with their declared growth constants.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from spme_lab.spectral import signed_power


class SigmaKind(Enum):
    """Closed set of diffusion coefficients understood by the solver and the validators."""

    CONSTANT = "constant"
    POWER = "power"
    SQRT_POSITIVE_PART = "sqrt_positive_part"
    TABLE = "table"

    def __repr__(self) -> str:
        return self.value


@dataclass(frozen=True)
class SigmaSpec:
    """A diffusion coefficient with declared constants.

    The declared constants claim |sigma(x, r)| <= K + delta |r|^((m+1)/2) and, when delta_bar is given,
    |sigma(x, r) - sigma(x, s)| <= delta_bar |r^[(m+1)/2] - s^[(m+1)/2]|. validate_sigma checks both claims.

    Evaluation by kind:
        constant: sigma = amplitude
        power: sigma = amplitude * r^[mprime]
        sqrt_positive_part: sigma = amplitude * sqrt(max(r, 0))
        table: sigma = piecewise-linear interpolation of (table_r, table_sigma), constant beyond the ends
    """

    kind: SigmaKind
    K: float = 0.0
    delta: float = 0.0
    delta_bar: Optional[float] = None
    amplitude: float = 0.0
    mprime: float = 1.0
    table_r: Tuple[float, ...] = ()
    table_sigma: Tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if not isinstance(self.kind, SigmaKind):
            object.__setattr__(self, "kind", SigmaKind(self.kind))
        for name in ("K", "delta"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0.0):
                raise ValueError(f"SigmaSpec.{name} must be a finite nonnegative number, got {value}")
        if self.delta_bar is not None and not (math.isfinite(self.delta_bar) and self.delta_bar >= 0.0):
            raise ValueError(f"SigmaSpec.delta_bar must be a finite nonnegative number, got {self.delta_bar}")
        if not math.isfinite(self.amplitude):
            raise ValueError(f"SigmaSpec.amplitude must be finite, got {self.amplitude}")
        if self.kind == SigmaKind.POWER and self.mprime <= 0.0:
            raise ValueError(f"Power kind needs mprime > 0, got {self.mprime}")
        if self.kind == SigmaKind.TABLE:
            self._check_table()

    def _check_table(self) -> None:
        r = np.asarray(self.table_r, dtype=np.float64)
        s = np.asarray(self.table_sigma, dtype=np.float64)
        if r.size < 2 or r.size != s.size:
            raise ValueError(
                f"Table kind needs matching table_r and table_sigma with at least two entries, got {r.size} and"
                f" {s.size}"
            )
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(s))):
            raise ValueError("Table kind entries must all be finite")
        if np.any(np.diff(r) <= 0.0):
            raise ValueError("Table kind needs strictly increasing table_r")

    @classmethod
    def zero(cls) -> "SigmaSpec":
        return cls(kind=SigmaKind.CONSTANT, amplitude=0.0, delta_bar=0.0)

    @classmethod
    def constant(cls, value: float) -> "SigmaSpec":
        return cls(kind=SigmaKind.CONSTANT, amplitude=value, K=abs(value), delta_bar=0.0)

    @classmethod
    def power(
        cls,
        amplitude: float,
        mprime: float,
        K: float = 0.0,
        delta: Optional[float] = None,
        delta_bar: Optional[float] = None,
    ) -> "SigmaSpec":
        """amplitude * r^[mprime].

        With mprime = (m+1)/2 the exact constants are K = 0 and delta = delta_bar = |amplitude|.
        """
        return cls(
            kind=SigmaKind.POWER,
            amplitude=amplitude,
            mprime=mprime,
            K=K,
            delta=abs(amplitude) if delta is None else delta,
            delta_bar=delta_bar,
        )

    @classmethod
    def sqrt_positive_part(cls, amplitude: float = 1.0, K: float = 0.0, delta: float = 0.0) -> "SigmaSpec":
        return cls(kind=SigmaKind.SQRT_POSITIVE_PART, amplitude=amplitude, K=K, delta=delta)

    @classmethod
    def table(
        cls,
        r: Tuple[float, ...],
        sigma: Tuple[float, ...],
        K: float = 0.0,
        delta: float = 0.0,
        delta_bar: Optional[float] = None,
    ) -> "SigmaSpec":
        return cls(
            kind=SigmaKind.TABLE,
            table_r=tuple(float(v) for v in r),
            table_sigma=tuple(float(v) for v in sigma),
            K=K,
            delta=delta,
            delta_bar=delta_bar,
        )

    @property
    def is_zero(self) -> bool:
        if self.kind == SigmaKind.TABLE:
            return not any(self.table_sigma)
        return self.amplitude == 0.0

    def __call__(self, x: np.ndarray, r: np.ndarray) -> np.ndarray:
        """Evaluate sigma(x, r) with numpy broadcasting. No kind depends on x yet; x only fixes the shape."""
        r = np.asarray(r, dtype=np.float64)
        x = np.asarray(x, dtype=np.float64)
        if self.kind == SigmaKind.CONSTANT:
            values = np.full(np.broadcast(x, r).shape, self.amplitude)
        elif self.kind == SigmaKind.POWER:
            values = self.amplitude * signed_power(r, self.mprime)
        elif self.kind == SigmaKind.SQRT_POSITIVE_PART:
            values = self.amplitude * np.sqrt(np.maximum(r, 0.0))
        else:
            values = np.interp(r, self.table_r, self.table_sigma)
        return np.broadcast_to(values, np.broadcast(x, r).shape)
