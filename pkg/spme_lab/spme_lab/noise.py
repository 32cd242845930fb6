# Copyright (c) 2026 spme_lab contributors. See LICENSE file for more info.

"""
Reproducible truncated space-time white noise.

Increments are drawn from a counter-based Philox generator keyed by (master_seed, path_index) whose counter is
positioned at the step index, so every increment is a function of (master_seed, path_index, step_index, mode)
alone and ensembles reproduce bit for bit under any parallel schedule.
"""

import math
from dataclasses import dataclass, replace
from typing import Iterator, Optional

import numpy as np

from spme_lab.sigma import SigmaSpec
from spme_lab.spectral import GridFunction, inverse_array, pad_coeffs

_U64 = 1 << 64


@dataclass(frozen=True)
class NoiseConfig:
    n_modes: int
    dt: float
    master_seed: int
    path_index: int = 0

    def __post_init__(self) -> None:
        if self.n_modes < 1:
            raise ValueError(f"Noise needs at least one mode, got n_modes={self.n_modes}")
        if not (math.isfinite(self.dt) and self.dt > 0.0):
            raise ValueError(f"Noise time step must be finite and positive, got {self.dt}")
        if not 0 <= self.master_seed < _U64:
            raise ValueError(f"master_seed must be an unsigned 64-bit integer, got {self.master_seed}")
        if not 0 <= self.path_index < _U64:
            raise ValueError(f"path_index must be a nonnegative 64-bit integer, got {self.path_index}")

    def for_path(self, path_index: int) -> "NoiseConfig":
        return replace(self, path_index=path_index)


@dataclass(frozen=True, eq=False)
class WienerIncrements:
    dw: np.ndarray
    step_index: int
    dt: float

    @property
    def n_modes(self) -> int:
        return int(self.dw.size)


def _standard_normals(cfg: NoiseConfig, step_index: int) -> np.ndarray:
    # key words: (master_seed, path_index); counter word 1 holds the step, word 0 is consumed by the draws
    bit_generator = np.random.Philox(key=cfg.master_seed + (cfg.path_index << 64), counter=step_index << 64)
    return np.random.Generator(bit_generator).standard_normal(cfg.n_modes)


def increments_at(cfg: NoiseConfig, step_index: int, dt: Optional[float] = None) -> WienerIncrements:
    """The increments of step `step_index`, scaled to the step length `dt` (defaults to cfg.dt).

    Mode k of a step depends only on (master_seed, path_index, step_index, k), so steps may be drawn in any order.
    """
    if step_index < 0:
        raise ValueError(f"step_index must be nonnegative, got {step_index}")
    dt = cfg.dt if dt is None else dt
    if not dt > 0.0:
        raise ValueError(f"Increment time step must be positive, got {dt}")
    dw = math.sqrt(dt) * _standard_normals(cfg, step_index)
    dw.setflags(write=False)
    return WienerIncrements(dw=dw, step_index=step_index, dt=dt)


class IncrementStream:
    """Stream of WienerIncrements for steps 0, 1, 2, ... of one path.

    Iterating yields increments with the configured dt; `draw` serves callers with variable step lengths.
    """

    def __init__(self, cfg: NoiseConfig) -> None:
        self.cfg = cfg
        self._next_step = 0

    def __iter__(self) -> Iterator[WienerIncrements]:
        return self

    def __next__(self) -> WienerIncrements:
        increments = increments_at(self.cfg, self._next_step)
        self._next_step += 1
        return increments

    def draw(self, step_index: int, dt: float) -> WienerIncrements:
        return increments_at(self.cfg, step_index, dt)


def derive_stream(cfg: NoiseConfig) -> IncrementStream:
    return IncrementStream(cfg)


def modal_sum_array(dw: np.ndarray, J: int) -> np.ndarray:
    """Grid values of sum_{k <= n} e^k(x_j) dw_k, via the inverse sine transform of dw zero-padded to J."""
    if dw.size > J:
        raise ValueError(f"Noise drives {dw.size} modes but the grid only resolves J = {J}")
    return inverse_array(pad_coeffs(dw, J))


def noise_field(v: GridFunction, sigma: SigmaSpec, inc: WienerIncrements) -> GridFunction:
    """sigma(x_j, v_j) sum_{k <= n} e^k(x_j) dw_k."""
    return GridFunction(sigma(v.nodes, v.values) * modal_sum_array(inc.dw, v.J))
