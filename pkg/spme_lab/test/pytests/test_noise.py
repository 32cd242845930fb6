# Copyright (c) 2026 spme_lab contributors. See LICENSE file for more info.

"""
Tests to check the reproducibility and the statistics of the truncated white noise.
"""

import itertools
import math

import numpy as np
import pytest
import scipy.stats

from spme_lab.noise import NoiseConfig, derive_stream, increments_at, modal_sum_array, noise_field
from spme_lab.sigma import SigmaSpec
from spme_lab.spectral import GridFunction, grid_nodes


def test_identical_configs_give_identical_increments() -> None:
    cfg = NoiseConfig(n_modes=16, dt=1e-3, master_seed=42, path_index=3)
    first = [inc.dw for inc in itertools.islice(derive_stream(cfg), 10)]
    second = [inc.dw for inc in itertools.islice(derive_stream(cfg), 10)]
    assert all(np.array_equal(a, b) for a, b in zip(first, second))


def test_random_access_matches_stream() -> None:
    cfg = NoiseConfig(n_modes=8, dt=1e-2, master_seed=5)
    streamed = list(itertools.islice(derive_stream(cfg), 6))
    assert np.array_equal(increments_at(cfg, 5).dw, streamed[5].dw)
    assert streamed[5].step_index == 5


def test_prefix_modes_do_not_depend_on_mode_count() -> None:
    small = increments_at(NoiseConfig(n_modes=4, dt=1e-2, master_seed=5), 2)
    large = increments_at(NoiseConfig(n_modes=16, dt=1e-2, master_seed=5), 2)
    assert np.array_equal(small.dw, large.dw[:4])


def test_paths_and_seeds_differ() -> None:
    cfg = NoiseConfig(n_modes=8, dt=1e-2, master_seed=5)
    assert not np.array_equal(increments_at(cfg, 0).dw, increments_at(cfg.for_path(1), 0).dw)
    other_seed = NoiseConfig(n_modes=8, dt=1e-2, master_seed=6)
    assert not np.array_equal(increments_at(cfg, 0).dw, increments_at(other_seed, 0).dw)


def test_variable_step_rescales_the_same_normals() -> None:
    cfg = NoiseConfig(n_modes=8, dt=1e-2, master_seed=11)
    stream = derive_stream(cfg)
    assert np.allclose(stream.draw(3, 4e-2).dw, 2.0 * increments_at(cfg, 3).dw, rtol=1e-14)


def test_increments_are_read_only() -> None:
    inc = increments_at(NoiseConfig(n_modes=2, dt=1.0, master_seed=0), 0)
    with pytest.raises(ValueError):
        inc.dw[0] = 0.0


def test_increment_moments() -> None:
    """
    10^6 normalized increments have mean 0 and variance 1.
    """
    dt = 1e-3
    cfg = NoiseConfig(n_modes=10_000, dt=dt, master_seed=20240611)
    samples = np.concatenate([increments_at(cfg, step).dw for step in range(100)]) / math.sqrt(dt)
    assert abs(float(np.mean(samples))) < 4.0 / math.sqrt(samples.size)
    assert float(np.var(samples)) == pytest.approx(1.0, rel=1e-2)


def test_increments_are_gaussian() -> None:
    dt = 0.25
    cfg = NoiseConfig(n_modes=1000, dt=dt, master_seed=1)
    samples = np.concatenate([increments_at(cfg, step).dw for step in range(100)]) / math.sqrt(dt)
    assert scipy.stats.kstest(samples, "norm").pvalue > 1e-3


def test_modes_and_steps_are_uncorrelated() -> None:
    cfg = NoiseConfig(n_modes=2, dt=1.0, master_seed=99)
    draws = np.array([increments_at(cfg, step).dw for step in range(20_000)])
    bound = 4.0 / math.sqrt(draws.shape[0])
    assert abs(float(np.mean(draws[:, 0] * draws[:, 1]))) < bound
    assert abs(float(np.mean(draws[1:, 0] * draws[:-1, 0]))) < bound


def test_modal_sum_of_single_mode() -> None:
    J = 15
    dw = np.array([0.5])
    assert np.allclose(modal_sum_array(dw, J), 0.5 * math.sqrt(2.0) * np.sin(np.pi * grid_nodes(J)), atol=1e-12)


def test_modal_sum_rejects_unresolved_modes() -> None:
    with pytest.raises(ValueError):
        modal_sum_array(np.zeros(9), 8)


def test_noise_field_with_constant_sigma() -> None:
    J = 15
    inc = increments_at(NoiseConfig(n_modes=1, dt=1e-2, master_seed=3), 0)
    field = noise_field(GridFunction(np.zeros(J)), SigmaSpec.constant(1.0), inc)
    assert np.allclose(field.values, inc.dw[0] * math.sqrt(2.0) * np.sin(np.pi * grid_nodes(J)), atol=1e-12)


def test_noise_field_vanishes_where_sigma_does() -> None:
    J = 15
    inc = increments_at(NoiseConfig(n_modes=8, dt=1e-2, master_seed=3), 0)
    v = np.where(grid_nodes(J) < 0.5, 0.0, 1.0)
    field = noise_field(GridFunction(v), SigmaSpec.sqrt_positive_part(), inc)
    assert np.all(field.values[v == 0.0] == 0.0)
    assert np.all(noise_field(GridFunction(v), SigmaSpec.zero(), inc).values == 0.0)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"n_modes": 0, "dt": 1.0, "master_seed": 0},
        {"n_modes": 1, "dt": 0.0, "master_seed": 0},
        {"n_modes": 1, "dt": 1.0, "master_seed": -1},
        {"n_modes": 1, "dt": 1.0, "master_seed": 0, "path_index": -1},
    ],
)
def test_invalid_noise_configs(kwargs: dict) -> None:
    with pytest.raises(ValueError):
        NoiseConfig(**kwargs)


def test_negative_step_is_rejected() -> None:
    with pytest.raises(ValueError):
        increments_at(NoiseConfig(n_modes=1, dt=1.0, master_seed=0), -1)
