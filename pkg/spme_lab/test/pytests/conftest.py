# Copyright (c) 2026 spme_lab contributors. See LICENSE file for more info.

"""
Module containing test fixtures.
Pytest automatically discovers all fixtures defined in the file "conftest.py".
"""

# When a test needs a fixture, it must specify the fixture name as a parameter.
# In doings so, Pylint raises an incorrect warning about a name being redefined,
# warning that we want disabled.
# pylint: disable=redefined-outer-name

import pathlib
import typing

import numpy as np
import pytest
import yaml

from spme_lab.params import ROOT_KEY
from spme_lab.sigma import SigmaSpec
from spme_lab.solver import DtPolicy, SolverConfig

TEST_PATH = pathlib.Path(__file__).parent
CONFIG_PATH = TEST_PATH.parent.parent / "config"

ConfigWriter = typing.Callable[[typing.Dict[str, typing.Any]], str]


@pytest.fixture
def rng() -> np.random.Generator:
    """
    A seeded generator, so statistical assertions are deterministic.
    """
    return np.random.default_rng(20240611)


@pytest.fixture
def small_J() -> int:
    """
    Grid size for unit tests. J + 1 is a power of two, so the fast transform is exercised.
    """
    return 31


@pytest.fixture
def deterministic_config(small_J: int) -> SolverConfig:
    """
    Porous medium flow without noise on the small grid, recorded at three times.
    """
    return SolverConfig(
        m=2.0,
        nu=0.01,
        n_modes=4,
        J=small_J,
        T=0.01,
        dt_policy=DtPolicy.fixed(1e-4),
        record_times=(0.0, 0.005, 0.01),
    )


@pytest.fixture
def stochastic_config(small_J: int) -> SolverConfig:
    """
    Small multiplicative-noise configuration, sigma(r) = 0.1 r^[3/2], inside every smallness regime.
    """
    return SolverConfig(
        m=2.0,
        nu=0.01,
        n_modes=8,
        J=small_J,
        T=0.01,
        dt_policy=DtPolicy.fixed(1e-4),
        sigma=SigmaSpec.power(0.1, 1.5, delta_bar=0.1),
        record_times=(0.0, 0.005, 0.01),
        master_seed=7,
    )


@pytest.fixture
def write_config(tmp_path: pathlib.Path) -> ConfigWriter:
    """
    Factory writing a `spme_lab` config file holding the given sections into the temporary directory.
    """

    def write(sections: typing.Dict[str, typing.Any]) -> str:
        path = tmp_path / "config.yaml"
        path.write_text(yaml.safe_dump({ROOT_KEY: sections}))
        return str(path)

    return write


@pytest.fixture
def tiny_sections() -> typing.Dict[str, typing.Any]:
    """
    Config sections small enough for every subcommand to finish in seconds.
    """
    return {
        "solver": {
            "J": 31,
            "n_modes": 8,
            "T": 0.01,
            "dt_policy": "fixed",
            "dt": 1.0e-4,
            "record_count": 3,
            "nu": 0.01,
        },
        "initial": {"kind": "bump", "center": 0.5, "width": 0.2, "mass": 1.0},
        "sigma": {"kind": "power", "amplitude": 0.05},
        "ensemble": {"paths": 4, "batch_size": 2, "p_moments": [1.0, 2.0]},
        "particles": {
            "N": 200,
            "T": 0.01,
            "dt": 1.0e-4,
            "record_count": 3,
            "runs": 2,
            "spde_J": 31,
            "spde_paths": 2,
            "bins": 16,
        },
        "verify": {
            "samples": 1,
            "J": 15,
            "oversampling": 2,
            "m_values": [2.0],
            "betas": [0.25],
            "gammas": [-1.0],
            "pointwise_pairs": 1000,
            "krylov_terms": 1000,
        },
        "convergence": {"grid_sizes": [31, 63], "t_end": 0.01, "linear_steps": 20},
    }
