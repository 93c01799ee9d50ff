"""Shared fixtures: the expensive desk-scale artifacts are built once per
session and reused across test modules."""

import numpy as np
import pytest

from hamrom.basis import GreedyConfig, collect_snapshots, greedy_symplectic_basis
from hamrom.config import parameter_grid
from hamrom.integrators import integrate
from hamrom.models import GridSpec, build_nls_model, build_wave_model

WAVE_TEST_OMEGA = np.array([0.8456, 0.1320, 0.9328, 0.5809])
NLS_TEST_EPSILON = np.array([1.0932])


@pytest.fixture(scope="session")
def wave_desk_model():
    return build_wave_model(GridSpec(1.0, 100, 0.01, 30.0))


@pytest.fixture(scope="session")
def wave_desk_grid(wave_desk_model):
    return wave_desk_model.grid


@pytest.fixture(scope="session")
def wave_desk_greedy(wave_desk_model):
    cfg = GreedyConfig(
        delta=1e-9,
        parameter_grid=parameter_grid(4, 3, 0.0, 1.0),
        max_pairs=15,
        grid=wave_desk_model.grid,
        store_every=5,
    )
    return greedy_symplectic_basis(wave_desk_model, cfg)


@pytest.fixture(scope="session")
def wave_desk_fom(wave_desk_model):
    model = wave_desk_model
    return integrate(
        model,
        model.initial_state(WAVE_TEST_OMEGA),
        model.grid,
        omega=WAVE_TEST_OMEGA,
        store_every=5,
    )


@pytest.fixture(scope="session")
def wave_desk_sweep(wave_desk_model):
    return collect_snapshots(
        wave_desk_model,
        parameter_grid(4, 3, 0.0, 1.0),
        grid=wave_desk_model.grid,
        store_every=10,
    )


@pytest.fixture(scope="session")
def nls_desk_model():
    return build_nls_model(GridSpec(2.0 * np.pi / 0.11, 64, 0.01, 10.0))


@pytest.fixture(scope="session")
def nls_desk_greedy(nls_desk_model):
    cfg = GreedyConfig(
        delta=1e-9,
        parameter_grid=np.linspace(0.9, 1.1, 5).reshape(-1, 1),
        max_pairs=10,
        grid=nls_desk_model.grid,
        store_every=2,
    )
    return greedy_symplectic_basis(nls_desk_model, cfg)
