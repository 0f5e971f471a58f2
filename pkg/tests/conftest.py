"""Long transcripts shared across test modules; each is built once per session."""

import pytest

from tripartite.engine import COMPUTATIONAL, FOURIER, EveStrategy, run_qkd, run_secret_sharing
from tripartite.optics import sorter_basis, three_port_basis

ROUNDS = 100_000


@pytest.fixture(scope="session")
def secret_sharing_run():
    return run_secret_sharing(ROUNDS, seed=2024)


@pytest.fixture(scope="session")
def fourier_only_run():
    return run_secret_sharing(ROUNDS, seed=31, basis_set=(FOURIER,))


@pytest.fixture(scope="session")
def optical_secret_sharing_run():
    meas = {COMPUTATIONAL: sorter_basis(), FOURIER: three_port_basis()}
    return run_secret_sharing(ROUNDS, seed=2025, measurements=meas)


@pytest.fixture(scope="session")
def qkd_fixed_run():
    return run_qkd(ROUNDS, seed=7)


@pytest.fixture(scope="session")
def qkd_random_run():
    return run_qkd(ROUNDS, seed=8, subspace_policy="random")


@pytest.fixture(scope="session")
def qkd_eve_run():
    return run_qkd(ROUNDS, seed=9, eve=EveStrategy.from_policy(1, "random"))
