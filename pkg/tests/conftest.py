from pathlib import Path

import numpy as np
import pytest

from qmac import channels as ch

DATA = Path(__file__).parent / "data"


def random_state(rng, d, rank=None):
    a = rng.normal(size=(d, rank or d)) + 1j * rng.normal(size=(d, rank or d))
    m = a @ a.conj().T
    return m / np.trace(m).real


def random_simplex(rng, *shape):
    p = rng.random(shape) + 1e-3
    return p / p.sum(axis=-1, keepdims=True)


def xor_table():
    t = np.zeros((2, 2, 2, 2))
    for a in range(2):
        for b in range(2):
            t[a, b, a ^ b, a ^ b] = 1.0
    return t


def uniform_ensemble(nx1=2, nx2=2):
    return ch.EnsembleSpec(p_x1=np.full((1, nx1), 1 / nx1), p_x2=np.full((1, nx2), 1 / nx2), p_u=np.array([1.0]))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def xor_spec():
    return ch.CqMacSpec(xor_table(), "noiseless")


@pytest.fixture
def data_dir():
    return DATA


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS.values():
            terminalreporter.write_line(line)
