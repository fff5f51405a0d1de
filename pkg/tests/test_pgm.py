import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qmac.errors import ConsistencyError, ValidationError
from qmac.pgm import build_pgm, error_probability, measure

from conftest import random_state


def helstrom(rho0, rho1):
    ev = np.linalg.eigvalsh(0.5 * rho0 - 0.5 * rho1)
    return 0.5 * (1 - np.abs(ev).sum())


def pure_pair(s2):
    a = np.array([1.0, 0.0])
    b = np.array([np.sqrt(s2), np.sqrt(1 - s2)])
    return np.outer(a, a), np.outer(b, b)


@pytest.mark.parametrize("s2", [0.0, 0.25, 0.5, 0.9])
def test_helstrom(s2):
    r0, r1 = pure_pair(s2)
    dec = build_pgm([(0, r0), (1, r1)])
    assert error_probability(dec, [r0, r1]) == pytest.approx(helstrom(r0, r1), abs=1e-12)
    assert helstrom(r0, r1) == pytest.approx((1 - np.sqrt(1 - s2)) / 2, abs=1e-12)


def test_identical_states():
    rho = np.diag([0.3, 0.7])
    for m in (2, 3, 5):
        dec = build_pgm([(i, rho) for i in range(m)])
        assert error_probability(dec, [rho] * m) == pytest.approx((m - 1) / m)


def test_single_candidate_and_orthogonal():
    rng = np.random.default_rng(0)
    dec = build_pgm([("a", np.diag([0.5, 0.5, 0.0]))])
    assert measure(dec, np.eye(3) / 3, rng) == "a"
    dec = build_pgm([(0, np.diag([1.0, 0.0])), (1, np.diag([0.0, 1.0]))])
    assert all(measure(dec, np.diag([0.0, 1.0]), rng) == 1 for _ in range(20))


def test_errors():
    with pytest.raises(ValidationError, match="no candidates"):
        build_pgm([])
    dec = build_pgm([(0, np.eye(2) / 2)])
    with pytest.raises(ConsistencyError, match="POVM inconsistency"):
        dec.probabilities(np.diag([1.0, 1.0]))


def test_born_sampling_within_three_sigma():
    r0, r1 = pure_pair(0.5)
    dec = build_pgm([(0, r0), (1, r1)])
    rho = np.eye(2) / 2 * 0.3 + 0.7 * r1
    p1 = dec.probabilities(rho)[1]
    rng = np.random.default_rng(42)
    n = 100_000
    hits = sum(1 for _ in range(n) if measure(dec, rho, rng) == 1)
    assert abs(hits / n - p1) <= 3 * np.sqrt(p1 * (1 - p1) / n)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.integers(2, 4), st.booleans())
def test_povm_complete_and_psd(seed, m, d, low_rank):
    r = np.random.default_rng(seed)
    states = [random_state(r, d, rank=1 if low_rank else None) for _ in range(m)]
    lam = build_pgm(list(enumerate(states))).povm()
    assert np.allclose(lam.sum(axis=0), np.eye(d), atol=1e-8)
    assert min(np.linalg.eigvalsh(l).min() for l in lam) >= -1e-9


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_diagonal_path_matches_dense(seed, m):
    r = np.random.default_rng(seed)
    diags = r.dirichlet(np.ones(4), size=m)
    diags[:, 3] = 0
    diags /= diags.sum(1, keepdims=True)
    fast = build_pgm([(i, d) for i, d in enumerate(diags)])
    assert fast.diagonal
    from qmac.pgm import dense_pgm
    slow = dense_pgm(list(range(m)), np.array([np.diag(d).astype(complex) for d in diags]))
    rho = np.diag(r.dirichlet(np.ones(4)))
    assert np.allclose(fast.probabilities(rho), slow.probabilities(rho), atol=1e-10)
