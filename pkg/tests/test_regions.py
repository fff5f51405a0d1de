import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qmac import channels as ch
from qmac import regions as rg
from qmac.errors import ConsistencyError, ShapeError, ValidationError
from qmac.quantum_core import Instrument

from conftest import random_simplex, random_state, uniform_ensemble, xor_table


def g_oracle(x):
    return 0.0 if x == 0 else (x + 1) * math.log2(x + 1) - x * math.log2(x)


def random_cq(r, nx1=2, nx2=2, d=2, crib="noiseless"):
    tab = np.array([[random_state(r, d) for _ in range(nx2)] for _ in range(nx1)])
    return ch.CqMacSpec(tab, crib)


def random_ens(r, cu=2, nx1=2, nx2=2):
    return ch.EnsembleSpec(p_x1=random_simplex(r, cu, nx1), p_x2=random_simplex(r, cu, nx2), p_u=random_simplex(r, cu))


def test_xor_bounds(xor_spec):
    ens = uniform_ensemble()
    for kind in ("none", "cq_noiseless_sc", "df_sc"):
        b = rg.eval_region(kind, xor_spec, ens)
        assert (b.b1, b.b2, b.b12) == pytest.approx((1, 1, 1), abs=1e-12)


def test_point_mass_inputs_give_zero(xor_spec):
    ens = ch.EnsembleSpec(p_x1=[[1.0, 0.0]], p_x2=[[0.0, 1.0]], p_u=[1.0])
    for kind in ("none", "cq_noiseless_sc", "cutset", "det_crib", "df_sc"):
        b = rg.eval_region(kind, xor_spec, ens)
        assert max(b.b1, b.b2, b.b12) == pytest.approx(0.0, abs=1e-12)


def test_shape_errors(xor_spec):
    with pytest.raises(ShapeError, match="ensemble shape error"):
        rg.eval_region("df_caus", xor_spec, uniform_ensemble())
    with pytest.raises(ShapeError, match="ensemble shape error"):
        rg.eval_region("pdf_sc", xor_spec, uniform_ensemble())


def test_common_message_variant(xor_spec):
    b = rg.eval_region("none_common", xor_spec, uniform_ensemble())
    assert isinstance(b, rg.CommonRateBounds) and b.b0_sum == pytest.approx(1.0)


def test_g_values():
    assert rg.g_thermal(0) == 0.0
    assert rg.g_thermal(1) == pytest.approx(2.0, abs=1e-15)
    assert rg.g_thermal(0.5) == pytest.approx(g_oracle(0.5), abs=1e-15)
    assert rg.g_thermal(0.5) == pytest.approx(1.377444, abs=1e-6)
    with pytest.raises(ValidationError, match="domain error"):
        rg.g_thermal(-0.1)


def test_bosonic_examples():
    p = ch.BosonicParams(0.5, 0.5, 1, 1, 0)
    c, n = rg.bosonic_region(p, True), rg.bosonic_region(p, False)
    assert (c.b1, c.b2, c.b12) == pytest.approx((g_oracle(0.5), g_oracle(0.5), g_oracle(0.75)), abs=1e-12)
    assert n.b1 == pytest.approx(g_oracle(0.25), abs=1e-12)
    assert (n.b2, n.b12) == (c.b2, c.b12)
    z = rg.bosonic_region(ch.BosonicParams(0.3, 0.6, 0, 0, 0), True)
    assert (z.b1, z.b2, z.b12) == (0.0, 0.0, 0.0)


def test_bosonic_b1_monotone_in_power():
    grid = np.round(np.arange(0.1, 1.0, 0.1), 10)
    for e1 in grid:
        for e2 in grid:
            vals = [rg.bosonic_region(ch.BosonicParams(e1, e2, na, 1.0, 0.1), True).b1 for na in np.linspace(0, 5, 11)]
            assert np.all(np.diff(vals) >= -1e-12)


def test_in_region_and_corner():
    b = rg.RateBounds(0.6, 0.7, 1.0)
    assert rg.in_region(b, 0, 0)
    assert rg.in_region(b, b.b1, b.b12 - b.b1)
    assert not rg.in_region(b, b.b1 + 0.01, 0)
    assert rg.corner(b, 1.0) == pytest.approx((0.6, 0.4))
    assert rg.corner(b, 0.0) == pytest.approx((0.3, 0.7))
    assert rg.polygon(b)[0] == (0.0, 0.7)


def test_clamping_and_consistency():
    assert rg.RateBounds(-5e-9, 0, 0).b1 == 0.0
    with pytest.raises(ConsistencyError):
        rg.RateBounds(-1e-6, 0, 0)


def classical_mi(p, a_axes, b_axes, c_axes):
    """I(A;B|C) for a joint pmf array, axes given as tuples."""
    def h(axes):
        keep = tuple(sorted(axes))
        drop = tuple(i for i in range(p.ndim) if i not in keep)
        m = p.sum(axis=drop) if drop else p
        m = m[m > 0]
        return float(-(m * np.log2(m)).sum())
    a, b, c = set(a_axes), set(b_axes), set(c_axes)
    return h(a | c) + h(b | c) - h(c) - h(a | b | c)


def test_det_crib_equals_cutset_random(rng):
    for _ in range(10):
        spec = random_cq(rng, nx1=3, crib=np.eye(2)[rng.integers(0, 2, 3)])
        ens = random_ens(rng, cu=2, nx1=3)
        a, b = rg.eval_region("det_crib", spec, ens), rg.eval_region("cutset", spec, ens)
        assert (a.b1, a.b2, a.b12) == pytest.approx((b.b1, b.b2, b.b12), abs=1e-9)


def test_noiseless_sc_equals_caus_for_product(rng):
    for _ in range(10):
        spec = random_cq(rng)
        ens = random_ens(rng, cu=1)
        a = rg.eval_region("cq_noiseless_sc", spec, ens)
        prod = np.outer(ens.p_x1[0], ens.p_x2[0])
        ens2 = ch.EnsembleSpec(p_x1=ens.p_x1, p_x2=ens.p_x2, p_u=[1.0], p_x1x2=prod)
        b = rg.eval_region("cq_noiseless_caus", spec, ens2)
        assert (a.b1, a.b2, a.b12) == pytest.approx((b.b1, b.b2, b.b12), abs=1e-9)


def test_pdf_with_trivial_v_matches_private_bound(rng):
    for _ in range(10):
        spec = random_cq(rng)
        ens = random_ens(rng)
        pdf = ch.EnsembleSpec(p_x1=ens.p_x1[:, None], p_x2=ens.p_x2[:, None], p_uv=ens.p_u[:, None])
        a = rg.eval_region("pdf_sc", spec, pdf)
        b = rg.eval_region("none", spec, ens)
        assert a.b1 == pytest.approx(b.b1, abs=1e-9)


def test_table_route_matches_general_route(rng):
    spec = random_cq(rng, crib=np.array([[0.8, 0.2], [0.3, 0.7]]))
    ens = random_ens(rng)
    tables = rg.cq_tables(spec)
    P = ens.joint()
    for kind in ("none", "cutset", "df_sc"):
        vals = rg.table_bounds(kind, P, tables["sigma"], tables["eps"], tables["q"])
        b = rg.eval_region(kind, spec, ens)
        assert np.allclose(vals, [b.b1, b.b2, b.b12], atol=1e-10)


def test_df_caus_projective_instrument(rng):
    spec = random_cq(rng, crib=np.array([[0.9, 0.1], [0.2, 0.8]]))
    ens = ch.EnsembleSpec(p_x1=[[0.4, 0.6]], p_x2=random_simplex(rng, 1, 2, 2), p_u=[1.0],
                          instrument=Instrument.projective(np.eye(2)))
    b = rg.eval_region("df_caus", spec, ens)
    assert 0 <= b.b1 <= 1 + 1e-12 and b.b12 <= 1 + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_bounds_nonnegative_and_bounded(seed):
    r = np.random.default_rng(seed)
    spec = random_cq(r, crib=random_simplex(r, 2, 2))
    ens = random_ens(r, cu=int(r.integers(1, 4)))
    for kind in ("none", "cutset", "df_sc"):
        b = rg.eval_region(kind, spec, ens)
        assert min(b.b1, b.b2, b.b12) >= 0
        assert b.b12 <= 1 + 1e-9  # qubit output


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_classical_region_matches_brute_force(seed):
    r = np.random.default_rng(seed)
    w = random_simplex(r, 2, 2, 2)  # W[x1, x2, y]
    spec = ch.CqMacSpec(np.einsum("aby,yz->abyz", w, np.eye(2)) * np.eye(2)[None, None], "none")
    ens = random_ens(r)
    b = rg.eval_region("none", spec, ens)
    P = np.einsum("u,ua,ub,aby->uaby", ens.p_u, ens.p_x1, ens.p_x2, w)
    want = (classical_mi(P, (1,), (3,), (2, 0)), classical_mi(P, (2,), (3,), (1, 0)),
            classical_mi(P, (1, 2), (3,), (0,)))
    assert (b.b1, b.b2, b.b12) == pytest.approx(want, abs=1e-9)
