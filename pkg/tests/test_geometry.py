from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resvdw.errors import DegenerateGeometry, Singularity
from resvdw.geometry import SeparationGeometry, contract, make_tensors, radiation_kernel

finite = st.floats(-10, 10, allow_nan=False)


def tensors(direction):
    return make_tensors(SeparationGeometry(1e-6, direction))


def test_axis_aligned_tensors():
    t = tensors((0, 0, 1))
    np.testing.assert_array_equal(t.beta, np.diag([1.0, 1.0, -2.0]))
    np.testing.assert_array_equal(t.alpha, np.diag([1.0, 1.0, 0.0]))
    t = tensors((1, 0, 0))
    np.testing.assert_array_equal(t.beta, np.diag([-2.0, 1.0, 1.0]))
    np.testing.assert_array_equal(t.alpha, np.diag([0.0, 1.0, 1.0]))


@given(st.tuples(finite, finite, finite).filter(lambda v: np.linalg.norm(v) > 1e-3))
def test_traces(v):
    t = tensors(v)
    assert np.trace(t.beta) == pytest.approx(0.0, abs=1e-13)
    assert np.trace(t.alpha) == pytest.approx(2.0, abs=1e-13)
    np.testing.assert_allclose(t.alpha, t.alpha.T)


def test_kernel_at_sine_node():
    t = tensors((0, 0, 1))
    np.testing.assert_allclose(radiation_kernel(math.pi, t), t.beta * (-1 / math.pi**2), atol=1e-16)


def test_kernel_at_cosine_node():
    t = tensors((0, 0, 1))
    expected = t.alpha * (2 / math.pi) + t.beta * (-8 / math.pi**3)
    np.testing.assert_allclose(radiation_kernel(math.pi / 2, t), expected, rtol=1e-14)


def test_kernel_oblique_direction_frozen():
    # R_hat = (1, 2, 2)/3, x = 3.7; entries evaluated termwise at 30 digits
    F = radiation_kernel(3.7, tensors((1, 2, 2)))
    assert F[0, 1] == pytest.approx(0.066148801972011411, rel=1e-13)
    assert F[2, 2] == pytest.approx(-0.062391570348857937, rel=1e-13)
    np.testing.assert_allclose(F, F.T)


def test_far_field_truncation():
    t = tensors((0.3, -0.4, 0.5))
    x = 1e3
    remainder = radiation_kernel(x, t) - t.alpha * math.sin(x) / x
    assert np.max(np.abs(remainder)) < 2e-6


def test_zero_argument_refused():
    with pytest.raises(Singularity):
        radiation_kernel(0.0, tensors((0, 0, 1)))


@pytest.mark.parametrize("bad", [0.0, -1e-6, math.inf, math.nan])
def test_degenerate_distance(bad):
    with pytest.raises(DegenerateGeometry):
        SeparationGeometry(bad)


def test_degenerate_vector():
    with pytest.raises(DegenerateGeometry):
        SeparationGeometry.from_vector([0, 0, 0])
    with pytest.raises(DegenerateGeometry):
        SeparationGeometry(1.0, (0, 0, 0))


def test_from_vector():
    g = SeparationGeometry.from_vector([3e-6, 0, 4e-6])
    assert g.R == pytest.approx(5e-6)
    np.testing.assert_allclose(g.R_hat, [0.6, 0, 0.8])
    np.testing.assert_allclose(g.R_vec, [3e-6, 0, 4e-6])


def test_isotropic_contractions():
    c = contract(tensors((0, 0, 1)), 2.0, 3.0)
    assert c.mode == "isotropic-average"
    assert (c.unit_bb, c.unit_ab, c.unit_aa) == pytest.approx((2 / 3, 2 / 9, 2 / 9))
    assert c.s_bb == pytest.approx(36 * 2 / 3)


def test_fixed_orientation_contractions():
    t = tensors((0, 0, 1))
    c = contract(t, 1.0, 1.0, (0, 0, 1), (0, 0, 1))
    assert (c.unit_bb, c.unit_ab, c.unit_aa) == pytest.approx((4.0, 0.0, 0.0))
    c = contract(t, 1.0, 1.0, (1, 0, 0), (0, 1, 0))
    assert (c.unit_bb, c.unit_ab, c.unit_aa) == pytest.approx((0.0, 0.0, 0.0))


@settings(max_examples=30)
@given(st.tuples(finite, finite, finite).filter(lambda v: np.linalg.norm(v) > 1e-3),
       st.integers(0, 2**32 - 1))
def test_orientation_average_matches_isotropic(direction, seed):
    # averaging fixed-orientation contractions over many random dipoles
    rng = np.random.default_rng(seed)
    t = tensors(direction)
    a = rng.normal(size=(4000, 3))
    b = rng.normal(size=(4000, 3))
    a /= np.linalg.norm(a, axis=1)[:, None]
    b /= np.linalg.norm(b, axis=1)[:, None]
    ta = np.einsum("ni,ij,nj->n", a, t.alpha, b)
    tb = np.einsum("ni,ij,nj->n", a, t.beta, b)
    assert np.mean(tb * tb) == pytest.approx(2 / 3, abs=0.06)
    assert np.mean(ta * ta) == pytest.approx(2 / 9, abs=0.03)


def test_partial_average_symmetric_in_which_dipole():
    t = tensors((0.2, 0.1, 1.0))
    u = (0.3, -0.7, 0.2)
    one = contract(t, 1.0, 1.0, u, None)
    other = contract(t, 1.0, 1.0, None, u)
    assert one.mode == "partial-average"
    assert (one.s_bb, one.s_ab, one.s_aa) == pytest.approx((other.s_bb, other.s_ab, other.s_aa))
