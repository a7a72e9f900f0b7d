import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from magpath.fourier_measure import (
    LinearVectorPotential,
    PhysicalParams,
    PointMassMeasure,
    VectorPotentialFourier,
    convolve,
    cos_field,
    coulomb_gauge_defect,
    dumps_potential,
    lambda_star,
    lambda_star_z,
    lambda_tilde,
    landau_gauge,
    loads_potential,
    sup_norm_bound,
    symmetric_gauge,
)

small = st.floats(-3, 3, allow_nan=False, width=64)
atom = st.tuples(st.tuples(small, small, small), st.complex_numbers(max_magnitude=2, allow_nan=False,
                                                                       allow_infinity=False))


def test_lambda_star_unit_values():
    assert lambda_star(1, 1, 1, 1) == pytest.approx(1 / math.sqrt(6), rel=1e-15)
    assert round(lambda_star(1, 1, 1, 1), 5) == 0.40825


def test_lambda_star_z_matches_real_time_radius():
    for t, hbar in [(1, 1), (0.3, 2.0), (2.5, 0.7)]:
        assert lambda_star_z(1.3, 0.8, hbar, 1j * t / hbar) == pytest.approx(lambda_star(1.3, 0.8, t, hbar))


def test_lambda_tilde_formula():
    at, r, t, hbar = 2.0, 1.5, 0.5, 0.8
    expected = 1 / math.sqrt(2 * at**2 * t / hbar * (2 * r**2 * t / hbar + 1))
    assert lambda_tilde(at, 1.0, r, t, hbar) == pytest.approx(expected)


def test_radius_rejects_nonpositive():
    with pytest.raises(ValueError):
        lambda_star(0, 1, 1, 1)
    with pytest.raises(ValueError):
        lambda_star_z(1, 1, 1, 0)


def test_cos_field_values_and_bounds():
    pot = cos_field()
    x = np.array([[0.1, 0.7, -2.0], [3.0, -1.2, 0.0]])
    vals = pot(x)
    assert np.allclose(vals[:, 0], np.cos(x[:, 1]))
    assert np.allclose(vals[:, 1:], 0)
    bound, sampled = sup_norm_bound(pot)
    assert bound == pytest.approx(1.0)
    assert sampled == pytest.approx(1.0)
    assert coulomb_gauge_defect(pot) == 0.0


def test_divergence_defect_detects_gradient_field():
    pot = cos_field(component=0, axis=0)
    assert coulomb_gauge_defect(pot) > 0.5
    x = np.array([[0.4, 0, 0]])
    assert pot.divergence(x)[0] == pytest.approx(-math.sin(0.4))


def test_complex_evaluation_is_analytic_continuation():
    pot = cos_field(amplitude=2.0, freq=1.5)
    z = np.array([[0.2 + 0.3j, 0.5 - 1.1j, 0.0]])
    assert pot(z)[0, 0] == pytest.approx(2 * np.cos(1.5 * z[0, 1]))


def test_realness_flag_is_checked():
    with pytest.raises(ValueError):
        VectorPotentialFourier.from_components({0: [((1, 0, 0), 1.0)]})
    VectorPotentialFourier.from_components({0: [((1, 0, 0), 1.0)]}, realness=False)


def test_support_radius_is_enforced():
    with pytest.raises(ValueError):
        PointMassMeasure.from_atoms([((2, 0, 0), 1.0)], support_radius=1.0)


@given(st.lists(atom, min_size=1, max_size=5), st.lists(atom, min_size=1, max_size=5))
def test_convolution_transform_is_product(a, b):
    mu, nu = PointMassMeasure.from_atoms(a), PointMassMeasure.from_atoms(b)
    z = np.array([[0.3, -0.2, 0.9], [1.1, 0.4, -0.5]])
    assert np.allclose(convolve(mu, nu)(z), mu(z) * nu(z), atol=1e-9)
    assert convolve(mu, nu).support_radius == pytest.approx(mu.support_radius + nu.support_radius)


@given(st.lists(atom, min_size=0, max_size=4), st.lists(atom, min_size=0, max_size=4))
def test_fourier_potential_text_roundtrip(a, b):
    pot = VectorPotentialFourier.from_components({0: a, 2: b}, realness=False)
    back = loads_potential(dumps_potential(pot))
    assert dumps_potential(back) == dumps_potential(pot)
    for m1, m2 in zip(pot.mu, back.mu):
        assert np.array_equal(m1.freqs, m2.freqs)
        assert np.array_equal(m1.weights, m2.weights)


@given(st.lists(small, min_size=9, max_size=9), st.tuples(small, small, small))
def test_linear_potential_text_roundtrip(alpha, offset):
    pot = LinearVectorPotential(np.reshape(alpha, (3, 3)), offset)
    back = loads_potential(dumps_potential(pot))
    assert np.array_equal(back.alpha, pot.alpha)
    assert np.array_equal(back.offset, pot.offset)


def test_gauges_share_field():
    assert np.allclose(symmetric_gauge(2.0).B_field, [0, 0, 2.0])
    assert np.allclose(landau_gauge(2.0).B_field, [0, 0, 2.0])
    assert symmetric_gauge(1.0).t_star == pytest.approx(math.pi / 2)


@given(st.lists(small, min_size=9, max_size=9))
def test_B_field_is_curl(alpha):
    pot = LinearVectorPotential(np.reshape(alpha, (3, 3)))
    a = pot.alpha
    antisym = a - a.T
    B = pot.B_field
    assert np.allclose(antisym, [[0, -B[2], B[1]], [B[2], 0, -B[0]], [-B[1], B[0], 0]])


def test_params_points_shape():
    p = PhysicalParams(1.0, 1.0, 0.0, ((0, 0, 0), (1, 2, 3)))
    assert p.points.shape == (2, 3)
    assert p.c_scale == pytest.approx(np.sqrt(1j))
    with pytest.raises(ValueError):
        PhysicalParams(0.0, 1.0)
