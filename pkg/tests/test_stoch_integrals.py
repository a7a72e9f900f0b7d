import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.polynomial import hermite_e
from scipy import integrate

from magpath.cameron_martin import GridPath, brownian_paths, sample_brownian
from magpath.fourier_measure import SQRT_I, LinearVectorPotential, VectorPotentialFourier, cos_field
from magpath.stoch_integrals import (
    QuadratureRule,
    correction_batch,
    cylinder_fresnel_left,
    cylinder_fresnel_limit_right,
    cylinder_fresnel_right,
    gaussian_osc_moment,
    line_integral,
    line_integral_riemann,
    riemann_batch,
    stratonovich_corrected,
)

DELTA = VectorPotentialFourier.from_components({0: [((1.0, 0, 0), 1.0)]}, realness=False)


def _loop_sum(a, values, rule, c, x):
    total = 0j
    for j in range(len(values) - 1):
        if rule == "left":
            p = values[j]
        elif rule == "right":
            p = values[j + 1]
        else:
            p = 0.5 * (values[j] + values[j + 1])
        total += a(c * p + x) @ (values[j + 1] - values[j])
    return total


@pytest.mark.parametrize("rule", ["left", "right", "midpoint"])
def test_batch_matches_plain_loop(rule):
    pot = VectorPotentialFourier.from_components(
        {0: [((0, 1, 0), 0.5), ((0, -1, 0), 0.5)], 2: [((1, 1, 0), 0.3j), ((-1, -1, 0), -0.3j)]})

    def a(z):
        return np.array([np.cos(z[1]), 0, -0.6 * np.sin(z[0] + z[1])])

    paths = brownian_paths(20, 1.0, 2, [0, 1])
    x = np.array([[0.3, -0.4, 1.0], [0, 0, 0]])
    c = SQRT_I
    got = riemann_batch(pot, paths, rule, c, x)
    for b in range(2):
        for p in range(2):
            assert got[b, p] == pytest.approx(_loop_sum(a, paths[b], rule, c, x[p]), rel=1e-12)


def test_linear_midpoint_is_exact_polygon_integral():
    alpha = np.array([[0.0, -1.0, 0.2], [1.0, 0.5, 0], [0, 0.3, -0.5]])
    pot = LinearVectorPotential(alpha, (0.1, 0, 0))
    p = sample_brownian(40, 1.0, 3, 0)
    exact = 0.0
    for j in range(p.n):
        u, v = p.values[j], p.values[j + 1]
        exact += integrate.quad(lambda s: (alpha @ (u + s * (v - u)) + pot.offset) @ (v - u), 0, 1)[0]
    assert line_integral_riemann(pot, p, "midpoint").real == pytest.approx(exact, rel=1e-10)


def test_left_right_differ_by_quadratic_variation():
    # a = (0, x1, 0): right - left = sum dx1 dx2, which vanishes on average
    pot = LinearVectorPotential([[0, 0, 0], [1, 0, 0], [0, 0, 0]])
    paths = brownian_paths(64, 1.0, 0, np.arange(4))
    inc = np.diff(paths, axis=1)
    diff = riemann_batch(pot, paths, "right")[:, 0] - riemann_batch(pot, paths, "left")[:, 0]
    assert np.allclose(diff, np.sum(inc[..., 0] * inc[..., 1], axis=1))


def test_divergence_free_correction_vanishes():
    paths = brownian_paths(16, 1.0, 0, [0])
    assert np.allclose(correction_batch(cos_field(), paths, 1 / 16), 0)


def test_corrected_rule_approaches_midpoint_for_gradient_field():
    # a = (sin x1, 0, 0) is a gradient; Stratonovich value is 1 - cos(omega_1(t))
    pot = VectorPotentialFourier.from_components({0: [((1, 0, 0), -0.5j), ((-1, 0, 0), 0.5j)]})
    p = sample_brownian(2**14, 1.0, 11, 0)
    exact = 1 - math.cos(p.end[0])
    assert stratonovich_corrected(pot, p).real == pytest.approx(exact, abs=2e-2)
    assert line_integral_riemann(pot, p, "midpoint").real == pytest.approx(exact, abs=1e-6)
    left = line_integral_riemann(pot, p, "left").real
    assert abs(left - exact) > 0.05
    got = line_integral(pot, p.values[None], p.dt, QuadratureRule.CORRECTED)[0, 0]
    assert got == pytest.approx(stratonovich_corrected(pot, p))


def test_scale_factor_in_correction_matters():
    pot = LinearVectorPotential(np.eye(3))
    p = sample_brownian(8, 1.0, 0, 0)
    c = SQRT_I
    with_c = correction_batch(pot, p.values[None], p.dt, c)
    without = correction_batch(pot, p.values[None], p.dt, c, carry_scale=False)
    assert with_c[0, 0] == pytest.approx(1.5 * c)
    assert without[0, 0] == pytest.approx(1.5)


def test_left_closed_form_is_zero():
    for n in (1, 7, 64):
        assert cylinder_fresnel_left(DELTA, n, 1.0, 1.0) == 0


def test_right_closed_form_matches_complex_path_average():
    # E[c * right sum] over rescaled Brownian paths with c = sqrt(i)
    c = SQRT_I
    paths = brownian_paths(8, 1.0, 5, np.arange(100_000))
    vals = c * riemann_batch(DELTA, paths, "right", c)[:, 0]
    mean = vals.mean()
    se = math.hypot(vals.real.std(), vals.imag.std()) / math.sqrt(len(vals))
    assert abs(mean - cylinder_fresnel_right(DELTA, 8, 1.0, 1.0)) < 4 * se


def test_right_closed_form_limit():
    # direct integral -hbar * int_0^t exp(-i hbar s / 2) ds for |k| = 1
    t, hbar = 1.3, 0.7
    re = integrate.quad(lambda s: -hbar * math.cos(hbar * s / 2), 0, t)[0]
    im = integrate.quad(lambda s: hbar * math.sin(hbar * s / 2), 0, t)[0]
    assert cylinder_fresnel_limit_right(DELTA, t, hbar) == pytest.approx(complex(re, im), rel=1e-12)
    assert abs(cylinder_fresnel_right(DELTA, 4096, t, hbar) - complex(re, im)) < 1e-3


@given(st.floats(-2, 2, allow_nan=False), st.integers(0, 4))
def test_gaussian_moment_matches_quadrature(zeta, k):
    # Gauss-Hermite rule for the weight exp(-x^2/2); converges to rounding here
    x, w = hermite_e.hermegauss(120)
    u = 1j * SQRT_I * zeta
    expected = np.sum(w * np.exp(u * x) * x ** (2 * k)) / math.sqrt(2 * math.pi)
    assert gaussian_osc_moment(zeta, k) == pytest.approx(expected, abs=1e-10, rel=1e-10)


def test_grid_path_batch_agree():
    p = GridPath(1.0, np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0]], dtype=float))
    pot = LinearVectorPotential([[0, -0.5, 0], [0.5, 0, 0], [0, 0, 0]])
    # midpoint rule on the two segments: 0 + (0.5 * 1) * 1
    assert line_integral_riemann(pot, p, "midpoint") == pytest.approx(0.5)
