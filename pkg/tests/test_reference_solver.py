import io

import numpy as np
import pytest

from magpath.fourier_measure import cos_field, landau_gauge, symmetric_gauge
from magpath.reference_solver import (
    GaussianPacket,
    GridState,
    StabilityError,
    evolve,
    gauge_transform,
    load_state,
    probe,
    save_state,
)

PTS = np.array([[0.0, 0.0, 0.0], [0.7, -0.4, 0.0], [-1.1, 0.9, 0.0]])


def _free_gaussian(sigma, center, p, t, hbar, x):
    out = np.ones(len(x), dtype=complex)
    for j in range(2):
        s2 = sigma**2 + 1j * hbar * t
        u = x[:, j] - center[j] - hbar * p[j] * t
        out *= np.sqrt(sigma**2 / s2) * np.exp(-u**2 / (2 * s2) + 1j * p[j] * x[:, j]
                                                - 0.5j * hbar * p[j] ** 2 * t)
    return out


def test_free_gaussian_closed_form():
    g = GaussianPacket(sigma=1.0, center=(0.3, -0.2, 0), momentum=(0.5, 0.2, 0))
    st = GridState.from_function(g, 12.0, 128)
    out = evolve(st, None, 0.0, 0.8, 20, hbar=1.3)
    exact = _free_gaussian(1.0, (0.3, -0.2), (0.5, 0.2), 0.8, 1.3, PTS)
    assert np.allclose(probe(out, PTS), exact, atol=1e-10)


def test_lowest_landau_level_phase():
    g = GaussianPacket(sigma=np.sqrt(2.0))
    st = GridState.from_function(g, 12.0, 128)
    out = evolve(st, symmetric_gauge(1.0), 1.0, 0.5, 200)
    assert np.allclose(probe(out, PTS), np.exp(-0.25j) * g(PTS), atol=1e-6)


def test_imaginary_time_heat_kernel():
    g = GaussianPacket(sigma=1.0)
    st = GridState.from_function(g, 12.0, 128)
    out = evolve(st, None, 0.0, 0.5, 10, imaginary_time=True)
    # exp(t Laplacian / 2) of exp(-|x|^2/2) is (1 + t)^-1 exp(-|x|^2 / (2 (1 + t)))
    r2 = np.sum(PTS[:, :2] ** 2, axis=1)
    assert np.allclose(probe(out, PTS), np.exp(-r2 / 3) / 1.5, atol=1e-10)


def test_norm_is_conserved():
    g = GaussianPacket(sigma=1.0, center=(0.5, 0, 0), momentum=(1, 0, 0))
    st = GridState.from_function(g, 12.0, 128)
    out = evolve(st, symmetric_gauge(1.0), 1.0, 1.0, 100)
    assert abs(out.norm - st.norm) < 1e-8


def test_gauge_covariance_symmetric_vs_landau():
    # a_sym = a_landau + grad(x1 x2 / 2) for B = 1
    def chi(p):
        return 0.5 * p[..., 0] * p[..., 1]

    def grad(p):
        out = np.zeros(np.shape(p))
        out[..., 0] = 0.5 * p[..., 1]
        out[..., 1] = 0.5 * p[..., 0]
        return out

    g = GaussianPacket(sigma=0.8, momentum=(0.3, 0, 0))
    st = GridState.from_function(g, 12.0, 256)
    landau = evolve(st, landau_gauge(1.0), 1.0, 0.5, 200)
    moved, pot = gauge_transform(st, landau_gauge(1.0), (chi, grad), 1.0)
    sym = evolve(moved, symmetric_gauge(1.0), 1.0, 0.5, 200)
    phase = np.exp(1j * chi(PTS))
    assert np.allclose(probe(sym, PTS), phase * probe(landau, PTS), atol=1e-5)
    assert np.allclose(pot(PTS), symmetric_gauge(1.0)(PTS))


def test_linear_gauge_keeps_linear_potential():
    st = GridState.from_function(GaussianPacket(), 8.0, 64)
    _, pot = gauge_transform(st, symmetric_gauge(1.0), np.array([0.2, 0.0, 0.0]), 1.0)
    assert np.allclose(pot.offset, [0.2, 0, 0])


def test_step_doubling_converges():
    g = GaussianPacket(sigma=1.0, momentum=(0.4, -0.3, 0))
    st = GridState.from_function(g, 12.0, 128)
    a = probe(evolve(st, symmetric_gauge(1.0), 1.0, 0.5, 50), PTS)
    b = probe(evolve(st, symmetric_gauge(1.0), 1.0, 0.5, 100), PTS)
    c = probe(evolve(st, symmetric_gauge(1.0), 1.0, 0.5, 200), PTS)
    assert np.max(np.abs(b - c)) < 0.3 * np.max(np.abs(a - b))


def test_structure_checks():
    st = GridState.from_function(GaussianPacket(), 8.0, 64)
    with pytest.raises(ValueError):
        evolve(st, cos_field(0, 0), 1.0, 0.1, 1)
    with pytest.raises(StabilityError):
        evolve(st, cos_field(0, 1, freq=20.0), 1.0, 0.1, 1)
    with pytest.raises(ValueError):
        GridState(1.0, np.zeros((6, 6)))


def test_state_io_roundtrip():
    st = GridState.from_function(GaussianPacket(momentum=(1, 0, 0)), 8.0, 32, time=0.25)
    buf = io.BytesIO()
    save_state(st, buf)
    buf.seek(0)
    back = load_state(buf)
    assert np.array_equal(back.values, st.values)
    assert back.L == 8.0 and back.time == 0.25
