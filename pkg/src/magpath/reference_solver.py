"""Split-step Fourier solver for ``i hbar psi_t = 1/2 (-i hbar grad - lam a)^2 psi``.

Used as an independent check of the path-integral estimates.  The state
lives on a periodic box ``[-L, L)^d``.  With ``H = sum_j H_j + lam^2 |a|^2 / 2``
and, for divergence-free ``a`` whose ``j``-th component does not depend on
``x_j``,

    H_j = -hbar^2/2 d_j^2 + i hbar lam a_j d_j,

each ``H_j`` is diagonal in the Fourier variable ``k_j`` at fixed values of
the other coordinates (symbol ``hbar^2 k_j^2 / 2 - hbar lam a_j k_j``).  A step
is the symmetric product

    P(dt/2) X_1(dt/2) ... X_{d-1}(dt/2) X_d(dt) X_{d-1}(dt/2) ... X_1(dt/2) P(dt/2)

with ``P`` the multiplication by ``exp(-lam^2 |a|^2 dt / (2 hbar))`` phases.
For ``imaginary_time`` every ``-i dt / hbar`` becomes ``-dt / hbar`` and the
result approximates ``exp(-t H / hbar) psi``.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass

import numpy as np

from .fourier_measure import LinearVectorPotential, VectorPotentialFourier

__all__ = [
    "GridState",
    "GaussianPacket",
    "evolve",
    "gauge_transform",
    "linear_gauge",
    "probe",
    "save_state",
    "load_state",
    "StabilityError",
]


class StabilityError(ValueError):
    """Step size or resolution outside the documented limits."""


@dataclass(frozen=True)
class GridState:
    """Values on the periodic box ``[-L, L)^d`` with ``n`` points per axis."""

    L: float
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        n = v.shape[0]
        if any(s != n for s in v.shape) or n & (n - 1) or n < 2:
            raise ValueError("grid must be square with a power-of-two resolution")
        object.__setattr__(self, "values", v)

    @property
    def d(self):
        return self.values.ndim

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def dx(self):
        return 2 * self.L / self.n

    @property
    def axis(self):
        return -self.L + self.dx * np.arange(self.n)

    @property
    def freqs(self):
        return 2 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    def mesh(self):
        """Coordinate arrays ``(d, n, ..., n)``; missing axes are zero in 3D evaluation."""
        return np.stack(np.meshgrid(*([self.axis] * self.d), indexing="ij"))

    def points3(self):
        """Grid points as ``(..., 3)`` with trailing coordinates set to zero."""
        m = self.mesh()
        out = np.zeros(m.shape[1:] + (3,))
        for j in range(self.d):
            out[..., j] = m[j]
        return out

    @property
    def norm(self):
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.dx**self.d))

    @classmethod
    def from_function(cls, f, L, n, d=2, time=0.0):
        """Sample ``f`` (mapping ``(..., 3)`` points to values) on the grid."""
        st = cls(L, np.zeros((n,) * d, dtype=complex), time)
        return cls(L, np.asarray(f(st.points3()), dtype=complex), time)

    def with_values(self, values, time=None):
        return GridState(self.L, values, self.time if time is None else time)


@dataclass(frozen=True)
class GaussianPacket:
    """``amp * exp(-|x - center|^2 / (2 sigma^2) + i p . x + i chirp |x|^2 / 2)``.

    Only the first ``dims`` coordinates enter, so the packet is constant in
    the others.  Entire in ``x``, hence it can be evaluated at complex
    points.  The ``chirp`` term is what a quadratic gauge function
    ``chi = kappa |x|^2 / 2`` multiplies in (``chirp = lam kappa / hbar``).
    """

    sigma: float = 1.0
    center: tuple = (0.0, 0.0, 0.0)
    momentum: tuple = (0.0, 0.0, 0.0)
    amp: complex = 1.0
    dims: int = 2
    chirp: float = 0.0

    def __call__(self, z):
        z = np.asarray(z)[..., : self.dims]
        c = np.asarray(self.center, dtype=float)[: self.dims]
        p = np.asarray(self.momentum, dtype=float)[: self.dims]
        u = z - c
        expo = -np.sum(u * u, axis=-1) / (2 * self.sigma**2) + 1j * (z @ p)
        if self.chirp:
            expo = expo + 0.5j * self.chirp * np.sum(z * z, axis=-1)
        return self.amp * np.exp(expo)


def _potential_on_grid(pot, state: GridState, lam):
    """``lam * a`` at grid points, shape ``(3, n, ..., n)``."""
    pts = state.points3()
    if isinstance(pot, LinearVectorPotential):
        vals = pts @ pot.alpha.T + pot.offset
    elif isinstance(pot, VectorPotentialFourier):
        vals = pot(pts.reshape(-1, 3)).reshape(pts.shape)
        if np.max(np.abs(vals.imag)) > 1e-10:
            raise ValueError("potential must be real on the grid")
        vals = vals.real
    elif pot is None:
        vals = np.zeros(pts.shape)
    else:
        vals = np.asarray(pot(pts.reshape(-1, 3))).reshape(pts.shape).real
    return lam * np.moveaxis(vals, -1, 0)


def _check_structure(pot, state):
    """``a_j`` must not depend on ``x_j`` for the per-axis exact steps."""
    d = state.d
    if isinstance(pot, LinearVectorPotential):
        for j in range(d):
            if pot.alpha[j, j] != 0:
                raise ValueError(f"a_{j + 1} depends on x_{j + 1}; per-axis steps need it not to")
        if np.any(pot.alpha[:, d:] != 0):
            raise ValueError("potential varies along an axis outside the grid")
        return
    if isinstance(pot, VectorPotentialFourier):
        for j in range(d):
            if len(pot.mu[j]) and np.any(np.abs(pot.mu[j].freqs[:, j]) > 0):
                raise ValueError(f"a_{j + 1} depends on x_{j + 1}; per-axis steps need it not to")
        for j in range(3):
            if len(pot.mu[j]) and np.any(np.abs(pot.mu[j].freqs[:, d:]) > 0):
                raise ValueError("potential varies along an axis outside the grid")
        R = pot.support_radius
        if R and R >= np.pi / state.dx:
            raise StabilityError("potential frequencies exceed the grid Nyquist limit")


def evolve(state: GridState, pot, lam, t, steps, hbar=1.0, imaginary_time=False) -> GridState:
    """Evolve by ``exp(-i t H / hbar)`` (or ``exp(-t H / hbar)``) in ``steps`` Strang steps.

    Components of ``a`` beyond ``d`` enter through ``|a|^2`` only; no
    component may depend on the coordinates missing from the grid.
    """
    if t <= 0 or steps < 1:
        raise ValueError("need t > 0 and steps >= 1")
    _check_structure(pot, state)
    d = state.d
    dt = t / steps
    la = _potential_on_grid(pot, state, lam)  # (3, n, ..)
    k = state.freqs
    unit = -1.0 if imaginary_time else -1j

    pot_phase = np.exp(unit * dt / (2 * hbar) * 0.5 * np.sum(la**2, axis=0))

    def axis_factor(j, h):
        shape = [1] * d
        shape[j] = -1
        kj = k.reshape(shape)
        symbol = 0.5 * hbar * kj**2 - la[j] * kj  # H_j / hbar in the k_j variable
        return np.exp(unit * h * symbol)

    order = list(range(d - 1)) + [d - 1] + list(range(d - 2, -1, -1))
    weights = [0.5] * (d - 1) + [1.0] + [0.5] * (d - 1)
    factors = [axis_factor(j, w * dt) for j, w in zip(order, weights)]

    psi = state.values.copy()
    for _ in range(steps):
        psi *= pot_phase
        for j, fac in zip(order, factors):
            psi = np.fft.ifft(fac * np.fft.fft(psi, axis=j), axis=j)
        psi *= pot_phase
    return state.with_values(psi, state.time + t)


def probe(state: GridState, points) -> np.ndarray:
    """Values at arbitrary points by trigonometric (band-limited) interpolation."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))[:, : state.d]
    coef = np.fft.fftn(state.values) / state.n**state.d
    k = state.freqs
    out = np.empty(len(pts), dtype=complex)
    for i, p in enumerate(pts):
        val = coef
        for j in range(state.d):
            ph = np.exp(1j * k * (p[j] + state.L))
            val = np.tensordot(ph, val, axes=(0, 0))
        out[i] = val
    return out


def linear_gauge(grad, offset=0.0):
    """``chi(x) = grad . x + offset`` as a ``(chi, grad_chi)`` pair."""
    g = np.asarray(grad, dtype=float).reshape(3)

    def chi(pts):
        return pts @ g + offset

    def grad_chi(pts):
        return np.broadcast_to(g, np.shape(pts))

    return chi, grad_chi


class _SumPotential:
    def __init__(self, pot, grad_chi):
        self.pot, self.grad_chi = pot, grad_chi

    def __call__(self, pts):
        base = self.pot(pts) if self.pot is not None else 0.0
        return np.real(base) + self.grad_chi(pts)


def gauge_transform(state: GridState, pot, chi, lam, hbar=1.0):
    """``(exp(i lam chi / hbar) psi, a + grad chi)``.

    ``chi`` is either a ``(chi, grad_chi)`` pair of callables on ``(..., 3)``
    points, or a gradient vector for a linear gauge function.  Linear
    potentials stay linear (the gradient goes into ``offset``).
    """
    if not isinstance(chi, tuple):
        chi = linear_gauge(chi)
    f, grad = chi
    phase = np.exp(1j * lam * f(state.points3()) / hbar)
    new_state = state.with_values(state.values * phase)
    g0 = np.asarray(grad(np.zeros((1, 3))))[0]
    if isinstance(pot, LinearVectorPotential):
        probe_pts = np.eye(3)
        if np.allclose(grad(probe_pts), g0):
            return new_state, LinearVectorPotential(pot.alpha, pot.offset + g0)
    return new_state, _SumPotential(pot, grad)


def save_state(state: GridState, fh):
    """Write a one-line JSON header followed by the raw complex128 array."""
    header = dict(shape=list(state.values.shape), L=state.L, time=state.time, dtype="complex128")
    fh.write((json.dumps(header) + "\n").encode())
    fh.write(np.ascontiguousarray(state.values, dtype=np.complex128).tobytes())


def load_state(fh) -> GridState:
    header = json.loads(fh.readline().decode())
    raw = fh.read()
    vals = np.frombuffer(raw, dtype=np.complex128).reshape(header["shape"]).copy()
    return GridState(header["L"], vals, header["time"])


def dumps_state(state: GridState) -> bytes:
    buf = io.BytesIO()
    save_state(state, buf)
    return buf.getvalue()
