"""Paths on uniform grids, Cameron-Martin geometry and the two bases.

A :class:`GridPath` stores values at ``t_j = j t / n`` with the first value
pinned to zero.  Between knots paths are taken to be linear, which makes the
Cameron-Martin inner product, projections and area integrals exact finite
sums.

Two orthonormal bases are provided.  ``TENT`` is the Schauder system (the
integrals of Haar functions): its first ``3 * 2**j`` elements span exactly
the piecewise-linear paths on the grid with ``2**j`` segments.  ``TRIG`` is
built from ``cos(2 pi k s)`` and ``sin(2 pi k s)`` on ``[0, 1]`` and pairs
the planar components so that individual elements enclose signed area.

Brownian paths come from a Philox counter-based generator keyed by
``(seed, sample_index)``, so any subset of samples can be regenerated in
any order on any number of workers.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "GridPath",
    "BasisKind",
    "OrthonormalBasis",
    "cm_inner",
    "project_piecewise_linear",
    "sample_brownian",
    "brownian_increments",
    "brownian_paths",
    "basis_element",
    "area_integral",
    "cm_gram",
    "simpson",
]


@dataclass(frozen=True, eq=False)
class GridPath:
    """Path sampled at ``n + 1`` uniform knots on ``[0, horizon]``.

    ``func`` optionally holds the exact map ``s -> (values, derivatives)``
    for smooth paths (rendered basis elements); quadratures use it when
    present.
    """

    horizon: float
    values: np.ndarray
    func: object = None

    def __post_init__(self):
        v = np.array(self.values)
        if v.ndim != 2 or v.shape[1] != 3 or v.shape[0] < 2:
            raise ValueError("values must have shape (n + 1, 3) with n >= 1")
        if np.any(v[0] != 0):
            raise ValueError("paths start at the origin")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def n(self):
        return self.values.shape[0] - 1

    @property
    def dt(self):
        return self.horizon / self.n

    @property
    def times(self):
        return np.linspace(0.0, self.horizon, self.n + 1)

    @property
    def increments(self):
        return np.diff(self.values, axis=0)

    @property
    def end(self):
        return self.values[-1]

    def scaled(self, c):
        return GridPath(self.horizon, c * self.values)

    def __add__(self, other):
        _check_same_grid(self, other)
        return GridPath(self.horizon, self.values + other.values)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return GridPath(self.horizon, self.values - other.values)

    def to_csv(self, path):
        """Write ``t, x1, x2, x3`` (plus imaginary parts for complex paths)."""
        v = self.values
        cols = [self.times, v.real[:, 0], v.real[:, 1], v.real[:, 2]]
        header = "t,x1,x2,x3"
        if np.iscomplexobj(v):
            cols += [v.imag[:, 0], v.imag[:, 1], v.imag[:, 2]]
            header += ",im_x1,im_x2,im_x3"
        np.savetxt(path, np.column_stack(cols), delimiter=",", header=header,
                   comments="", fmt="%.17g")

    @classmethod
    def from_csv(cls, path):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        vals = data[:, 1:4]
        if data.shape[1] == 7:
            vals = vals + 1j * data[:, 4:7]
        return cls(float(data[-1, 0]), vals)


def _check_same_grid(g1, g2):
    if g1.n != g2.n or not math.isclose(g1.horizon, g2.horizon, rel_tol=1e-14):
        raise ValueError(f"grid mismatch: n={g1.n},{g2.n} t={g1.horizon},{g2.horizon}")


def cm_inner(g1: GridPath, g2: GridPath):
    """``int g1' . g2' ds`` for piecewise-linear paths (bilinear, no conjugation)."""
    _check_same_grid(g1, g2)
    val = np.sum(g1.increments * g2.increments) / g1.dt
    return complex(val) if np.iscomplexobj(val) else float(val)


def project_piecewise_linear(path: GridPath, n: int) -> GridPath:
    """Interpolate linearly through the values at ``t_k = k t / n``, on the fine grid."""
    if n < 1 or path.n % n:
        raise ValueError(f"coarse resolution {n} does not divide {path.n}")
    m = path.n // n
    knots = path.values[::m]
    frac = np.arange(m) / m
    seg = knots[:-1, None, :] + frac[None, :, None] * np.diff(knots, axis=0)[:, None, :]
    vals = np.vstack([seg.reshape(-1, 3), knots[-1:]])
    return GridPath(path.horizon, vals)


# Brownian sampling -------------------------------------------------------------


def _stream(seed, sample_index):
    bitgen = np.random.Philox(key=int(seed) & (2**128 - 1), counter=[0, 0, int(sample_index), 0])
    return np.random.Generator(bitgen)


def brownian_increments(n, t, seed, indices) -> np.ndarray:
    """Increments ``(len(indices), n, 3)``; row ``b`` depends only on ``(seed, indices[b])``."""
    indices = np.atleast_1d(indices)
    out = np.empty((len(indices), n, 3))
    scale = math.sqrt(t / n)
    for row, idx in enumerate(indices):
        out[row] = _stream(seed, idx).standard_normal((n, 3))
    out *= scale
    return out


def brownian_paths(n, t, seed, indices) -> np.ndarray:
    """Knot values ``(len(indices), n + 1, 3)`` starting at zero."""
    inc = brownian_increments(n, t, seed, indices)
    out = np.zeros((inc.shape[0], n + 1, 3))
    np.cumsum(inc, axis=1, out=out[:, 1:])
    return out


def sample_brownian(n, t, seed, sample_index) -> GridPath:
    if n < 1:
        raise ValueError("need at least one step")
    return GridPath(t, brownian_paths(n, t, seed, [sample_index])[0])


# bases -------------------------------------------------------------------------


class BasisKind(enum.Enum):
    TENT = "tent"
    TRIG = "trig"


_R2 = 1 / math.sqrt(2)
# TRIG family f -> list of (scalar mode letter, component, coefficient)
_TRIG_FAMILIES = {
    1: [("U", 0, _R2), ("V", 1, _R2)],
    2: [("U", 0, _R2), ("V", 1, -_R2)],
    3: [("V", 0, _R2), ("U", 1, _R2)],
    4: [("V", 0, _R2), ("U", 1, -_R2)],
    5: [("U", 2, 1.0)],
    6: [("V", 2, 1.0)],
}


@dataclass(frozen=True)
class OrthonormalBasis:
    """Ordered orthonormal family in the Cameron-Martin space.

    Every element is a short sum ``coef * f_mode(s) * e_component`` of scalar
    modes with unit Cameron-Martin norm.  Scalar mode ids:

    * TENT: ``0`` is ``s / sqrt(t)``; ``m = 2**j + p`` is the Schauder tent
      of level ``j`` on ``[p w, (p + 1) w]``, ``w = t / 2**j``.  Element ``i``
      is mode ``i // 3`` along axis ``i % 3``.
    * TRIG (``t = 1``): ``0`` is ``s``; ``2k - 1`` is
      ``U_k = sqrt(2) (cos(2 pi k s) - 1) / (2 pi k)`` and ``2k`` is
      ``V_k = sqrt(2) sin(2 pi k s) / (2 pi k)``.  Elements are ordered as
      ``e_{0,1}, e_{0,2}, e_{0,3}`` (when ``constants``) followed by blocks
      ``k = 1, 2, ...`` each listing the selected ``families`` in order.
      Families 1-4 are ``(u,v,0), (u,-v,0), (v,u,0), (v,-u,0)`` and 5-6 put
      ``u``, ``v`` on the third axis, all normalized to unit length.

    The cosine modes are shifted by a constant so that every element starts
    at the origin; inner products and area integrals are unaffected.
    """

    kind: BasisKind = BasisKind.TENT
    horizon: float = 1.0
    families: tuple = (1, 2, 3, 4, 5, 6)
    constants: bool = True

    def __post_init__(self):
        object.__setattr__(self, "kind", BasisKind(self.kind))
        object.__setattr__(self, "families", tuple(self.families))
        if self.kind is BasisKind.TRIG:
            if not math.isclose(self.horizon, 1.0):
                raise ValueError("TRIG basis is defined on the unit horizon only")
            if not self.families or any(f not in _TRIG_FAMILIES for f in self.families):
                raise ValueError(f"families must be drawn from 1..6, got {self.families}")

    @classmethod
    def tent(cls, horizon=1.0):
        return cls(BasisKind.TENT, horizon)

    @classmethod
    def trig(cls, families=(1, 2, 3, 4, 5, 6), constants=True):
        return cls(BasisKind.TRIG, 1.0, families, constants)

    @property
    def label(self):
        if self.kind is BasisKind.TENT:
            return "tent"
        fam = "".join(map(str, self.families))
        return f"trig{fam}" + ("" if self.constants else "-nc")

    # element bookkeeping

    def element_terms(self, index):
        """``[(mode_id, component, coefficient), ...]`` for element ``index``."""
        if index < 0:
            raise IndexError(index)
        if self.kind is BasisKind.TENT:
            return [(index // 3, index % 3, 1.0)]
        n_const = 3 if self.constants else 0
        if index < n_const:
            return [(0, index, 1.0)]
        k, f = divmod(index - n_const, len(self.families))
        k += 1
        terms = []
        for letter, comp, coef in _TRIG_FAMILIES[self.families[f]]:
            mode = 2 * k - 1 if letter == "U" else 2 * k
            terms.append((mode, comp, coef))
        return terms

    def element_label(self, index):
        if self.kind is BasisKind.TENT:
            m, c = divmod(index, 3)
            return f"tent[{m}]e{c + 1}"
        n_const = 3 if self.constants else 0
        if index < n_const:
            return f"e(0,{index + 1})"
        k, f = divmod(index - n_const, len(self.families))
        return f"e({k + 1},{self.families[f]})"

    def trig_block(self, index):
        """Frequency ``k`` of a TRIG element (0 for the linear ones)."""
        n_const = 3 if self.constants else 0
        if index < n_const:
            return 0
        return (index - n_const) // len(self.families) + 1

    def n_modes(self, n_elements):
        """Number of scalar modes touched by the first ``n_elements`` elements."""
        top = 0
        for i in range(n_elements):
            top = max(top, max(m for m, _, _ in self.element_terms(i)))
        return top + 1

    def element_matrix(self, n_elements):
        """Coefficient array ``(n_elements, n_modes, 3)`` in scalar-mode coordinates."""
        nm = self.n_modes(n_elements)
        out = np.zeros((n_elements, nm, 3))
        for i in range(n_elements):
            for m, c, coef in self.element_terms(i):
                out[i, m, c] += coef
        return out

    # scalar modes

    def mode(self, mode_id, s):
        """Values and derivatives of a scalar mode at times ``s``."""
        s = np.asarray(s, dtype=float)
        t = self.horizon
        if mode_id == 0:
            return s / math.sqrt(t), np.full_like(s, 1 / math.sqrt(t))
        if self.kind is BasisKind.TENT:
            j = int(math.floor(math.log2(mode_id)))
            p = mode_id - 2**j
            w = t / 2**j
            a, mid, b = p * w, (p + 0.5) * w, (p + 1) * w
            h = 1 / math.sqrt(w)
            val = np.where((s >= a) & (s <= mid), (s - a) * h,
                           np.where((s > mid) & (s <= b), (b - s) * h, 0.0))
            der = np.where((s >= a) & (s < mid), h, np.where((s >= mid) & (s < b), -h, 0.0))
            return val, der
        k = (mode_id + 1) // 2
        om = 2 * math.pi * k
        if mode_id % 2:  # U_k
            return (math.sqrt(2) * (np.cos(om * s) - 1) / om,
                    -math.sqrt(2) * np.sin(om * s))
        return math.sqrt(2) * np.sin(om * s) / om, math.sqrt(2) * np.cos(om * s)

    def mode_values(self, n_modes, s):
        vals = np.empty((n_modes, len(s)))
        ders = np.empty((n_modes, len(s)))
        for m in range(n_modes):
            vals[m], ders[m] = self.mode(m, s)
        return vals, ders

    def evaluate(self, index, s):
        """Element values and derivatives at times ``s`` as ``(len(s), 3)`` arrays."""
        s = np.asarray(s, dtype=float)
        val = np.zeros((len(s), 3))
        der = np.zeros((len(s), 3))
        for m, c, coef in self.element_terms(index):
            v, d = self.mode(m, s)
            val[:, c] += coef * v
            der[:, c] += coef * d
        return val, der


def basis_element(basis: OrthonormalBasis, index, n_grid=1024) -> GridPath:
    """Element ``index`` sampled on ``n_grid`` uniform steps, with its exact form attached."""
    s = np.linspace(0.0, basis.horizon, n_grid + 1)
    vals, _ = basis.evaluate(index, s)
    vals[0] = 0.0

    def func(s, _b=basis, _i=index):
        return _b.evaluate(_i, s)

    return GridPath(basis.horizon, vals, func)


def cm_gram(basis: OrthonormalBasis, n_elements, n_grid=2**14) -> np.ndarray:
    """Gram matrix of the first elements from their exact derivatives.

    Uses the midpoint rule on ``n_grid`` cells: exact for tents whose knots
    lie on the grid, and exact for trigonometric modes below the grid
    Nyquist frequency.
    """
    mid = (np.arange(n_grid) + 0.5) * basis.horizon / n_grid
    ders = np.stack([basis.evaluate(i, mid)[1] for i in range(n_elements)])
    return np.einsum("isc,jsc->ij", ders, ders) * basis.horizon / n_grid


def simpson(f, a, b, rtol=1e-10, start=64, max_intervals=2**18):
    """Composite Simpson rule with dyadic refinement.

    ``f`` maps an array of nodes to an array of values (trailing axes
    allowed).  Stops once successive estimates agree to ``rtol`` relative (or
    to 1e-15 absolute for vanishing integrals).
    """
    n = start
    prev = None
    while True:
        s = np.linspace(a, b, n + 1)
        w = np.ones(n + 1)
        w[1:-1:2] = 4
        w[2:-1:2] = 2
        val = np.tensordot(w, f(s), axes=(0, 0)) * (b - a) / (3 * n)
        if prev is not None:
            err = np.max(np.abs(val - prev))
            if err <= rtol * np.max(np.abs(val)) or err <= 1e-15 or n >= max_intervals:
                return val
        prev = val
        n *= 2


def area_integral(e: GridPath) -> np.ndarray:
    """``1/2 int e x e' ds`` as a 3-vector.

    Piecewise-linear paths use the exact segment sum ``1/2 sum e_j x e_{j+1}``;
    paths carrying an exact form use :func:`simpson`.
    """
    if np.iscomplexobj(e.values):
        raise ValueError("area integral is defined for real paths")
    if e.func is not None:
        def integrand(s):
            v, d = e.func(s)
            return 0.5 * np.cross(v, d)

        return simpson(integrand, 0.0, e.horizon)
    v = e.values
    return 0.5 * np.sum(np.cross(v[:-1], v[1:]), axis=0)
