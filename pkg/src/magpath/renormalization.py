"""Constant magnetic field: the operator ``G``, area counterterms and their basis dependence.

For a linear potential ``a(x) = alpha x`` the line integral along a
Cameron-Martin path is a quadratic form,

    int_0^t a(gamma) . gamma' ds = <gamma, G gamma>,   G(gamma)(s) = int_0^s alpha gamma(r) dr,

so everything here reduces to small matrices over a basis.  Matrices are
assembled from scalar modes: if ``e_i = sum coef f_m(s) e_c`` then
``<e_i, G e_j> = sum coef coef' alpha[c, c'] int f_m' f_m'' ds``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .cameron_martin import (
    BasisKind,
    GridPath,
    OrthonormalBasis,
    area_integral,
    basis_element,
    brownian_increments,
)
from .fourier_measure import LinearVectorPotential

__all__ = [
    "g_apply",
    "mode_pairings",
    "gram_matrix_G",
    "trace_PnG",
    "gdagg_matrix",
    "gdagg_eigs",
    "gdagg_eigs_analytic",
    "renorm_constant",
    "element_areas",
    "stokes_decompose",
    "midpoint_quadratic",
    "RenormReport",
    "hn_convergence_experiment",
]


def _alpha(pot):
    if isinstance(pot, LinearVectorPotential):
        return pot.alpha
    return np.asarray(pot, dtype=float).reshape(3, 3)


def g_apply(pot, gamma: GridPath) -> GridPath:
    """``G(gamma)(s) = int_0^s alpha gamma(r) dr`` by cumulative trapezoid."""
    if np.iscomplexobj(gamma.values):
        raise ValueError("G is applied to real paths")
    a = _alpha(pot)
    vals = gamma.values @ a.T
    out = np.zeros_like(vals)
    out[1:] = np.cumsum(0.5 * (vals[:-1] + vals[1:]), axis=0) * gamma.dt
    return GridPath(gamma.horizon, out)


def _nodes(basis, n_cells, order):
    """Composite Gauss-Legendre nodes and weights on ``n_cells`` equal cells."""
    x, w = leggauss(order)
    h = basis.horizon / n_cells
    left = np.arange(n_cells)[:, None] * h
    s = (left + 0.5 * h * (x + 1)).ravel()
    return s, np.tile(0.5 * h * w, n_cells)


def _default_quadrature(basis, n_modes):
    if basis.kind is BasisKind.TENT:
        top = max(n_modes - 1, 1)
        return 2 ** (int(math.floor(math.log2(top))) + 1), 2  # tents are linear on every cell
    return max(16, n_modes + 2), 12


def mode_pairings(basis: OrthonormalBasis, n_modes, n_cells=None, order=None):
    """``(Q, M)`` with ``Q[m, m'] = int f_m' f_m''`` and ``M[m, m'] = int f_m f_m''``.

    Composite Gauss-Legendre quadrature: two nodes per dyadic cell is exact
    for tents; twelve nodes on cells finer than half a period is exact to
    rounding for the trigonometric modes.
    """
    nc, od = _default_quadrature(basis, n_modes)
    n_cells = n_cells or nc
    order = order or od
    s, w = _nodes(basis, n_cells, order)
    vals, ders = basis.mode_values(n_modes, s)
    q = (ders * w) @ vals.T
    m = (vals * w) @ vals.T
    return q, m


def _element_pairing(basis, n, kernel_of_modes, mat):
    E = basis.element_matrix(n)
    pair = kernel_of_modes(E.shape[1])
    return np.einsum("iac,ab,cd,jbd->ij", E, pair, mat, E, optimize=True)


def gram_matrix_G(pot, basis: OrthonormalBasis, n, n_cells=None, order=None) -> np.ndarray:
    """``[<e_i, G e_j>]`` for the first ``n`` elements (row ``i``, column ``j``)."""
    a = _alpha(pot)
    return _element_pairing(basis, n, lambda nm: mode_pairings(basis, nm, n_cells, order)[0], a)


def trace_PnG(pot, basis: OrthonormalBasis, n, **kw) -> float:
    """``sum_{i < n} <e_i, G e_i>``."""
    return float(np.trace(gram_matrix_G(pot, basis, n, **kw)))


def gdagg_matrix(pot, basis: OrthonormalBasis, n) -> np.ndarray:
    """``[<G e_i, G e_j>] = [int e_i . A e_j ds]`` with ``A = alpha^T alpha``."""
    a = _alpha(pot)
    return _element_pairing(basis, n, lambda nm: mode_pairings(basis, nm)[1], a.T @ a)


def gdagg_eigs(pot, t=1.0, n_basis=64, resolution=2**11) -> np.ndarray:
    """Eigenvalues of ``G^dagger G`` compressed to tents, sorted descending.

    ``n_basis`` scalar tent modes are used per axis, so the matrix has size
    ``3 n_basis``.  ``resolution`` is the number of quadrature cells and must
    resolve the finest tent.
    """
    if n_basis < 8:
        raise ValueError("n_basis must be at least 8")
    basis = OrthonormalBasis.tent(t)
    finest = 2 ** (int(math.floor(math.log2(n_basis - 1))) + 1)
    if resolution < finest:
        raise ValueError(f"resolution {resolution} does not resolve {n_basis} tents")
    a = _alpha(pot)
    E = basis.element_matrix(3 * n_basis)
    _, mass = mode_pairings(basis, E.shape[1], n_cells=resolution, order=3)
    K = np.einsum("iac,ab,cd,jbd->ij", E, mass, a.T @ a, E, optimize=True)
    return np.sort(np.linalg.eigvalsh(0.5 * (K + K.T)))[::-1]


def gdagg_eigs_analytic(pot, t=1.0, count=9) -> np.ndarray:
    """Largest ``count`` values of ``4 a_j t^2 / (pi^2 (1 + 2m)^2)``, sorted descending.

    ``a_j`` are the eigenvalues of ``alpha^T alpha``; every pair ``(j, m)``
    gives one eigenvalue of ``G^dagger G``.
    """
    a = _alpha(pot)
    eigs = np.clip(np.linalg.eigvalsh(a.T @ a), 0.0, None)
    vals = [4 * aj * t**2 / (math.pi**2 * (1 + 2 * m) ** 2) for m in range(count) for aj in eigs]
    return np.sort(vals)[::-1][:count]


def element_areas(basis: OrthonormalBasis, n, n_grid=1024) -> np.ndarray:
    """``1/2 int e_k x e_k' ds`` for the first ``n`` elements, shape ``(n, 3)``."""
    return np.array([area_integral(basis_element(basis, k, n_grid)) for k in range(n)])


def renorm_constant(B_field, basis: OrthonormalBasis, n) -> float:
    """``r_n = B . sum_{k < n} 1/2 int e_k x e_k' ds``."""
    B = np.asarray(B_field, dtype=float).reshape(3)
    if n == 0 or not B.any():
        return 0.0
    return float(math.fsum(element_areas(basis, n) @ B))


def stokes_decompose(pot, path: GridPath):
    """Split the midpoint integral along a polygon into ``(surface, line)``.

    ``surface = B . 1/2 sum_j w_j x w_{j+1}`` is the flux through the polygon
    closed by the chord back to the origin; ``line`` is the integral of
    ``a`` along that chord, traversed from ``w(t)`` to ``0``:
    ``line = -int_0^1 a(u w(t)) du . w(t)``.  Then ``surface - line`` equals
    the midpoint sum exactly.
    """
    if np.iscomplexobj(path.values):
        raise ValueError("stokes_decompose needs a real path")
    if isinstance(pot, LinearVectorPotential):
        pot_ = pot
    else:
        pot_ = LinearVectorPotential(_alpha(pot))
    v = path.values
    surface = float(pot_.B_field @ (0.5 * np.sum(np.cross(v[:-1], v[1:]), axis=0)))
    end = v[-1]
    line = -float(0.5 * end @ pot_.alpha @ end + pot_.offset @ end)
    return surface, line


def midpoint_quadratic(pot, increments):
    """Midpoint sums ``sum_j a(m_j) . d_j`` for batched increments ``(B, n, 3)``."""
    a = _alpha(pot)
    v = np.cumsum(increments, axis=1)
    prev = v - increments
    mid = 0.5 * (v + prev)
    return np.einsum("bjc,bjc->b", mid @ a.T, increments)


@dataclass
class RenormReport:
    """Results of :func:`hn_convergence_experiment` for one basis.

    ``rows`` holds one dict per ``n`` with keys ``n, r_n, trace_PnG,
    gap_renorm, gap_renorm_se, gap_raw, gap_raw_se, mean_h, mean_h_se``.
    """

    basis: str
    n_samples: int
    seed: int
    rows: list = field(default_factory=list)
    eigencheck: list = field(default_factory=list)

    @property
    def n_values(self):
        return [r["n"] for r in self.rows]

    def column(self, key):
        return np.array([r[key] for r in self.rows])

    def csv_lines(self):
        keys = ["n", "r_n", "trace_PnG", "gap_renorm", "gap_renorm_se", "gap_raw",
                "gap_raw_se", "mean_h", "mean_h_se"]
        yield ",".join(["basis"] + keys)
        for r in self.rows:
            yield ",".join([self.basis] + [repr(r[k]) if isinstance(r[k], float) else str(r[k]) for k in keys])


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    mean = math.fsum(x) / len(x)
    var = math.fsum((x - mean) ** 2) / max(len(x) - 1, 1)
    return mean, math.sqrt(var / len(x))


def _mode_derivatives(basis, n_modes, n_fine):
    """Cell averages of mode derivatives on the fine grid, shape ``(n_modes, n_fine)``.

    The average of ``f'`` over a cell is the exact increment of ``f``
    divided by the cell width, so the pairing with a Brownian polygon is the
    exact Cameron-Martin product of the mode with that polygon.
    """
    s = np.linspace(0.0, basis.horizon, n_fine + 1)
    vals, _ = basis.mode_values(n_modes, s)
    return np.diff(vals, axis=1) * (n_fine / basis.horizon)


def hn_convergence_experiment(pot, bases, n_list, n_samples=20_000, seed=0, fine_steps=2**14,
                              chunk=256, t=1.0) -> list:
    """Projected quadratic forms against the fine-path Stratonovich value.

    For every sample a Brownian polygon with ``fine_steps`` steps is drawn;
    ``h_ref`` is its midpoint sum.  For each basis the coefficients
    ``xi_k = <e_k, omega>`` are read off the polygon, the projected integral
    is ``g_n = xi^T M_n xi`` with ``M_n`` the leading block of
    :func:`gram_matrix_G`, and ``h_n = g_n - r_n``.  Returns one
    :class:`RenormReport` per basis with ``E|h_n - h_ref|^2`` (renormalized)
    and ``E|g_n - h_ref|^2`` (raw).
    """
    a = _alpha(pot)
    B = LinearVectorPotential(a).B_field
    n_list = sorted(set(int(n) for n in n_list))
    n_max = n_list[-1]
    setups = []
    for basis in bases:
        if not math.isclose(basis.horizon, t):
            raise ValueError("basis horizon differs from the experiment horizon")
        E = basis.element_matrix(n_max)
        D = _mode_derivatives(basis, E.shape[1], fine_steps)
        M = gram_matrix_G(a, basis, n_max)
        areas = element_areas(basis, n_max) @ B
        r = np.concatenate([[0.0], np.cumsum(areas)])
        setups.append((basis, E, D, M, r))

    ref = np.empty(n_samples)
    g = [np.empty((len(n_list), n_samples)) for _ in setups]
    for start in range(0, n_samples, chunk):
        idx = np.arange(start, min(start + chunk, n_samples))
        inc = brownian_increments(fine_steps, t, seed, idx)  # (b, n_fine, 3)
        ref[idx] = midpoint_quadratic(a, inc)
        flat = np.ascontiguousarray(inc.transpose(1, 0, 2)).reshape(fine_steps, -1)
        for (basis, E, D, M, r), out in zip(setups, g):
            # scalar-mode coefficients per axis, then element coefficients
            z = (D @ flat).reshape(len(D), len(idx), 3).transpose(1, 0, 2)  # (b, modes, 3)
            xi = z.reshape(len(idx), -1) @ E.reshape(len(E), -1).T
            for row, n in enumerate(n_list):
                xn = xi[:, :n]
                out[row, idx] = np.sum((xn @ M[:n, :n]) * xn, axis=1)

    reports = []
    for (basis, E, D, M, r), gvals in zip(setups, g):
        rep = RenormReport(basis.label, n_samples, int(seed))
        for row, n in enumerate(n_list):
            h = gvals[row] - r[n]
            gr, gr_se = _mean_se((h - ref) ** 2)
            gw, gw_se = _mean_se((gvals[row] - ref) ** 2)
            mh, mh_se = _mean_se(h)
            rep.rows.append(dict(n=n, r_n=float(r[n]), trace_PnG=float(np.trace(M[:n, :n])),
                                 gap_renorm=gr, gap_renorm_se=gr_se, gap_raw=gw, gap_raw_se=gw_se,
                                 mean_h=mh, mean_h_se=mh_se))
        reports.append(rep)
    return reports
