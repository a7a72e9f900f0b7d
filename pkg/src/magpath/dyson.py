"""Coupling-constant expansion of the magnetic propagator in Fourier space.

States are finite sums of plane waves (:class:`WavePacket`).  With
``H = H0 + lam A + lam^2 B``, ``H0 = -hbar^2 Laplacian / 2``,
``A = i hbar a . grad`` and ``B = |a|^2 / 2``, every term of the time-ordered
expansion maps a plane wave to finitely many plane waves.  Along one chain
of frequencies ``y_0 -> y_1 -> ... -> y_n`` the free evolution contributes
``exp(-kappa(y_j) * gap_j)`` on each gap, so the whole time-ordered integral
is a divided difference of ``exp`` at the nodes ``-T kappa(y_j)``::

    int_{0 <= s_1 <= ... <= s_n <= T} prod_j exp(-kappa_j (s_{j+1} - s_j)) ds
        = T^n exp[-T kappa_0, ..., -T kappa_n]

with ``kappa(y) = i hbar |y|^2 / 2`` in real time.  For the semigroup
``exp(-z H)`` the horizon is 1 and ``kappa(y) = z hbar^2 |y|^2 / 2``.

Operator order follows the usual convention: in
``U0(t - s_n) O_1 U0(s_n - s_{n-1}) ... O_n U0(s_1) psi0`` the operator
``O_n`` acts first.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .fourier_measure import (
    PointMassMeasure,
    VectorPotentialFourier,
    _clean_lines,
    _dump_atoms,
    coulomb_gauge_defect,
    lambda_star,
    lambda_star_z,
    lambda_tilde,
)

__all__ = [
    "CapacityError",
    "WavePacket",
    "DysonTerm",
    "PartialSum",
    "apply_U0",
    "apply_A",
    "apply_B",
    "apply_V",
    "simplex_phase_integral",
    "divided_difference_exp",
    "phi_nk",
    "phi_m",
    "dyson_partial_sum",
    "heat_dyson",
    "alpha_bound",
    "dumps_wavepacket",
    "loads_wavepacket",
    "DEFAULT_MAX_ORDER",
]

DEFAULT_MAX_ORDER = 6
CLUSTER_RADIUS = 0.25


class CapacityError(RuntimeError):
    """Requested expansion order exceeds the configured cap."""


class WavePacket(PointMassMeasure):
    """``psi(x) = sum_p w_p exp(i y_p . x)``; ``support_radius`` is rho."""

    @classmethod
    def plane_wave(cls, y, w=1.0):
        return cls.from_atoms([(y, w)])

    @property
    def norm(self):
        """Euclidean norm of the weights, used in place of the L2 norm."""
        return float(np.sqrt(np.sum(np.abs(self.weights) ** 2)))

    def as_packet(self):
        return self


def _packet(freqs, weights, radius):
    return WavePacket(np.asarray(freqs).reshape(-1, 3), np.asarray(weights).reshape(-1), radius)


def apply_U0(state: WavePacket, s, hbar) -> WavePacket:
    """Free evolution: weights times ``exp(-i hbar |y|^2 s / 2)``."""
    if s < 0:
        raise ValueError("evolution time must be nonnegative")
    phase = np.exp(-0.5j * hbar * s * np.sum(state.freqs**2, axis=1))
    return _packet(state.freqs, state.weights * phase, state.support_radius)


def _A_raw(freqs, weights, pot, hbar):
    kf, kw = pot.atom_table
    new_f = freqs[:, None, :] + kf[None, :, :]
    new_w = -hbar * weights[:, None] * (freqs @ kw.T)
    return new_f.reshape(-1, 3), new_w.reshape(-1)


def _conv_raw(freqs, weights, measure, factor=1.0):
    new_f = freqs[:, None, :] + measure.freqs[None, :, :]
    new_w = factor * weights[:, None] * measure.weights[None, :]
    return new_f.reshape(-1, 3), new_w.reshape(-1)


def apply_A(state: WavePacket, pot: VectorPotentialFourier, hbar) -> WavePacket:
    """``i hbar a . grad``: atom ``y + k`` gets ``-hbar w c (y . e_j)`` per component ``j``."""
    f, w = _A_raw(state.freqs, state.weights, pot, hbar)
    return _packet(f, w, state.support_radius + pot.support_radius)


def apply_B(state: WavePacket, pot: VectorPotentialFourier) -> WavePacket:
    """Multiplication by ``|a|^2 / 2``: convolution with half the square measure."""
    sq = pot.square_measure
    f, w = _conv_raw(state.freqs, state.weights, sq, 0.5)
    return _packet(f, w, state.support_radius + 2 * pot.support_radius)


def apply_V(state: WavePacket, V: PointMassMeasure) -> WavePacket:
    """Multiplication by the scalar potential with transform measure ``V``."""
    f, w = _conv_raw(state.freqs, state.weights, V)
    return _packet(f, w, state.support_radius + V.support_radius)


# divided differences of exp ----------------------------------------------------


def _taylor_dd(pts):
    """Divided difference of exp at clustered nodes via the power series.

    ``exp[x_0..x_n] = e^c sum_m h_m(x - c) / (n + m)!`` with ``h_m`` the
    complete homogeneous symmetric polynomials.
    """
    c = pts.mean()
    y = pts - c
    n = len(pts) - 1
    terms = 48
    h = np.zeros(terms, dtype=complex)
    h[0] = 1.0
    for yi in y:
        for m in range(1, terms):
            h[m] += yi * h[m - 1]
    total = 0j
    fact = math.factorial(n)
    for m in range(terms):
        if m:
            fact *= n + m
        term = h[m] / fact
        total += term
        if m > 2 and abs(term) <= 1e-17 * abs(total):
            break
    return np.exp(c) * total


def divided_difference_exp(nodes) -> complex:
    """``exp[x_0, ..., x_n]`` robust to coincident and clustered nodes.

    Sets of nodes whose spread is below ``CLUSTER_RADIUS`` use the power
    series; otherwise the two most distant nodes are split off with the
    symmetric recursion ``f[S] = (f[S - b] - f[S - a]) / (x_a - x_b)``.
    """
    x = np.asarray(nodes, dtype=complex).ravel()
    memo = {}

    def rec(idx):
        if idx in memo:
            return memo[idx]
        pts = x[list(idx)]
        if len(idx) == 1:
            val = np.exp(pts[0])
        else:
            gaps = np.abs(pts[:, None] - pts[None, :])
            i, j = np.unravel_index(np.argmax(gaps), gaps.shape)
            if gaps[i, j] <= CLUSTER_RADIUS:
                val = _taylor_dd(pts)
            else:
                a, b = idx[i], idx[j]
                without_a = tuple(q for q in idx if q != a)
                without_b = tuple(q for q in idx if q != b)
                val = (rec(without_b) - rec(without_a)) / (x[a] - x[b])
        memo[idx] = val
        return val

    return complex(rec(tuple(range(len(x)))))


def simplex_phase_integral(thetas, t) -> complex:
    """``int_{0 <= s_1 <= ... <= s_n <= t} prod_j exp(theta_j s_j) ds``."""
    th = np.asarray(thetas, dtype=complex).ravel()
    n = len(th)
    if n < 1:
        raise ValueError("need at least one exponent")
    tails = np.append(np.cumsum(th[::-1])[::-1], 0.0)  # sum_{j > i} theta_j, i = 0..n
    return complex(t**n * divided_difference_exp(t * tails))


# expansion terms ---------------------------------------------------------------


@dataclass
class DysonTerm:
    """One expansion term: ``phi_{n,k}`` (``m`` is ``None``) or ``phi_m``."""

    state: WavePacket
    bound: float
    n: int = None
    k: int = None
    m: int = None

    @property
    def norm(self):
        return self.state.norm


@dataclass
class PartialSum:
    """``sum_{m <= M} lam^m phi_m`` with term data and a certified tail bound."""

    state: WavePacket
    terms: list
    lam: float
    radius: float
    tail_bound: float
    converged: bool = field(default=True)

    @property
    def term_norms(self):
        """``|lam|^m ||phi_m||`` for ``m = 0..M``."""
        return [abs(self.lam) ** t.m * t.norm for t in self.terms]

    @property
    def term_ratios(self):
        nrm = self.term_norms
        return [b / a if a > 0 else math.inf for a, b in zip(nrm[:-1], nrm[1:])]

    def __call__(self, x):
        return self.state(x)


def alpha_bound(pot: VectorPotentialFourier) -> float:
    """``sqrt(sum_j TV(mu_j)^2)``, an upper bound for ``sup |a|``."""
    return math.sqrt(sum(m.total_variation**2 for m in pot.mu))


def _check_gauge(pot):
    if coulomb_gauge_defect(pot) > 1e-12:
        warnings.warn(
            "potential is not divergence free; A = i hbar a.grad then misses the "
            "(i hbar / 2) div a term", stacklevel=3)


def _merge_histories(freqs, weights, hist):
    """Merge chains that share the current frequency and the whole rate history."""
    key = np.hstack([freqs, hist.real, hist.imag])
    _, first, inverse = np.unique(np.round(key, 11), axis=0, return_index=True,
                                  return_inverse=True)
    inverse = inverse.ravel()
    w = np.zeros(len(first), dtype=complex)
    np.add.at(w, inverse, weights)
    keep = w != 0
    return freqs[first][keep], w[keep], hist[first][keep]


def _chain_sum(n, k, pot, psi0, hbar, rate, horizon, V=None, max_order=DEFAULT_MAX_ORDER):
    """Sum over operator words of the time-ordered chain integrals (no prefactor)."""
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got n={n}, k={k}")
    if n > max_order:
        raise CapacityError(f"order n={n} exceeds the cap {max_order}")
    sq = pot.square_measure
    all_f, all_w, all_h = [], [], []
    for word in itertools.combinations(range(1, n + 1), k):
        f = psi0.freqs.copy()
        w = psi0.weights.copy()
        h = rate(f)[:, None]
        for pos in range(n, 0, -1):  # O_n acts first
            if pos in word:
                nf, nw = _A_raw(f, w, pot, hbar)
                nh = np.repeat(h, len(pot.atom_table[0]), axis=0)
                if V is not None and len(V):
                    vf, vw = _conv_raw(f, w, V)
                    nf = np.vstack([nf, vf])
                    nw = np.concatenate([nw, vw])
                    nh = np.vstack([nh, np.repeat(h, len(V), axis=0)])
            else:
                nf, nw = _conv_raw(f, w, sq, 0.5)
                nh = np.repeat(h, len(sq), axis=0)
            if len(nf) == 0:
                f, w, h = nf, nw, np.zeros((0, h.shape[1] + 1), dtype=complex)
                break
            h = np.hstack([nh, rate(nf)[:, None]])
            f, w, h = _merge_histories(nf, nw, h)
        all_f.append(f)
        all_w.append(w)
        all_h.append(h)
    rad = psi0.support_radius + k * max(pot.support_radius, V.support_radius if V is not None else 0.0) \
        + 2 * (n - k) * pot.support_radius
    if not all_f or sum(len(f) for f in all_f) == 0:
        return _packet(np.zeros((0, 3)), np.zeros(0), rad)
    f, w, h = _merge_histories(np.vstack(all_f), np.concatenate(all_w), np.vstack(all_h))
    vals = np.array([divided_difference_exp(-horizon * row) for row in h])
    return _packet(f, w * vals * horizon**n, rad)


def _nk_bound(n, k, alpha, rho, R, norm0, time_factor, hbar, alpha_tilde=None):
    """Norm bound for one ``phi_{n,k}`` with ``time_factor = T^n / n!`` style scaling."""
    if alpha_tilde is None:
        per_a = hbar * alpha
        prod = math.prod(rho + 2 * R * (n - k) + j * R for j in range(k))
    else:
        per_a = alpha_tilde
        prod = math.prod(max(1.0, rho + 2 * R * (n - k) + j * R) for j in range(k))
    return (math.comb(n, k) * time_factor / math.factorial(n) * per_a**k
            * (alpha**2 / 2) ** (n - k) * prod * norm0)


def _bound_data(pot, psi0, hbar, V):
    alpha = alpha_bound(pot)
    R = pot.support_radius
    alpha_tilde = None
    if V is not None:
        R = max(R, V.support_radius)
        alpha_tilde = 2 * max(hbar * alpha, V.total_variation)
    return alpha, R, alpha_tilde


def phi_nk(n, k, pot, psi0, t, hbar, V=None, max_order=DEFAULT_MAX_ORDER) -> DysonTerm:
    """``phi_{n,k}``: all words with ``k`` first-order and ``n - k`` second-order factors."""
    _check_gauge(pot)
    state = _chain_sum(n, k, pot, psi0, hbar, lambda f: 0.5j * hbar * np.sum(f**2, axis=1),
                       t, V, max_order)
    alpha, R, at = _bound_data(pot, psi0, hbar, V)
    bound = _nk_bound(n, k, alpha, psi0.support_radius, R, psi0.norm, t**n, hbar, at)
    return DysonTerm(state, bound, n=n, k=k)


def _orders_for(m):
    """Pairs ``(n, k)`` with ``2n - k = m`` and ``0 <= k <= n``."""
    return [(n, 2 * n - m) for n in range((m + 1) // 2, m + 1)]


def _combine(m, pot, psi0, hbar, rate, horizon, prefactor, time_factor, V, max_order):
    alpha, R, at = _bound_data(pot, psi0, hbar, V)
    total = None
    bound = 0.0
    for n, k in _orders_for(m):
        term = _chain_sum(n, k, pot, psi0, hbar, rate, horizon, V, max_order)
        term = term.scale(prefactor**n)
        total = term if total is None else total + term
        bound += abs(prefactor) ** n * _nk_bound(n, k, alpha, psi0.support_radius, R,
                                                  psi0.norm, time_factor**n, hbar, at)
    return DysonTerm(_packet(total.freqs, total.weights, total.support_radius), bound, m=m)


def phi_m(m, pot, psi0, t, hbar, V=None, max_order=DEFAULT_MAX_ORDER) -> DysonTerm:
    """Coefficient of ``lam^m``: ``sum_{2n - k = m} (-i/hbar)^n phi_{n,k}``."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    _check_gauge(pot)
    rate = lambda f: 0.5j * hbar * np.sum(f**2, axis=1)  # noqa: E731
    return _combine(m, pot, psi0, hbar, rate, t, -1j / hbar, t, V, max_order)


def _tail(lam, M, q, odd_factor, norm0):
    """Certified bound on ``sum_{m > M} |lam|^m ||phi_m||`` from the closed-form envelope
    ``||phi_{2j}|| <= q^j``, ``||phi_{2j+1}|| <= odd_factor q^j`` (times ``norm0``)."""
    x = lam**2 * q
    if x >= 1:
        return math.inf
    even_start = M // 2 + 1
    odd_start = (M + 1) // 2
    even = x**even_start / (1 - x)
    odd = abs(lam) * odd_factor * x**odd_start / (1 - x)
    return norm0 * (even + odd)


def _partial(lam, M, make_term, radius, q, odd_factor, norm0):
    if M < 0:
        raise ValueError("M must be nonnegative")
    terms = [make_term(m) for m in range(M + 1)]
    total = terms[0].state
    for m, term in enumerate(terms[1:], start=1):
        total = total + term.state.scale(lam**m)
    converged = abs(lam) < radius
    tail = _tail(abs(lam), M, q, odd_factor, norm0) if converged else math.inf
    state = _packet(total.freqs, total.weights, total.support_radius)
    return PartialSum(state, terms, lam, radius, tail, converged)


def dyson_partial_sum(lam, M, pot, psi0, t, hbar, V=None, max_order=DEFAULT_MAX_ORDER) -> PartialSum:
    """``sum_{m <= M} lam^m phi_m`` at time ``t``.

    ``converged`` is False (and the tail bound infinite) when ``|lam|`` is not
    inside the certified radius.
    """
    alpha, R, at = _bound_data(pot, psi0, hbar, V)
    r = max(psi0.support_radius, R)
    if alpha == 0 and at in (None, 0):
        radius, q, odd = math.inf, 0.0, 0.0
    elif at is None:
        radius = lambda_star(alpha, r, t, hbar) if r > 0 else math.inf
        q = 2 * alpha**2 * t / hbar * (2 * r**2 * t * hbar + 1)
        odd = 2 * r * t * alpha * hbar
    else:
        radius = lambda_tilde(at, max(alpha, 1e-300), r, t, hbar) if r > 0 else math.inf
        q = 2 * at**2 * t / hbar * (2 * r**2 * t / hbar + 1)
        odd = 2 * r * t * at
    return _partial(lam, M, lambda m: phi_m(m, pot, psi0, t, hbar, V, max_order),
                    radius, q, odd, psi0.norm)


def heat_dyson(z, lam, M, pot, psi0, hbar, V=None, max_order=DEFAULT_MAX_ORDER) -> PartialSum:
    """Partial sums for ``exp(-z H) psi0`` with ``Re z >= 0``.

    Terms are ``phi_m(z) = sum_{2n - k = m} (-z)^n phi_{n,k}(z)`` with chain
    integrals over the unit simplex and free factors
    ``exp(-z hbar^2 |y|^2 s / 2)``.  At ``z = i t / hbar`` this is exactly
    :func:`dyson_partial_sum`; real ``z = t / hbar`` gives the heat semigroup.
    """
    z = complex(z)
    if z.real < 0:
        raise ValueError("need Re z >= 0")
    _check_gauge(pot)
    rate = lambda f: 0.5 * z * hbar**2 * np.sum(f**2, axis=1)  # noqa: E731

    def make(m):
        return _combine(m, pot, psi0, hbar, rate, 1.0, -z, 1.0, V, max_order)

    alpha, R, at = _bound_data(pot, psi0, hbar, V)
    r = max(psi0.support_radius, R)
    if alpha == 0 or r == 0 or z == 0:
        radius, q, odd = math.inf, 0.0, 0.0
    else:
        radius = lambda_star_z(alpha, r, hbar, z)
        q = 2 * alpha**2 * abs(z) * (2 * r**2 * hbar**2 * abs(z) + 1)
        odd = 2 * r * abs(z) * alpha * hbar**2
    return _partial(lam, M, make, radius, q, odd, psi0.norm)


# text format -------------------------------------------------------------------


def dumps_wavepacket(psi: WavePacket) -> str:
    lines = [f"wavepacket radius {float(psi.support_radius)!r}"]
    lines += _dump_atoms(psi.freqs, psi.weights)
    lines.append("end")
    return "\n".join(lines) + "\n"


def loads_wavepacket(text: str) -> WavePacket:
    lines = list(_clean_lines(text))
    if not lines or not lines[0].startswith("wavepacket"):
        raise ValueError("missing 'wavepacket' header")
    head = lines[0].split()
    radius = float(head[2]) if len(head) >= 3 and head[1] == "radius" else -1.0
    atoms = []
    for line in lines[1:]:
        if line == "end":
            break
        vals = list(map(float, line.split()))
        if len(vals) != 5:
            raise ValueError(f"bad atom line: {line!r}")
        atoms.append((vals[:3], complex(vals[3], vals[4])))
    return WavePacket.from_atoms(atoms, radius)
