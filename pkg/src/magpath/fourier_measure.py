"""Point-mass Fourier measures and the vector potentials they generate.

A component of the vector potential is stored as a finite list of atoms
``(k, w)`` and evaluated as ``a_j(z) = sum_q w_q exp(i k_q . z)``.  The same
atom sum is used for real and complex ``z``, so analytic continuation is
exact by construction.

Linear potentials ``a(x) = alpha @ x (+ offset)`` get their own class since
they carry a constant magnetic field and are not Fourier transforms of
finite measures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "DEDUP_TOL",
    "SQRT_I",
    "PointMassMeasure",
    "VectorPotentialFourier",
    "LinearVectorPotential",
    "PhysicalParams",
    "eval_potential",
    "convolve",
    "sup_norm_bound",
    "coulomb_gauge_defect",
    "lambda_star",
    "lambda_star_z",
    "lambda_tilde",
    "linear_potential_derive",
    "symmetric_gauge",
    "landau_gauge",
    "cos_field",
    "dumps_potential",
    "loads_potential",
]

DEDUP_TOL = 1e-12
SQRT_I = complex(math.cos(math.pi / 4), math.sin(math.pi / 4))


def _merge_atoms(freqs, weights, tol=DEDUP_TOL):
    """Sum the weights of atoms whose frequencies agree within ``tol``.

    Output atoms are sorted lexicographically, which gives every measure a
    canonical atom order.
    """
    freqs = np.asarray(freqs, dtype=float).reshape(-1, 3)
    weights = np.asarray(weights, dtype=complex).reshape(-1)
    if len(freqs) == 0:
        return np.zeros((0, 3)), np.zeros(0, dtype=complex)
    order = np.lexsort(freqs.T[::-1])
    freqs, weights = freqs[order], weights[order]
    keep_f, keep_w = [freqs[0]], [weights[0]]
    for k, w in zip(freqs[1:], weights[1:]):
        if np.all(np.abs(k - keep_f[-1]) <= tol):
            keep_w[-1] = keep_w[-1] + w
        else:
            keep_f.append(k)
            keep_w.append(w)
    f = np.array(keep_f)
    w = np.array(keep_w, dtype=complex)
    nz = w != 0
    return f[nz].reshape(-1, 3), w[nz]


def _lock(*arrays):
    for a in arrays:
        a.flags.writeable = False


@dataclass(frozen=True, eq=False)
class PointMassMeasure:
    """Finite complex measure ``sum_q w_q delta_{k_q}`` on R^3.

    ``support_radius`` is the declared radius R of a ball containing every
    atom.  It defaults to the largest atom norm, but operations such as
    :func:`convolve` propagate the bookkeeping radius instead of recomputing
    it.
    """

    freqs: np.ndarray
    weights: np.ndarray
    support_radius: float = -1.0

    def __post_init__(self):
        f, w = _merge_atoms(self.freqs, self.weights)
        actual = float(np.max(np.linalg.norm(f, axis=1))) if len(f) else 0.0
        radius = actual if self.support_radius < 0 else float(self.support_radius)
        if actual > radius * (1 + 1e-12) + 1e-12:
            raise ValueError(f"atom with |k|={actual} outside support radius {radius}")
        _lock(f, w)
        object.__setattr__(self, "freqs", f)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "support_radius", radius)

    @classmethod
    def from_atoms(cls, atoms, support_radius=-1.0):
        atoms = list(atoms)
        if not atoms:
            return cls(np.zeros((0, 3)), np.zeros(0, dtype=complex), max(support_radius, 0.0))
        freqs = [np.asarray(k, dtype=float) for k, _ in atoms]
        weights = [complex(w) for _, w in atoms]
        return cls(np.array(freqs), np.array(weights), support_radius)

    @classmethod
    def empty(cls):
        return cls(np.zeros((0, 3)), np.zeros(0, dtype=complex), 0.0)

    @classmethod
    def delta(cls, k, w=1.0):
        return cls.from_atoms([(k, w)])

    def __len__(self):
        return len(self.weights)

    @property
    def atoms(self):
        return [(k.copy(), complex(w)) for k, w in zip(self.freqs, self.weights)]

    @property
    def total_variation(self):
        return float(np.sum(np.abs(self.weights)))

    def __call__(self, z):
        """Fourier transform ``sum_q w_q exp(i k_q . z)`` at points ``z[..., 3]``."""
        z = np.asarray(z)
        if len(self) == 0:
            return np.zeros(z.shape[:-1], dtype=complex)
        return np.exp(1j * (z @ self.freqs.T)) @ self.weights

    def scale(self, c):
        return type(self)(self.freqs, c * self.weights, self.support_radius)

    def __add__(self, other):
        return type(self)(
            np.vstack([self.freqs, other.freqs]),
            np.concatenate([self.weights, other.weights]),
            max(self.support_radius, other.support_radius),
        )

    def is_conjugate_symmetric(self, tol=1e-12):
        """True when the transform is real on R^3."""
        mirrored = PointMassMeasure(-self.freqs, np.conj(self.weights))
        diff = self + mirrored.scale(-1.0)
        return diff.total_variation <= tol * max(1.0, self.total_variation)

    def __repr__(self):
        return f"{type(self).__name__}({len(self)} atoms, R={self.support_radius:g})"


def convolve(mu: PointMassMeasure, nu: PointMassMeasure) -> PointMassMeasure:
    """Convolution: atoms at all sums ``k + k'`` with weights ``w w'``."""
    if len(mu) == 0 or len(nu) == 0:
        return PointMassMeasure(np.zeros((0, 3)), np.zeros(0), mu.support_radius + nu.support_radius)
    freqs = (mu.freqs[:, None, :] + nu.freqs[None, :, :]).reshape(-1, 3)
    weights = np.outer(mu.weights, nu.weights).reshape(-1)
    return PointMassMeasure(freqs, weights, mu.support_radius + nu.support_radius)


@dataclass(frozen=True, eq=False)
class VectorPotentialFourier:
    """Vector potential whose components are transforms of point-mass measures."""

    mu: tuple
    realness: bool = True

    def __post_init__(self):
        mu = tuple(self.mu)
        if len(mu) != 3:
            raise ValueError("need exactly three component measures")
        object.__setattr__(self, "mu", mu)
        if self.realness and not all(m.is_conjugate_symmetric() for m in mu):
            raise ValueError("realness flag set but a component is not conjugate symmetric")

    @classmethod
    def from_components(cls, components, realness=True):
        """Build from ``{component_index: [(k, w), ...]}``."""
        mu = [PointMassMeasure.from_atoms(components.get(j, [])) for j in range(3)]
        return cls(tuple(mu), realness)

    @classmethod
    def zero(cls):
        return cls((PointMassMeasure.empty(),) * 3)

    @property
    def support_radius(self):
        return max(m.support_radius for m in self.mu)

    @cached_property
    def atom_table(self):
        """Union of all component atoms as ``(freqs[K, 3], weights[K, 3])``.

        Column ``j`` of the weight matrix holds the weight of that frequency in
        component ``j`` (zero when absent).
        """
        if sum(len(m) for m in self.mu) == 0:
            return np.zeros((0, 3)), np.zeros((0, 3), dtype=complex)
        all_f = np.vstack([m.freqs for m in self.mu if len(m)])
        keys, _ = _merge_atoms(all_f, np.ones(len(all_f)))
        table = np.zeros((len(keys), 3), dtype=complex)
        for j, m in enumerate(self.mu):
            for k, w in zip(m.freqs, m.weights):
                q = int(np.argmin(np.max(np.abs(keys - k), axis=1)))
                table[q, j] += w
        _lock(keys, table)
        return keys, table

    @cached_property
    def divergence_measure(self) -> PointMassMeasure:
        """Measure whose transform is ``div a``: weights ``i sum_j k_j w_j``."""
        f, w = self.atom_table
        return PointMassMeasure(f, 1j * np.sum(f * w, axis=1), self.support_radius)

    @cached_property
    def square_measure(self) -> PointMassMeasure:
        """Measure whose transform is ``a . a`` (no conjugation), i.e. ``sum_j mu_j * mu_j``."""
        out = PointMassMeasure(np.zeros((0, 3)), np.zeros(0), 2 * self.support_radius)
        for m in self.mu:
            out = out + convolve(m, m)
        return PointMassMeasure(out.freqs, out.weights, 2 * self.support_radius)

    def __call__(self, z):
        return eval_potential(self, z)

    def divergence(self, z):
        return self.divergence_measure(z)

    def __repr__(self):
        sizes = ",".join(str(len(m)) for m in self.mu)
        return f"VectorPotentialFourier(atoms=({sizes}), R={self.support_radius:g})"


def eval_potential(pot: VectorPotentialFourier, z) -> np.ndarray:
    """Evaluate ``a(z)`` for real or complex ``z[..., 3]``; returns ``[..., 3]`` complex."""
    z = np.asarray(z)
    f, w = pot.atom_table
    if len(f) == 0:
        return np.zeros(z.shape, dtype=complex)
    return np.exp(1j * (z @ f.T)) @ w


def cos_field(component=0, axis=1, amplitude=1.0, freq=1.0):
    """``a_component(x) = amplitude * cos(freq * x_axis)``, other components zero."""
    k = np.zeros(3)
    k[axis] = freq
    atoms = [(k, amplitude / 2), (-k, amplitude / 2)]
    return VectorPotentialFourier.from_components({component: atoms})


def sup_norm_bound(pot: VectorPotentialFourier, n_grid=33, half_width=2 * math.pi):
    """Certified and sampled bounds for ``sup |a|`` over R^3.

    The certified bound is ``sqrt(sum_j TV(mu_j)^2)``.  The sampled value is
    the maximum of ``|a(x)|`` over the ``n_grid^3`` uniform grid on
    ``[-half_width, half_width]^3`` (which contains the origin for odd
    ``n_grid``).
    """
    if not pot.realness:
        raise ValueError("sup-norm bound is defined for real potentials only")
    bound = math.sqrt(sum(m.total_variation ** 2 for m in pot.mu))
    if bound == 0.0:
        return 0.0, 0.0
    axis = np.linspace(-half_width, half_width, n_grid)
    pts = np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), axis=-1).reshape(-1, 3)
    vals = eval_potential(pot, pts).real
    sampled = float(np.max(np.linalg.norm(vals, axis=1)))
    return bound, min(sampled, bound)


def coulomb_gauge_defect(pot: VectorPotentialFourier) -> float:
    """Total variation of the divergence measure; zero iff ``div a == 0``."""
    div = pot.divergence_measure
    scale = max(1.0, sum(m.total_variation for m in pot.mu) * max(pot.support_radius, 1.0))
    w = div.weights[np.abs(div.weights) > 1e-14 * scale]
    return float(np.sum(np.abs(w)))


def _positive(**kw):
    for name, v in kw.items():
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v}")


def lambda_star(alpha, r, t, hbar):
    """Convergence radius of the real-time coupling expansion."""
    _positive(alpha=alpha, r=r, t=t, hbar=hbar)
    return (2 * alpha**2 * t / hbar * (2 * r**2 * t * hbar + 1)) ** -0.5


def lambda_star_z(alpha, r, hbar, z):
    """Radius for ``exp(-z H)``; agrees with :func:`lambda_star` at ``z = i t / hbar``."""
    _positive(alpha=alpha, r=r, hbar=hbar, abs_z=abs(z))
    az = abs(z)
    return (2 * alpha**2 * az * (2 * r**2 * hbar**2 * az + 1)) ** -0.5


def lambda_tilde(alpha_tilde, alpha, r, t, hbar):
    """Radius when a bounded scalar potential is added.

    ``alpha`` is accepted for signature symmetry; the radius depends on it
    only through ``alpha_tilde = 2 max(hbar sup|a|, sup|V|)``.
    """
    _positive(alpha_tilde=alpha_tilde, alpha=alpha, r=r, t=t, hbar=hbar)
    return (2 * alpha_tilde**2 * t / hbar * (2 * r**2 * t / hbar + 1)) ** -0.5


@dataclass(frozen=True, eq=False)
class LinearVectorPotential:
    """``a(x) = alpha @ x + offset`` with ``alpha[i, j]`` the coefficient of x_j in a_i.

    The offset is a constant (pure gauge) shift and does not affect any of the
    derived field quantities.
    """

    alpha: np.ndarray
    offset: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        a = np.array(self.alpha, dtype=float).reshape(3, 3)
        o = np.array(self.offset, dtype=float).reshape(3)
        _lock(a, o)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "offset", o)

    @property
    def B_field(self):
        a = self.alpha
        return np.array([a[2, 1] - a[1, 2], a[0, 2] - a[2, 0], a[1, 0] - a[0, 1]])

    @property
    def A_matrix(self):
        return self.alpha.T @ self.alpha

    @property
    def eigs_a(self):
        return np.clip(np.linalg.eigvalsh(self.A_matrix), 0.0, None)

    @property
    def a_bar(self):
        return float(self.eigs_a[-1])

    @property
    def t_star(self):
        if self.a_bar <= 0:
            return math.inf
        return math.pi / (4 * math.sqrt(self.a_bar))

    @property
    def divergence_value(self):
        return float(np.trace(self.alpha))

    def __call__(self, z):
        return np.asarray(z) @ self.alpha.T + self.offset

    def divergence(self, z):
        return np.full(np.asarray(z).shape[:-1], self.divergence_value, dtype=complex)

    def __repr__(self):
        return f"LinearVectorPotential(B={self.B_field.tolist()})"


def linear_potential_derive(alpha) -> LinearVectorPotential:
    return LinearVectorPotential(alpha)


def symmetric_gauge(B=1.0):
    """``a = B/2 (-x_2, x_1, 0)``, field ``B`` along the third axis."""
    return LinearVectorPotential([[0, -B / 2, 0], [B / 2, 0, 0], [0, 0, 0]])


def landau_gauge(B=1.0):
    """``a = (-B x_2, 0, 0)``, same field as :func:`symmetric_gauge`."""
    return LinearVectorPotential([[0, -B, 0], [0, 0, 0], [0, 0, 0]])


@dataclass(frozen=True)
class PhysicalParams:
    hbar: float = 1.0
    t: float = 1.0
    lam: float = 0.0
    x: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not (self.hbar > 0 and self.t > 0):
            raise ValueError("hbar and t must be positive")

    @property
    def c_scale(self):
        """``sqrt(i hbar)`` on the principal branch."""
        return math.sqrt(self.hbar) * SQRT_I

    @property
    def points(self):
        """Evaluation points as an ``(P, 3)`` array."""
        return np.atleast_2d(np.asarray(self.x, dtype=float))


# plain-text format -----------------------------------------------------------


def _fmt(v):
    return repr(float(v))


def _dump_atoms(freqs, weights):
    return [
        " ".join(_fmt(x) for x in (*k, w.real, w.imag)) for k, w in zip(freqs, weights)
    ]


def dumps_potential(pot) -> str:
    """Serialize a potential to the plain-text format.

    Fourier potentials::

        potential fourier real
        component 1 radius R
        k1 k2 k3 re_w im_w
        ...
        end

    Linear potentials write three matrix rows and an optional offset row.
    """
    if isinstance(pot, LinearVectorPotential):
        lines = ["potential linear"]
        lines += [" ".join(_fmt(v) for v in row) for row in pot.alpha]
        if np.any(pot.offset):
            lines.append("offset " + " ".join(_fmt(v) for v in pot.offset))
        lines.append("end")
        return "\n".join(lines) + "\n"
    lines = ["potential fourier " + ("real" if pot.realness else "complex")]
    for j, m in enumerate(pot.mu):
        lines.append(f"component {j + 1} radius {_fmt(m.support_radius)}")
        lines += _dump_atoms(m.freqs, m.weights)
    lines.append("end")
    return "\n".join(lines) + "\n"


def _clean_lines(text):
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            yield line


def loads_potential(text: str):
    lines = list(_clean_lines(text))
    if not lines or not lines[0].startswith("potential"):
        raise ValueError("missing 'potential' header")
    head = lines[0].split()
    body = lines[1:]
    if body and body[-1] == "end":
        body = body[:-1]
    if head[1] == "linear":
        rows = [list(map(float, line.split())) for line in body if not line.startswith("offset")]
        offset = [0.0, 0.0, 0.0]
        for line in body:
            if line.startswith("offset"):
                offset = list(map(float, line.split()[1:]))
        if len(rows) != 3 or any(len(r) != 3 for r in rows):
            raise ValueError("linear potential needs a 3x3 block")
        return LinearVectorPotential(rows, offset)
    if head[1] != "fourier":
        raise ValueError(f"unknown potential kind {head[1]!r}")
    realness = len(head) < 3 or head[2] == "real"
    comps = {0: [], 1: [], 2: []}
    radii = {0: -1.0, 1: -1.0, 2: -1.0}
    current = None
    for line in body:
        parts = line.split()
        if parts[0] == "component":
            current = int(parts[1]) - 1
            if len(parts) >= 4 and parts[2] == "radius":
                radii[current] = float(parts[3])
            continue
        if current is None:
            raise ValueError("atom line before any 'component' line")
        vals = list(map(float, parts))
        if len(vals) != 5:
            raise ValueError(f"bad atom line: {line!r}")
        comps[current].append((vals[:3], complex(vals[3], vals[4])))
    mu = tuple(PointMassMeasure.from_atoms(comps[j], radii[j]) if comps[j]
               else PointMassMeasure(np.zeros((0, 3)), np.zeros(0), max(radii[j], 0.0))
               for j in range(3))
    return VectorPotentialFourier(mu, realness)
