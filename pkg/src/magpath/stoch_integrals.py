"""Discretized line integrals along paths, with complex rescaling.

All sums have the form ``sum_j a(c * gamma(tau_j) + x) . (gamma_{j+1} - gamma_j)``
where the evaluation time ``tau_j`` is set by the rule.  With ``c`` complex
the potential is evaluated by analytic continuation of its atom sum.

The batch routines work on stacks of paths ``values[B, n + 1, 3]`` and
several shift points ``x[P, 3]`` at once, which is what the Monte Carlo
estimators need.  Fourier potentials are contracted atom by atom so the
shift only costs a phase per atom.
"""

from __future__ import annotations

import enum

import numpy as np
from numpy.polynomial import hermite_e

from .cameron_martin import GridPath
from .fourier_measure import (
    SQRT_I,
    LinearVectorPotential,
    PointMassMeasure,
    VectorPotentialFourier,
)

__all__ = [
    "QuadratureRule",
    "riemann_batch",
    "correction_batch",
    "scalar_integral_batch",
    "line_integral_riemann",
    "stratonovich_corrected",
    "line_integral",
    "cylinder_fresnel_left",
    "cylinder_fresnel_right",
    "cylinder_fresnel_limit_right",
    "gaussian_osc_moment",
]


class QuadratureRule(enum.Enum):
    LEFT = "left"
    RIGHT = "right"
    MIDPOINT = "midpoint"
    CORRECTED = "corrected"  # LEFT plus the divergence correction


def _shifts(shift):
    return np.atleast_2d(np.asarray(shift, dtype=float).reshape(-1, 3))


def _eval_points(values, rule):
    if rule is QuadratureRule.LEFT or rule is QuadratureRule.CORRECTED:
        return values[:, :-1]
    if rule is QuadratureRule.RIGHT:
        return values[:, 1:]
    if rule is QuadratureRule.MIDPOINT:
        return 0.5 * (values[:, :-1] + values[:, 1:])
    raise ValueError(f"unknown rule {rule}")


def riemann_batch(pot, values, rule, c=1.0, shifts=(0.0, 0.0, 0.0)):
    """Riemann sums for every path and shift, shape ``(B, P)``.

    ``rule`` may not be CORRECTED here; see :func:`correction_batch`.
    """
    rule = QuadratureRule(rule)
    if rule is QuadratureRule.CORRECTED:
        raise ValueError("use stratonovich_corrected for the corrected rule")
    values = np.asarray(values)
    x = _shifts(shifts)
    pts = _eval_points(values, rule)
    inc = np.diff(values, axis=1)
    if isinstance(pot, LinearVectorPotential):
        inner = c * np.einsum("bjc,bjc->b", pts @ pot.alpha.T, inc)
        drift = (x @ pot.alpha.T + pot.offset) @ (values[:, -1] - values[:, 0]).T
        return inner[:, None] + drift.T
    freqs, weights = pot.atom_table
    if len(freqs) == 0:
        return np.zeros((values.shape[0], len(x)), dtype=complex)
    phases = np.exp(1j * c * (pts @ freqs.T))  # (B, n, K)
    moments = np.einsum("bjq,bjc->bqc", phases, inc)
    shift_phase = np.exp(1j * (x @ freqs.T))  # (P, K)
    return np.einsum("bqc,qc,pq->bp", moments, weights, shift_phase)


def _trapezoid_weights(n, dt):
    w = np.full(n + 1, dt)
    w[0] = w[-1] = dt / 2
    return w


def scalar_integral_batch(measure: PointMassMeasure, values, dt, c=1.0, shifts=(0.0, 0.0, 0.0)):
    """Trapezoid value of ``int_0^t f(c gamma(s) + x) ds`` where ``f`` is the
    transform of ``measure``; shape ``(B, P)``."""
    values = np.asarray(values)
    x = _shifts(shifts)
    if len(measure) == 0:
        return np.zeros((values.shape[0], len(x)), dtype=complex)
    w = _trapezoid_weights(values.shape[1] - 1, dt)
    phases = np.exp(1j * c * (values @ measure.freqs.T))  # (B, n+1, K)
    per_atom = np.einsum("j,bjq->bq", w, phases)
    return per_atom @ (measure.weights[:, None] * np.exp(1j * (x @ measure.freqs.T)).T)


def correction_batch(pot, values, dt, c=1.0, shifts=(0.0, 0.0, 0.0), carry_scale=True):
    """``(c/2) int_0^t div a(c gamma + x) ds`` by trapezoid on the knots.

    With ``carry_scale=False`` the leading factor is ``1/2`` instead of
    ``c/2``; this variant exists only to show numerically that it is wrong.
    """
    values = np.asarray(values)
    x = _shifts(shifts)
    factor = c / 2 if carry_scale else 0.5
    if isinstance(pot, LinearVectorPotential):
        horizon = dt * (values.shape[1] - 1)
        val = factor * pot.divergence_value * horizon
        return np.full((values.shape[0], len(x)), val, dtype=complex)
    return factor * scalar_integral_batch(pot.divergence_measure, values, dt, c, x)


def line_integral_riemann(pot, path: GridPath, rule, c=1.0, shift=(0.0, 0.0, 0.0)) -> complex:
    """``sum_j a(c gamma(tau_j) + shift) . (gamma_{j+1} - gamma_j)``.

    ``tau_j`` is the left or right knot; MIDPOINT evaluates at
    ``c (gamma_j + gamma_{j+1}) / 2 + shift``.
    """
    return complex(riemann_batch(pot, path.values[None], rule, c, shift)[0, 0])


def stratonovich_corrected(pot, path: GridPath, c=1.0, shift=(0.0, 0.0, 0.0), carry_scale=True) -> complex:
    """LEFT sum plus ``(c/2) int div a(c gamma + shift) ds`` (trapezoid on knots)."""
    v = path.values[None]
    left = riemann_batch(pot, v, QuadratureRule.LEFT, c, shift)
    corr = correction_batch(pot, v, path.dt, c, shift, carry_scale)
    return complex((left + corr)[0, 0])


def line_integral(pot, values, dt, rule, c=1.0, shifts=(0.0, 0.0, 0.0)):
    """Dispatch any rule, CORRECTED included, on a batch; shape ``(B, P)``."""
    rule = QuadratureRule(rule)
    if rule is QuadratureRule.CORRECTED:
        left = riemann_batch(pot, values, QuadratureRule.LEFT, c, shifts)
        return left + correction_batch(pot, values, dt, c, shifts)
    return riemann_batch(pot, values, rule, c, shifts)


# closed-form oscillatory integrals of cylinder functions ------------------------


def _fourier_atoms(pot):
    if not isinstance(pot, VectorPotentialFourier):
        raise TypeError("closed forms need a Fourier potential")
    return pot.atom_table


def cylinder_fresnel_left(pot, n, t, hbar) -> complex:
    """Feynman-map value of the left-point sum; identically zero."""
    _fourier_atoms(pot)
    if n < 1:
        raise ValueError("n must be positive")
    return 0j


def cylinder_fresnel_right(pot, n, t, hbar) -> complex:
    """Feynman-map value of the right-point sum on ``n`` slices.

    ``-hbar sum_j sum_atoms exp(-i hbar t_{j+1} |k|^2 / 2) dt (k . w)``.
    """
    freqs, weights = _fourier_atoms(pot)
    if n < 1:
        raise ValueError("n must be positive")
    dt = t / n
    tj = dt * np.arange(1, n + 1)
    k2 = np.sum(freqs**2, axis=1)
    kw = np.sum(freqs * weights, axis=1)
    phases = np.exp(-0.5j * hbar * np.outer(tj, k2))  # (n, K)
    return complex(-hbar * dt * np.sum(phases @ kw))


def cylinder_fresnel_limit_right(pot, t, hbar) -> complex:
    """Limit of :func:`cylinder_fresnel_right` as the slicing is refined."""
    freqs, weights = _fourier_atoms(pot)
    k2 = np.sum(freqs**2, axis=1)
    kw = np.sum(freqs * weights, axis=1)
    rate = 0.5j * hbar * k2
    with np.errstate(divide="ignore", invalid="ignore"):
        integral = np.where(k2 > 0, -np.expm1(-rate * t) / rate, t)
    return complex(-hbar * np.sum(kw * integral))


def gaussian_osc_moment(zeta, k) -> complex:
    """``E[exp(i sqrt(i) zeta X) X^(2k)]`` for standard normal ``X``.

    Equals ``(-1)^k He_{2k}(sqrt(i) zeta) exp(-i zeta^2 / 2)`` with ``He`` the
    probabilists' Hermite polynomials.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    u = SQRT_I * complex(zeta)
    coef = np.zeros(2 * k + 1)
    coef[-1] = 1.0
    return complex((-1) ** k * hermite_e.hermeval(u, coef) * np.exp(-u * u / 2))

