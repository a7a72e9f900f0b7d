"""Monte Carlo Wiener integrals for the magnetic propagator.

Paths are sampled real under Wiener measure and rotated by
``c = sqrt(xi hbar)`` only where the integrand is evaluated: ``xi = i`` gives
the real-time (Feynman map) expressions, ``xi = 1`` the heat semigroup.

Reproducibility.  Sample ``b`` always uses the random stream keyed by
``(seed, b)``.  Samples are processed in chunks of fixed size, the per-sample
summands are stored in sample order, and the mean is reduced with
:func:`math.fsum`, which is exactly rounded and hence independent of the
order of accumulation.  Worker count therefore never changes a single bit of
the output.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cameron_martin import brownian_paths
from .fourier_measure import LinearVectorPotential, PhysicalParams, PointMassMeasure
from .stoch_integrals import QuadratureRule, correction_batch, riemann_batch, scalar_integral_batch

__all__ = [
    "MCEstimate",
    "ThresholdError",
    "CHUNK",
    "run_summands",
    "stochastic_action",
    "psi_moments_mc",
    "psi_m_mc",
    "psi_series_mc",
    "psi_exp_mc",
    "heat_fki_mc",
    "psi_m_with_V",
]

CHUNK = 512


class ThresholdError(ValueError):
    """Time horizon at or beyond the convergence threshold ``t*``."""


@dataclass(frozen=True)
class MCEstimate:
    """Mean and per-part standard error of a Monte Carlo estimate.

    ``mean`` and ``stderr`` may be arrays; ``stderr`` holds the standard
    error of the real part in its real part and that of the imaginary part
    in its imaginary part.  Indexing returns the estimate for one entry.
    """

    mean: complex | np.ndarray
    stderr: complex | np.ndarray
    n_samples: int
    n_steps: int
    seed: int
    rule: str

    @property
    def shape(self):
        return np.shape(self.mean)

    @property
    def sigma(self):
        """Combined standard error ``hypot(se_re, se_im)``."""
        s = np.asarray(self.stderr)
        return np.hypot(s.real, s.imag)

    def __getitem__(self, idx):
        return MCEstimate(np.asarray(self.mean)[idx], np.asarray(self.stderr)[idx],
                          self.n_samples, self.n_steps, self.seed, self.rule)

    def __complex__(self):
        return complex(self.mean)

    def z_score(self, reference, extra=0.0):
        """``|mean - reference| / (sigma + extra)``."""
        return np.abs(np.asarray(self.mean) - reference) / (self.sigma + extra)

    def csv_rows(self):
        """Flat rows ``(index, re, im, se_re, se_im, n_samples, n_steps, seed)``."""
        mean = np.atleast_1d(self.mean)
        se = np.atleast_1d(self.stderr)
        for idx in np.ndindex(mean.shape):
            yield (idx, mean[idx].real, mean[idx].imag, se[idx].real, se[idx].imag,
                   self.n_samples, self.n_steps, self.seed)


def _fsum_stats(x):
    n = len(x)
    mean = math.fsum(x) / n
    if n < 2:
        return mean, math.inf
    var = math.fsum((x - mean) ** 2) / (n - 1)
    return mean, math.sqrt(var / n)


def _reduce(summands):
    """Exact-sum mean and standard error along axis 0, separately for Re and Im."""
    flat = summands.reshape(summands.shape[0], -1)
    means = np.empty(flat.shape[1], dtype=complex)
    errs = np.empty(flat.shape[1], dtype=complex)
    for j in range(flat.shape[1]):
        mr, sr = _fsum_stats(np.ascontiguousarray(flat[:, j].real))
        mi, si = _fsum_stats(np.ascontiguousarray(flat[:, j].imag))
        means[j] = complex(mr, mi)
        errs[j] = complex(sr, si)
    shape = summands.shape[1:]
    return means.reshape(shape), errs.reshape(shape)


def run_summands(kernel, n_samples, n_steps, t, seed, threads=1, chunk=CHUNK):
    """Evaluate ``kernel(paths)`` on all samples and return the stacked summands.

    ``kernel`` maps knot values ``(B, n_steps + 1, 3)`` to an array whose
    leading axis is the batch.  Chunk boundaries do not depend on ``threads``.
    """
    if n_samples < 1 or n_steps < 1:
        raise ValueError("need positive sample and step counts")
    starts = list(range(0, n_samples, chunk))

    def work(start):
        idx = np.arange(start, min(start + chunk, n_samples))
        return kernel(brownian_paths(n_steps, t, seed, idx))

    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, starts))
    else:
        parts = [work(s) for s in starts]
    return np.concatenate(parts, axis=0)


def _estimate(kernel, n_samples, n_steps, t, seed, threads, rule):
    summands = run_summands(kernel, n_samples, n_steps, t, seed, threads)
    mean, err = _reduce(summands)
    return MCEstimate(mean, err, n_samples, n_steps, int(seed), str(rule))


def _rule_name(rule):
    return QuadratureRule(rule).value


def stochastic_action(pot, values, dt, c, shifts, rule=QuadratureRule.CORRECTED, carry_scale=True):
    """``c * int a(c omega + x) o d omega`` per path and shift, shape ``(B, P)``.

    CORRECTED is the Ito sum plus the divergence correction; MIDPOINT uses
    the midpoint sum (exact telescoping for linear fields).
    """
    rule = QuadratureRule(rule)
    if rule is QuadratureRule.CORRECTED:
        s = riemann_batch(pot, values, QuadratureRule.LEFT, c, shifts)
        s = s + correction_batch(pot, values, dt, c, shifts, carry_scale)
    else:
        s = riemann_batch(pot, values, rule, c, shifts)
    return c * s


def _endpoint_values(psi0, values, c, shifts):
    """``psi0(c omega(t) + x)`` for every path and shift, shape ``(B, P)``."""
    z = c * values[:, -1][:, None, :] + shifts[None, :, :]
    return np.asarray(psi0(z.reshape(-1, 3))).reshape(z.shape[:2])


def _default_rule(pot):
    return QuadratureRule.MIDPOINT if isinstance(pot, LinearVectorPotential) else QuadratureRule.CORRECTED


def psi_moments_mc(M, pot, psi0, params: PhysicalParams, n_steps=512, n_samples=100_000, seed=0,
                   rule=None, threads=1, xi=1j, V: PointMassMeasure | None = None,
                   carry_scale=True, lam=None) -> MCEstimate:
    """All series terms ``m = 0..M`` at all points, sharing the same paths.

    Term ``m`` estimates
    ``(1/m!) (-i/hbar)^m E[(c int a(c omega + x) o d omega + int V ds)^m psi0(c omega(t) + x)]``
    with ``c = sqrt(xi hbar)``.  The result has shape ``(M + 1, P)``.  With
    ``lam`` given, row ``j`` is instead the partial sum
    ``sum_{m <= j} lam^m psi_m``, with standard errors taken from the
    per-sample partial sums.
    """
    if M < 0:
        raise ValueError("M must be nonnegative")
    rule = _default_rule(pot) if rule is None else QuadratureRule(rule)
    c = np.sqrt(complex(xi) * params.hbar)
    x = params.points
    dt = params.t / n_steps
    coef = np.array([(-1j / params.hbar) ** m / math.factorial(m) for m in range(M + 1)])
    if lam is not None:
        coef = coef * np.array([lam**m for m in range(M + 1)])

    def kernel(values):
        end = _endpoint_values(psi0, values, c, x)
        if M == 0:
            return coef[0] * end[:, None, :]
        s = stochastic_action(pot, values, dt, c, x, rule, carry_scale)
        if V is not None:
            s = s + scalar_integral_batch(V, values, dt, c, x)
        terms = coef[None, :, None] * s[:, None, :] ** np.arange(M + 1)[None, :, None]
        if lam is not None:
            terms = np.cumsum(terms, axis=1)
        return terms * end[:, None, :]

    return _estimate(kernel, n_samples, n_steps, params.t, seed, threads, _rule_name(rule))


def psi_m_mc(m, pot, psi0, params, n_steps=512, n_samples=100_000, seed=0, rule=None,
             threads=1, carry_scale=True) -> MCEstimate:
    """Series term ``psi_m(t, x)`` at every point of ``params.x``; shape ``(P,)``."""
    est = psi_moments_mc(m, pot, psi0, params, n_steps, n_samples, seed, rule, threads,
                         carry_scale=carry_scale)
    return est[m]


def psi_m_with_V(m, pot, V, psi0, params, n_steps=512, n_samples=100_000, seed=0, rule=None,
                 threads=1) -> MCEstimate:
    """As :func:`psi_m_mc` with the scalar potential integral added to the action."""
    return psi_moments_mc(m, pot, psi0, params, n_steps, n_samples, seed, rule, threads, V=V)[m]


def psi_series_mc(lam, M, pot, psi0, params, n_steps=512, n_samples=100_000, seed=0, rule=None,
                  threads=1, tail_bound=None):
    """Partial sums ``S_j = sum_{m <= j} lam^m psi_m`` for ``j = 0..M``.

    Returns ``(estimate, tail_bound)`` where the estimate has shape
    ``(M + 1, P)``.  ``tail_bound`` is passed through unchanged, typically
    from :func:`magpath.dyson.dyson_partial_sum`.
    """
    est = psi_moments_mc(M, pot, psi0, params, n_steps, n_samples, seed, rule, threads, lam=lam)
    return est, tail_bound


def psi_exp_mc(pot: LinearVectorPotential, psi0, params, n_steps=512, n_samples=100_000, seed=0,
               rule=QuadratureRule.MIDPOINT, threads=1, xi=1j) -> MCEstimate:
    """``E[psi0(c omega(t) + x) exp(-(i lam / hbar) c int a(c omega + x) o d omega)]``.

    For a linear field the midpoint sum is the exact Stratonovich integral
    of the polygon.  ``rule`` may be set to LEFT or RIGHT to show that the
    result then changes.  Raises :class:`ThresholdError` for ``t >= t*``
    (the bound scales with ``|lam|``).
    """
    if isinstance(pot, LinearVectorPotential) and params.lam != 0:
        t_star = pot.t_star / abs(params.lam)
        if params.t >= t_star:
            raise ThresholdError(
                f"beyond convergence threshold t*: t={params.t} >= t*={t_star:.6g}")
    rule = QuadratureRule(rule)
    c = np.sqrt(complex(xi) * params.hbar)
    x = params.points
    dt = params.t / n_steps
    lam, hbar = params.lam, params.hbar

    def kernel(values):
        end = _endpoint_values(psi0, values, c, x)
        s = stochastic_action(pot, values, dt, c, x, rule)
        return end * np.exp(-1j * lam / hbar * s)

    return _estimate(kernel, n_samples, n_steps, params.t, seed, threads, _rule_name(rule))


def _scaled_terms(est, lam):
    scale = np.array([lam**m for m in range(est.shape[0])])[:, None]
    return MCEstimate(est.mean * scale, est.stderr * np.abs(scale), est.n_samples,
                      est.n_steps, est.seed, est.rule)


def heat_fki_mc(pot, psi0, params, real_time=False, n_steps=512, n_samples=100_000, seed=0,
                rule=None, threads=1, order=None, xi=None, partial_sums=False) -> MCEstimate:
    """Feynman-Kac-Ito estimate of ``exp(-(t/hbar) H) psi0`` at ``params.x``.

    Paths are scaled by ``sqrt(hbar)``; the phase is
    ``exp(-(i lam / sqrt(hbar)) int a(sqrt(hbar) omega + x) o d omega)``.
    With ``order=M`` the series terms ``lam^m psi_m`` for ``m <= M`` are
    returned instead (shape ``(M + 1, P)``), or their partial sums when
    ``partial_sums`` is set, to be compared with
    :func:`magpath.dyson.heat_dyson` at ``z = t / hbar``.  ``real_time``
    delegates to the Feynman-map versions with the same seed.  ``xi``
    overrides the rotation (``xi = 1`` heat, ``xi = i`` real time).
    """
    if xi is None:
        xi = 1j if real_time else 1.0
    rule = _default_rule(pot) if rule is None else QuadratureRule(rule)
    if order is not None:
        if partial_sums:
            return psi_moments_mc(order, pot, psi0, params, n_steps, n_samples, seed, rule,
                                  threads, xi=xi, lam=params.lam)
        est = psi_moments_mc(order, pot, psi0, params, n_steps, n_samples, seed, rule, threads, xi=xi)
        return _scaled_terms(est, params.lam)
    if isinstance(pot, LinearVectorPotential) and xi != 1.0:
        return psi_exp_mc(pot, psi0, params, n_steps, n_samples, seed, rule, threads, xi)
    c = np.sqrt(complex(xi) * params.hbar)
    x = params.points
    dt = params.t / n_steps
    lam, hbar = params.lam, params.hbar

    def kernel(values):
        end = _endpoint_values(psi0, values, c, x)
        s = stochastic_action(pot, values, dt, c, x, rule)
        return end * np.exp(-1j * lam / hbar * s)

    return _estimate(kernel, n_samples, n_steps, params.t, seed, threads, _rule_name(rule))
