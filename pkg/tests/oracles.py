"""Independent reference computations shared by several test files."""

import itertools

import numpy as np
from scipy.linalg import expm


def lattice(pot, psi0, hops):
    """Frequencies reachable from ``psi0`` by at most ``hops`` potential atoms."""
    atoms = [tuple(k) for m in pot.mu for k in m.freqs]
    pts = {tuple(np.round(k, 12)) for k in psi0.freqs}
    frontier = set(pts)
    for _ in range(hops):
        frontier = {tuple(np.round(np.add(p, q), 12)) for p in frontier for q in atoms} - pts
        pts |= frontier
    return np.array(sorted(pts))


def hamiltonian_parts(pot, freqs, hbar):
    """Matrices of ``H0``, ``i hbar a.grad`` and ``|a|^2 / 2`` on the plane waves ``freqs``."""
    index = {tuple(np.round(k, 12)): i for i, k in enumerate(freqs)}
    n = len(freqs)
    H0 = np.diag(0.5 * hbar**2 * np.sum(freqs**2, axis=1)).astype(complex)
    A = np.zeros((n, n), dtype=complex)
    Bm = np.zeros((n, n), dtype=complex)
    comps = [list(zip(m.freqs, m.weights)) for m in pot.mu]
    for i, k in enumerate(freqs):
        for j, atoms in enumerate(comps):
            for q, w in atoms:
                dest = index.get(tuple(np.round(k + q, 12)))
                if dest is not None:
                    # i hbar w e^{iqx} d_j e^{ikx} = -hbar w k_j e^{i(k+q)x}
                    A[dest, i] += -hbar * w * k[j]
            for (q1, w1), (q2, w2) in itertools.product(atoms, atoms):
                dest = index.get(tuple(np.round(k + q1 + q2, 12)))
                if dest is not None:
                    Bm[dest, i] += 0.5 * w1 * w2
    return H0, A, Bm


def taylor_coefficients(pot, psi0, hbar, z, orders, points, radius=0.5, n_circle=48):
    """Coefficients of ``lam^m`` of ``exp(-z H(lam)) psi0`` at ``points``.

    ``H(lam) = H0 + lam A + lam^2 B`` on a truncated plane-wave lattice,
    with coefficients extracted by a discrete Cauchy integral.
    """
    freqs = lattice(pot, psi0, max(orders))
    H0, A, Bm = hamiltonian_parts(pot, freqs, hbar)
    index = {tuple(np.round(k, 12)): i for i, k in enumerate(freqs)}
    v0 = np.zeros(len(freqs), dtype=complex)
    for k, w in zip(psi0.freqs, psi0.weights):
        v0[index[tuple(np.round(k, 12))]] += w
    roots = np.exp(2j * np.pi * np.arange(n_circle) / n_circle)
    sols = np.array([expm(-z * (H0 + lam * A + lam**2 * Bm)) @ v0 for lam in radius * roots])
    waves = np.exp(1j * np.asarray(points) @ freqs.T)  # (P, n)
    vals = sols @ waves.T  # (n_circle, P)
    out = []
    for m in orders:
        out.append(np.mean(vals * roots[:, None] ** (-m), axis=0) / radius**m)
    return np.array(out)
