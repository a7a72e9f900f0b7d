"""Projected area integrals in different bases, with and without the counterterm.

Expanding a Brownian path in an orthonormal basis and truncating gives a
quadratic form whose limit depends on the basis unless the area counterterm
r_n is subtracted.  Tents have r_n = 0; the full trigonometric basis has a
vanishing total; a one-sided subfamily accumulates a harmonic-series term.
"""

from magpath.cameron_martin import OrthonormalBasis
from magpath.fourier_measure import LinearVectorPotential
from magpath.renormalization import gdagg_eigs, gdagg_eigs_analytic, hn_convergence_experiment

pot = LinearVectorPotential([[0, -0.5, 0.5], [0.5, 0, -0.5], [-0.5, 0.5, 0]])
print("G^dagger G eigenvalues (tents, 64 per axis) vs 4 a_j / (pi^2 (1 + 2m)^2):")
for num, ex in zip(gdagg_eigs(pot)[:6], gdagg_eigs_analytic(pot, 1.0, 6)):
    print(f"   {num:.6f}  {ex:.6f}")

bases = [OrthonormalBasis.tent(), OrthonormalBasis.trig(), OrthonormalBasis.trig((1, 4), constants=False)]
reports = hn_convergence_experiment(pot, bases, [3, 12, 48, 192], n_samples=2000, seed=3, fine_steps=2**12)
for rep in reports:
    print(f"\nbasis {rep.basis}")
    print("     n      r_n   E|h_n - h|^2   E|g_n - h|^2 (no counterterm)")
    for r in rep.rows:
        print(f"   {r['n']:4d}  {r['r_n']:7.4f}   {r['gap_renorm']:.4f}         {r['gap_raw']:.4f}")
