"""Same expansion, imaginary time: Feynman-Kac-Ito averages vs heat_dyson at real z."""

import numpy as np

from magpath.dyson import WavePacket, alpha_bound, heat_dyson
from magpath.feynman_mc import heat_fki_mc
from magpath.fourier_measure import PhysicalParams, cos_field, lambda_star_z

pot = cos_field()
psi0 = WavePacket.from_atoms([((1, 0, 0), 1.0), ((0, 0.5, 0), 0.5j)])
xs = ((0.0, 0.0, 0.0), (0.5, 0.2, 0.0), (-0.4, 1.0, 0.0))
t, hbar = 0.5, 1.0
z = t / hbar
for frac in (0.3, 1.0):
    lam = frac * lambda_star_z(alpha_bound(pot), 1.0, hbar, z)
    params = PhysicalParams(hbar, t, lam, xs)
    est = heat_fki_mc(pot, psi0, params, n_steps=256, n_samples=20_000, seed=2, order=3, partial_sums=True)
    exact = heat_dyson(z, lam, 3, pot, psi0, hbar)
    print(f"lambda = {frac} lambda*(z) = {lam:.4f}, tail bound {exact.tail_bound:.2e}")
    partial = None
    for m in range(4):
        term = exact.terms[m].state.scale(lam**m)
        partial = term if partial is None else partial + term
        print(f"   S_{m}: max z {float(np.max(est[m].z_score(partial(params.points)))):.2f}")
