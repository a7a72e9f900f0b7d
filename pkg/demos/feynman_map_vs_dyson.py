"""Monte Carlo over complex-rotated Brownian paths against the exact expansion."""

import numpy as np

from magpath.dyson import WavePacket, phi_m
from magpath.feynman_mc import psi_moments_mc
from magpath.fourier_measure import PhysicalParams, cos_field

pot = cos_field()
psi0 = WavePacket.from_atoms([((1, 0, 0), 1.0), ((0, 0.5, 0), 0.5j)])
xs = ((0.0, 0.0, 0.0), (0.5, 0.2, 0.0), (-1.0, 0.4, 0.0), (1.0, 2.0, 0.5))
params = PhysicalParams(hbar=1.0, t=1.0, lam=0.0, x=xs)

est = psi_moments_mc(2, pot, psi0, params, n_steps=256, n_samples=40_000, seed=1)
for m in range(3):
    exact = phi_m(m, pot, psi0, 1.0, 1.0).state(params.points)
    print(f"m = {m}")
    for p in range(len(xs)):
        e = est[m, p]
        print(f"   x = {xs[p]}  mc {complex(e.mean):.4f}  exact {exact[p]:.4f}  z {float(e.z_score(exact[p])):.2f}")
print("\nall terms share the same paths; z-scores are per point")
print("max |z|:", float(np.max([est[m].z_score(phi_m(m, pot, psi0, 1, 1).state(params.points)).max()
                                for m in range(3)])))
