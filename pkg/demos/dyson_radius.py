"""Term sizes of the coupling expansion inside and outside the certified radius."""

from magpath.dyson import WavePacket, alpha_bound, dyson_partial_sum
from magpath.fourier_measure import cos_field, lambda_star

pot = cos_field()
psi0 = WavePacket.plane_wave((1.0, 0.0, 0.0))
ls = lambda_star(alpha_bound(pot), 1.0, 1.0, 1.0)
print(f"lambda* = {ls:.5f}")

for frac in (0.5, 1.0, 2.0, 4.0):
    ps = dyson_partial_sum(frac * ls, 6, pot, psi0, 1.0, 1.0)
    norms = " ".join(f"{v:.2e}" for v in ps.term_norms)
    print(f"lambda = {frac:3.1f} lambda*: |terms| {norms}")
    print(f"{'':21}converged={ps.converged} tail bound={ps.tail_bound:.3e}")

# the radius is a certificate, not a sharp boundary: actual terms keep shrinking
# a while beyond it, but nothing is claimed there.
