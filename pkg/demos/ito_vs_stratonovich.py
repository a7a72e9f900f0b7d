"""Left, right and midpoint sums of a line integral along Brownian paths.

For a field with nonzero divergence the left-point (Ito) and right-point
sums land on opposite sides of the midpoint (Stratonovich) value; the
gap is half the time integral of the divergence.  For divergence-free
fields all three agree on average, but the Feynman-map values of the
right-point sums still converge only at rate 1/n.
"""

import numpy as np

from magpath.cameron_martin import brownian_paths
from magpath.fourier_measure import VectorPotentialFourier, cos_field
from magpath.stoch_integrals import (
    cylinder_fresnel_left,
    cylinder_fresnel_limit_right,
    cylinder_fresnel_right,
    correction_batch,
    riemann_batch,
)

# a = (sin x1, 0, 0) has divergence cos x1
sin_field = VectorPotentialFourier.from_components({0: [((1, 0, 0), -0.5j), ((-1, 0, 0), 0.5j)]})
paths = brownian_paths(256, 1.0, seed=0, indices=np.arange(5000))

print("real paths, a = (sin x1, 0, 0), 5000 samples, 256 steps")
for rule in ("left", "midpoint", "right"):
    vals = riemann_batch(sin_field, paths, rule)[:, 0].real
    print(f"  {rule:>8}: mean {vals.mean():+.4f} +- {vals.std() / np.sqrt(len(vals)):.4f}")
corr = correction_batch(sin_field, paths, 1 / 256)[:, 0].real
left = riemann_batch(sin_field, paths, "left")[:, 0].real
print(f"  left + correction: {(left + corr).mean():+.4f}  (exact mean 1 - exp(-1/2) = {1 - np.exp(-0.5):.4f})")

print("\ndivergence-free a = (cos x2, 0, 0): rules agree in mean")
for rule in ("left", "midpoint", "right"):
    vals = riemann_batch(cos_field(), paths, rule)[:, 0].real
    print(f"  {rule:>8}: mean {vals.mean():+.4f}")

delta = VectorPotentialFourier.from_components({0: [((1.0, 0, 0), 1.0)]}, realness=False)
limit = cylinder_fresnel_limit_right(delta, 1.0, 1.0)
print("\nFeynman-map values for a single plane-wave component")
print(f"  left sum is exactly {cylinder_fresnel_left(delta, 64, 1.0, 1.0)}")
prev = None
for n in (32, 64, 128, 256, 512, 1024):
    gap = abs(cylinder_fresnel_right(delta, n, 1.0, 1.0) - limit)
    ratio = f"{gap / prev:.3f}" if prev else "  -  "
    print(f"  n = {n:5d}  |right - limit| = {gap:.3e}  ratio {ratio}")
    prev = gap
