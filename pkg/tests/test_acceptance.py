"""The nine acceptance criteria, one test each.

Every test prints a single ``criterion N: PASS|FAIL ...`` line (also
collected into the terminal summary by ``conftest.py``).  Run on its own with
``python tests/test_acceptance.py`` to get just those lines.
"""

import math
import time

import numpy as np

from magpath.cameron_martin import OrthonormalBasis, brownian_paths
from magpath.dyson import WavePacket, alpha_bound, dyson_partial_sum, heat_dyson, phi_m
from magpath.feynman_mc import heat_fki_mc, psi_exp_mc, psi_m_mc
from magpath.fourier_measure import (
    SQRT_I,
    LinearVectorPotential,
    PhysicalParams,
    VectorPotentialFourier,
    cos_field,
    lambda_star,
    lambda_star_z,
    symmetric_gauge,
)
from magpath.reference_solver import GaussianPacket, GridState, evolve, probe
from magpath.renormalization import (
    gdagg_eigs,
    gdagg_eigs_analytic,
    hn_convergence_experiment,
    renorm_constant,
    trace_PnG,
)
from magpath.stoch_integrals import (
    cylinder_fresnel_left,
    cylinder_fresnel_limit_right,
    cylinder_fresnel_right,
    riemann_batch,
)

RESULTS = {}

PROBES = ((0.0, 0.0, 0.0), (0.5, 0.5, 0.0), (-0.5, 0.3, 0.0), (1.0, -0.5, 0.0),
          (0.2, 1.0, 0.0), (-1.0, -1.0, 0.0), (1.2, 0.4, 0.0), (-0.3, -1.2, 0.0))


def report(n, ok, detail, elapsed, limit):
    ok = bool(ok) and elapsed < limit
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}  [{elapsed:.1f} s / {limit:.0f} s]"
    RESULTS[n] = line
    print(line)
    assert ok, line


def test_criterion_1_eigenvalue_law():
    t0 = time.perf_counter()
    eigs = gdagg_eigs(np.eye(3), t=1.0, n_basis=64, resolution=2**11)[:9]
    exact = gdagg_eigs_analytic(np.eye(3), 1.0, 9)
    rel = np.max(np.abs(eigs - exact) / exact)
    report(1, rel < 0.01, f"max rel err {rel:.2e}", time.perf_counter() - t0, 30)


def test_criterion_2_renormalization_constant():
    t0 = time.perf_counter()
    B = (1.0, 1.0, 1.0)
    tent = renorm_constant(B, OrthonormalBasis.tent(), 64)
    sub = renorm_constant(B, OrthonormalBasis.trig((1,), constants=False), 64)
    target = math.fsum(1 / (4 * math.pi * k) for k in range(1, 65))
    pot = LinearVectorPotential([[0, -0.5, 0.5], [0.5, 0, -0.5], [-0.5, 0.5, 0]])
    full_trace = trace_PnG(pot, OrthonormalBasis.trig(), 3 + 6 * 64)
    ok = tent == 0.0 and abs(sub - target) <= 1e-9 and abs(full_trace) <= 1e-9
    report(2, ok, f"tent r_n={tent}, |sub - sum|={abs(sub - target):.1e}, full trace={full_trace:.1e}",
           time.perf_counter() - t0, 10)


def test_criterion_3_cylinder_closed_forms():
    t0 = time.perf_counter()
    delta = VectorPotentialFourier.from_components({0: [((1.0, 0, 0), 1.0)]}, realness=False)
    limit = cylinder_fresnel_limit_right(delta, 1.0, 1.0)
    ns = [2**j for j in range(5, 11)]
    left_zero = all(cylinder_fresnel_left(delta, n, 1.0, 1.0) == 0 for n in ns)
    gaps = [abs(cylinder_fresnel_right(delta, n, 1.0, 1.0) - limit) for n in ns]
    ratios = [b / a for a, b in zip(gaps, gaps[1:])]
    ok = left_zero and all(0.4 <= r <= 0.6 for r in ratios)
    report(3, ok, "gap ratios " + " ".join(f"{r:.4f}" for r in ratios), time.perf_counter() - t0, 5)


def test_criterion_4_midpoint_convergence():
    t0 = time.perf_counter()
    pot = cos_field(0, 1)
    c = SQRT_I
    fine, n_paths = 8192, 20_000
    ns = [32, 64, 128, 256, 512]
    sq = {n: 0.0 for n in ns}
    for start in range(0, n_paths, 500):
        paths = brownian_paths(fine, 1.0, 2024, np.arange(start, min(start + 500, n_paths)))
        ref = riemann_batch(pot, paths, "midpoint", c)[:, 0]
        for n in ns:
            coarse = riemann_batch(pot, paths[:, :: fine // n], "midpoint", c)[:, 0]
            sq[n] += math.fsum(np.abs(coarse - ref) ** 2)
    err = [sq[n] / n_paths for n in ns]
    monotone = all(b < a for a, b in zip(err, err[1:]))
    ok = monotone and err[0] / err[-1] >= 10
    report(4, ok, "E|gap|^2 " + " ".join(f"{e:.3e}" for e in err) + f", decrease {err[0] / err[-1]:.1f}x",
           time.perf_counter() - t0, 180)


def test_criterion_5_first_order_term():
    t0 = time.perf_counter()
    pot = cos_field()
    psi0 = WavePacket.plane_wave((1.0, 0.0, 0.0))
    params = PhysicalParams(1.0, 1.0, 0.0, PROBES)
    est = psi_m_mc(1, pot, psi0, params, n_steps=512, n_samples=100_000, seed=5)
    exact = phi_m(1, pot, psi0, 1.0, 1.0).state(params.points)
    z = est.z_score(exact)
    report(5, np.all(z < 3), "z " + " ".join(f"{v:.2f}" for v in z), time.perf_counter() - t0, 300)


def test_criterion_6_symmetric_gauge_vs_solver():
    t0 = time.perf_counter()
    pot = symmetric_gauge(1.0)
    psi0 = GaussianPacket(sigma=1.0, center=(0.3, -0.2, 0.0), momentum=(0.5, 0.2, 0.0))
    params = PhysicalParams(1.0, 0.5, 1.0, PROBES)
    grid = evolve(GridState.from_function(psi0, 12.0, 256), pot, 1.0, 0.5, 400)
    ref = probe(grid, params.points)
    within = {}
    for rule in ("midpoint", "left"):
        est = psi_exp_mc(pot, psi0, params, n_steps=512, n_samples=100_000, seed=6, rule=rule)
        within[rule] = np.abs(est.mean - ref) <= 3 * est.sigma + 5e-3
    part_a = bool(np.all(within["midpoint"]))
    part_b = not np.all(within["left"])
    detail = (f"A (midpoint within tolerance at {within['midpoint'].sum()}/8 probes): "
              f"{'pass' if part_a else 'fail'}; B (LEFT must miss): {'pass' if part_b else 'fail'}, "
              f"LEFT within at {within['left'].sum()}/8 probes")
    report(6, part_a and part_b, detail, time.perf_counter() - t0, 600)


def test_criterion_7_basis_independence():
    t0 = time.perf_counter()
    pot = LinearVectorPotential([[0, -0.5, 0.5], [0.5, 0, -0.5], [-0.5, 0.5, 0]])
    n_list = [3, 6, 12, 24, 48, 96, 192, 384]
    tent, trig, sub = hn_convergence_experiment(
        pot, [OrthonormalBasis.tent(), OrthonormalBasis.trig(), OrthonormalBasis.trig((1, 4), False)],
        n_list, n_samples=20_000, seed=7, fine_steps=2**14)
    mt, st_ = tent.rows[-1]["mean_h"], tent.rows[-1]["mean_h_se"]
    mg, sg = trig.rows[-1]["mean_h"], trig.rows[-1]["mean_h_se"]
    agree = abs(mt - mg) <= 3 * math.hypot(st_, sg)
    converged = all(rep.column("gap_renorm")[-1] < 0.05 * rep.column("gap_renorm")[0] for rep in (tent, trig))
    raw = sub.column("gap_raw")
    ren = sub.column("gap_renorm")
    by64 = n_list.index(48)  # last element count not above 64
    diverges = raw[by64] > 1.5 * ren[by64] and np.all(np.diff(raw[2:]) > 0)
    ok = agree and converged and diverges
    detail = (f"limits {mt:.4f}+-{st_:.4f} vs {mg:.4f}+-{sg:.4f}; final gaps "
              f"{tent.rows[-1]['gap_renorm']:.4f}/{trig.rows[-1]['gap_renorm']:.4f}; subfamily raw gap "
              + " ".join(f"{v:.2f}" for v in raw))
    report(7, ok, detail, time.perf_counter() - t0, 300)


def test_criterion_8_dyson_radius():
    t0 = time.perf_counter()
    pot = cos_field()
    psi0 = WavePacket.plane_wave((1.0, 0.0, 0.0))
    ls = lambda_star(alpha_bound(pot), max(psi0.support_radius, pot.support_radius), 1.0, 1.0)
    inside = dyson_partial_sum(0.5 * ls, 6, pot, psi0, 1.0, 1.0)
    outside = dyson_partial_sum(2.0 * ls, 6, pot, psi0, 1.0, 1.0)
    ratios = inside.term_ratios
    ok = all(r < 1 for r in ratios) and inside.converged and not outside.converged \
        and outside.tail_bound == math.inf
    report(8, ok, "ratios " + " ".join(f"{r:.3f}" for r in ratios)
           + f"; 2 lambda*: converged={outside.converged}", time.perf_counter() - t0, 60)


def test_criterion_9_heat_continuation():
    t0 = time.perf_counter()
    pot = cos_field()
    psi0 = WavePacket.from_atoms([((1, 0, 0), 1.0), ((0, 0.5, 0), 0.5j)])
    t, hbar = 0.5, 1.0
    z = t / hbar
    lam = 0.3 * lambda_star_z(alpha_bound(pot), max(psi0.support_radius, pot.support_radius), hbar, z)
    params = PhysicalParams(hbar, t, lam, PROBES[:4])
    est = heat_fki_mc(pot, psi0, params, n_steps=512, n_samples=100_000, seed=9, order=2, partial_sums=True)
    exact = heat_dyson(z, lam, 2, pot, psi0, hbar)
    zs = []
    partial = None
    for m in range(3):
        term = exact.terms[m].state.scale(lam**m)
        partial = term if partial is None else partial + term
        zs.append(est[m].z_score(partial(params.points)))
    zmax = float(np.max(zs))
    report(9, zmax < 3, f"max z over m<=2 and 4 probes {zmax:.2f}", time.perf_counter() - t0, 180)


if __name__ == "__main__":
    import sys

    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                pass
    sys.exit(0 if all("PASS" in line for line in RESULTS.values()) else 1)
