"""Named experiments driven by INI-style configs.

A config has an ``[experiment]`` section (``name``, ``seed``, ``out``,
``threads``) plus ``[params]``, ``[potential]``, ``[psi0]`` and ``[budget]``.
Every CSV row carries the config hash and seed.  The hash covers everything
except ``out`` and ``threads``, neither of which changes any number.
CSV files start with ``#`` comment lines (the only place a timestamp
appears); the body below them is deterministic.

Potential kinds: ``cos`` (component, axis, amplitude, freq), ``sin``
(same keys), ``delta`` (``k``, ``weight``; complex-valued), ``atoms``
(lines ``j k1 k2 k3 re im``), ``symmetric`` / ``landau`` (``B``),
``linear`` (``alpha`` as nine numbers, optional ``offset``), ``file``
(``path`` to a potential text file).

Initial states: ``plane`` (lines ``k1 k2 k3 re im``) and ``gaussian``
(``sigma``, ``center``, ``momentum``, ``chirp``).
"""

from __future__ import annotations

import configparser
import csv
import datetime
import hashlib
import io
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import dyson, feynman_mc, renormalization, stoch_integrals
from .cameron_martin import OrthonormalBasis, brownian_paths
from .fourier_measure import (
    LinearVectorPotential,
    PhysicalParams,
    VectorPotentialFourier,
    cos_field,
    landau_gauge,
    lambda_star,
    lambda_star_z,
    loads_potential,
    symmetric_gauge,
)
from .reference_solver import GaussianPacket, GridState, evolve, probe

__all__ = ["ConfigError", "ExperimentConfig", "EXPERIMENTS", "run", "default_config"]


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


SECTIONS = ("experiment", "params", "potential", "psi0", "budget")
UNHASHED = {("experiment", "out"), ("experiment", "threads")}


@dataclass
class ExperimentConfig:
    sections: dict = field(default_factory=dict)

    # text format

    @classmethod
    def loads(cls, text):
        cp = configparser.ConfigParser(interpolation=None)
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from exc
        secs = {name: dict(cp[name]) for name in cp.sections()}
        unknown = set(secs) - set(SECTIONS)
        if unknown:
            raise ConfigError(f"unknown sections {sorted(unknown)}")
        if "name" not in secs.get("experiment", {}):
            raise ConfigError("missing [experiment] name")
        return cls(secs)

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                return cls.loads(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc

    def dumps(self, hashed_only=False):
        lines = []
        for name in SECTIONS:
            if name not in self.sections:
                continue
            lines.append(f"[{name}]")
            for key in sorted(self.sections[name]):
                if hashed_only and (name, key) in UNHASHED:
                    continue
                value = str(self.sections[name][key]).strip().replace("\n", "\n    ")
                lines.append(f"{key} = {value}")
            lines.append("")
        return "\n".join(lines)

    @property
    def hash(self):
        return hashlib.sha256(self.dumps(hashed_only=True).encode()).hexdigest()[:16]

    # access

    def get(self, section, key, default=None):
        return self.sections.get(section, {}).get(key, default)

    def set(self, section, key, value):
        self.sections.setdefault(section, {})[key] = str(value)

    def num(self, section, key, default, kind=float):
        raw = self.get(section, key)
        if raw is None:
            return default
        try:
            return kind(raw)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from exc

    def vec(self, section, key, default):
        raw = self.get(section, key)
        if raw is None:
            return np.asarray(default, dtype=float)
        try:
            return np.array([float(v) for v in raw.replace(",", " ").split()])
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from exc

    def int_list(self, section, key, default):
        raw = self.get(section, key)
        if raw is None:
            return list(default)
        try:
            return [int(v) for v in raw.replace(",", " ").split()]
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from exc

    @property
    def name(self):
        return self.get("experiment", "name")

    @property
    def seed(self):
        return self.num("experiment", "seed", 0, int)

    @property
    def threads(self):
        return self.num("experiment", "threads", 1, int)

    @property
    def out(self):
        return self.get("experiment", "out", "results")


def _rows(text):
    return [line.split() for line in text.strip().splitlines() if line.strip()]


def build_potential(cfg: ExperimentConfig):
    kind = cfg.get("potential", "kind", "cos")
    if kind in ("cos", "sin"):
        comp = cfg.num("potential", "component", 0, int)
        axis = cfg.num("potential", "axis", 1, int)
        amp = cfg.num("potential", "amplitude", 1.0)
        freq = cfg.num("potential", "freq", 1.0)
        if kind == "cos":
            return cos_field(comp, axis, amp, freq)
        k = np.zeros(3)
        k[axis] = freq
        return VectorPotentialFourier.from_components({comp: [(k, -0.5j * amp), (-k, 0.5j * amp)]})
    if kind == "delta":
        k = cfg.vec("potential", "k", (1.0, 0.0, 0.0))
        w = complex(cfg.get("potential", "weight", "1"))
        return VectorPotentialFourier.from_components({0: [(k, w)]}, realness=False)
    if kind == "atoms":
        comps = {}
        for row in _rows(cfg.get("potential", "atoms", "")):
            if len(row) != 6:
                raise ConfigError("atoms lines need: component k1 k2 k3 re im")
            j = int(row[0]) - 1
            comps.setdefault(j, []).append(([float(v) for v in row[1:4]], complex(float(row[4]), float(row[5]))))
        return VectorPotentialFourier.from_components(comps)
    if kind == "symmetric":
        return symmetric_gauge(cfg.num("potential", "B", 1.0))
    if kind == "landau":
        return landau_gauge(cfg.num("potential", "B", 1.0))
    if kind == "linear":
        alpha = cfg.vec("potential", "alpha", np.zeros(9))
        if alpha.size != 9:
            raise ConfigError("alpha needs nine numbers")
        return LinearVectorPotential(alpha.reshape(3, 3), cfg.vec("potential", "offset", (0, 0, 0)))
    if kind == "file":
        try:
            with open(cfg.get("potential", "path")) as fh:
                return loads_potential(fh.read())
        except (OSError, TypeError) as exc:
            raise ConfigError(f"cannot read potential file: {exc}") from exc
    raise ConfigError(f"unknown potential kind {kind!r}")


def build_psi0(cfg: ExperimentConfig):
    kind = cfg.get("psi0", "kind", "plane")
    if kind == "plane":
        rows = _rows(cfg.get("psi0", "atoms", "1 0 0 1 0"))
        atoms = [([float(v) for v in r[:3]], complex(float(r[3]), float(r[4]))) for r in rows]
        return dyson.WavePacket.from_atoms(atoms)
    if kind == "gaussian":
        return GaussianPacket(sigma=cfg.num("psi0", "sigma", 1.0),
                              center=tuple(cfg.vec("psi0", "center", (0, 0, 0))),
                              momentum=tuple(cfg.vec("psi0", "momentum", (0, 0, 0))),
                              chirp=cfg.num("psi0", "chirp", 0.0))
    raise ConfigError(f"unknown psi0 kind {kind!r}")


def build_params(cfg: ExperimentConfig):
    raw = cfg.get("params", "x", "0 0 0")
    try:
        pts = [[float(v) for v in p.split()] for p in raw.replace("\n", ";").split(";") if p.strip()]
    except ValueError as exc:
        raise ConfigError(f"[params] x: cannot parse {raw!r}") from exc
    if any(len(p) != 3 for p in pts):
        raise ConfigError("[params] x needs 3 coordinates per point")
    try:
        return PhysicalParams(cfg.num("params", "hbar", 1.0), cfg.num("params", "t", 1.0),
                              cfg.num("params", "lam", 1.0), tuple(map(tuple, pts)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# output ------------------------------------------------------------------------


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


class Writer:
    def __init__(self, cfg: ExperimentConfig, out_dir):
        self.cfg = cfg
        self.out_dir = out_dir
        self.files = []
        os.makedirs(out_dir, exist_ok=True)

    def table(self, stem, header, rows, dat_columns=None):
        """CSV with hash and seed columns plus a whitespace ``.dat`` copy for plotting."""
        path = os.path.join(self.out_dir, f"{self.cfg.name}_{stem}.csv")
        stamp = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
        body = io.StringIO()
        w = csv.writer(body, lineterminator="\n")
        w.writerow(["config_hash", "seed"] + list(header))
        for row in rows:
            w.writerow([self.cfg.hash, self.cfg.seed] + [_fmt(v) for v in row])
        with open(path, "w") as fh:
            fh.write(f"# experiment={self.cfg.name} config_hash={self.cfg.hash}\n")
            fh.write(f"# created={stamp}\n")
            fh.write(body.getvalue())
        self.files.append(path)
        cols = dat_columns or list(range(len(header)))
        dat = os.path.join(self.out_dir, f"{self.cfg.name}_{stem}.dat")
        with open(dat, "w") as fh:
            fh.write("# " + " ".join(header[c] for c in cols) + "\n")
            for row in rows:
                fh.write(" ".join(_fmt(row[c]) for c in cols) + "\n")
        self.files.append(dat)
        return path


# experiments -------------------------------------------------------------------


def _budget(cfg, key, default, kind=int):
    val = cfg.num("budget", key, default, kind)
    if kind is int and val < 1:
        raise ConfigError(f"[budget] {key} must be positive")
    return val


def exp_ito_vs_strat(cfg, w: Writer):
    params = build_params(cfg)
    hbar, t = params.hbar, params.t
    delta = VectorPotentialFourier.from_components({0: [((1.0, 0, 0), 1.0)]}, realness=False)
    limit = stoch_integrals.cylinder_fresnel_limit_right(delta, t, hbar)
    rows = []
    prev = None
    for j in range(5, 11):
        n = 2**j
        right = stoch_integrals.cylinder_fresnel_right(delta, n, t, hbar)
        gap = abs(right - limit)
        rows.append((n, stoch_integrals.cylinder_fresnel_left(delta, n, t, hbar).real,
                     right.real, right.imag, limit.real, limit.imag, gap,
                     gap / prev if prev else math.nan))
        prev = gap
    w.table("fresnel", ["n", "left", "right_re", "right_im", "limit_re", "limit_im", "gap", "gap_ratio"],
            rows, [0, 6])

    pot = build_potential(cfg)
    n_samples = _budget(cfg, "n_samples", 20_000)
    fine = _budget(cfg, "fine_steps", 8192)
    ns = cfg.int_list("budget", "n_list", [32, 64, 128, 256, 512])
    c = np.sqrt(1j * hbar)
    x = params.points[:1]
    sums = {n: [] for n in ns}
    ref = []
    rule_sums = {r: [] for r in ("left", "right", "midpoint", "corrected")}
    n_rule = cfg.num("budget", "rule_steps", 256, int)
    for start in range(0, n_samples, 512):
        idx = np.arange(start, min(start + 512, n_samples))
        paths = brownian_paths(fine, t, cfg.seed, idx)
        ref.append(stoch_integrals.riemann_batch(pot, paths, "midpoint", c, x)[:, 0])
        for n in ns:
            sub = paths[:, :: fine // n]
            sums[n].append(stoch_integrals.riemann_batch(pot, sub, "midpoint", c, x)[:, 0])
        sub = paths[:, :: fine // n_rule]
        for r in rule_sums:
            rule_sums[r].append(stoch_integrals.line_integral(pot, sub, t / n_rule, r, c, x)[:, 0])
    ref = np.concatenate(ref)
    rows = []
    for n in ns:
        d2 = np.abs(np.concatenate(sums[n]) - ref) ** 2
        mean, se = feynman_mc._fsum_stats(d2)
        rows.append((n, mean, se))
    w.table("midpoint_l2", ["n", "mean_sq_gap", "stderr"], rows, [0, 1, 2])
    rows = []
    for r, parts in rule_sums.items():
        v = np.concatenate(parts)
        mr, sr = feynman_mc._fsum_stats(v.real)
        mi, si = feynman_mc._fsum_stats(v.imag)
        rows.append((r, n_rule, mr, mi, sr, si))
    w.table("rule_means", ["rule", "n", "re", "im", "se_re", "se_im"], rows, [1, 2, 3, 4, 5])


def exp_dyson_converge(cfg, w: Writer):
    params = build_params(cfg)
    pot = build_potential(cfg)
    psi0 = build_psi0(cfg)
    M = cfg.num("budget", "order", 6, int)
    fracs = cfg.vec("budget", "lambda_fractions", (0.5, 2.0))
    alpha = dyson.alpha_bound(pot)
    r = max(psi0.support_radius, pot.support_radius)
    lstar = lambda_star(alpha, r, params.t, params.hbar)
    w.table("summary", ["alpha", "r", "t", "hbar", "lambda_star"],
            [(alpha, r, params.t, params.hbar, lstar)])
    rows = []
    for frac in fracs:
        ps = dyson.dyson_partial_sum(frac * lstar, M, pot, psi0, params.t, params.hbar,
                                     max_order=max(M, dyson.DEFAULT_MAX_ORDER))
        ratios = [math.nan] + ps.term_ratios
        for m, (term, nrm, ratio) in enumerate(zip(ps.terms, ps.term_norms, ratios)):
            rows.append((frac, m, nrm, term.bound * abs(ps.lam) ** m, ratio, ps.tail_bound, ps.converged))
    w.table("terms", ["lambda_fraction", "m", "term_norm", "term_bound", "ratio", "tail_bound", "converged"],
            rows, [0, 1, 2, 3, 4])


def exp_feynman_map(cfg, w: Writer):
    params = build_params(cfg)
    pot = build_potential(cfg)
    psi0 = build_psi0(cfg)
    M = cfg.num("budget", "order", 2, int)
    est = feynman_mc.psi_moments_mc(M, pot, psi0, params, _budget(cfg, "n_steps", 512),
                                    _budget(cfg, "n_samples", 100_000), cfg.seed, threads=cfg.threads)
    rows = []
    for m in range(M + 1):
        exact = dyson.phi_m(m, pot, psi0, params.t, params.hbar).state(params.points)
        for p, xv in enumerate(params.points):
            e = est[m, p]
            rows.append((m, *xv, e.mean.real, e.mean.imag, e.stderr.real, e.stderr.imag,
                         exact[p].real, exact[p].imag, float(e.z_score(exact[p]))))
    w.table("psi_m", ["m", "x1", "x2", "x3", "mc_re", "mc_im", "se_re", "se_im",
                      "dyson_re", "dyson_im", "z"], rows, [0, 4, 5, 8, 9, 10])


def exp_renorm_basis(cfg, w: Writer):
    pot = build_potential(cfg)
    if not isinstance(pot, LinearVectorPotential):
        raise ConfigError("renorm-basis needs a linear potential")
    n_basis = cfg.num("budget", "n_basis", 64, int)
    eigs = renormalization.gdagg_eigs(pot, 1.0, n_basis, cfg.num("budget", "resolution", 2**11, int))
    exact = renormalization.gdagg_eigs_analytic(pot, 1.0, 9)
    w.table("eigs", ["index", "numeric", "analytic", "rel_err"],
            [(i, eigs[i], exact[i], abs(eigs[i] - exact[i]) / exact[i] if exact[i] else math.nan)
             for i in range(len(exact))], [0, 1, 2])
    bases = {"tent": OrthonormalBasis.tent(), "trig": OrthonormalBasis.trig(),
             "trig14": OrthonormalBasis.trig((1, 4), constants=False),
             "trig1": OrthonormalBasis.trig((1,), constants=False)}
    chosen = (cfg.get("budget", "bases", "tent trig trig14")).split()
    for b in chosen:
        if b not in bases:
            raise ConfigError(f"unknown basis {b!r}")
    n_max = cfg.num("budget", "r_n_max", 64, int)
    B = pot.B_field
    rows = []
    for b in chosen:
        areas = renormalization.element_areas(bases[b], n_max) @ B
        acc = 0.0
        for n, val in enumerate(areas, start=1):
            acc += val
            rows.append((b, n, acc))
    w.table("r_n", ["basis", "n", "r_n"], rows, [1, 2])
    n_list = cfg.int_list("budget", "n_list", [3, 6, 12, 24, 48, 96, 192, 384])
    reports = renormalization.hn_convergence_experiment(
        pot, [bases[b] for b in chosen], n_list, _budget(cfg, "n_samples", 20_000), cfg.seed,
        _budget(cfg, "fine_steps", 2**14))
    rows = []
    for b, rep in zip(chosen, reports):
        for r in rep.rows:
            rows.append((b, r["n"], r["r_n"], r["trace_PnG"], r["gap_renorm"], r["gap_renorm_se"],
                         r["gap_raw"], r["gap_raw_se"], r["mean_h"], r["mean_h_se"]))
    w.table("gaps", ["basis", "n", "r_n", "trace_PnG", "gap_renorm", "gap_renorm_se",
                     "gap_raw", "gap_raw_se", "mean_h", "mean_h_se"], rows, [1, 4, 6])


def exp_solver_compare(cfg, w: Writer):
    params = build_params(cfg)
    pot = build_potential(cfg)
    psi0 = build_psi0(cfg)
    if not isinstance(psi0, GaussianPacket):
        raise ConfigError("solver-compare needs a gaussian psi0")
    L = cfg.num("budget", "box", 12.0)
    grid = _budget(cfg, "grid", 256)
    steps = _budget(cfg, "solver_steps", 400)
    st = GridState.from_function(psi0, L, grid)
    ref = probe(evolve(st, pot, params.lam, params.t, steps, params.hbar), params.points)
    budget = cfg.num("budget", "grid_budget", 5e-3)
    rows = []
    for rule in cfg.get("budget", "rules", "midpoint left").split():
        est = feynman_mc.psi_exp_mc(pot, psi0, params, _budget(cfg, "n_steps", 512),
                                    _budget(cfg, "n_samples", 100_000), cfg.seed, rule, cfg.threads)
        for p, xv in enumerate(params.points):
            e = est[p]
            rows.append((rule, *xv, e.mean.real, e.mean.imag, float(e.sigma), ref[p].real, ref[p].imag,
                         abs(e.mean - ref[p]), bool(abs(e.mean - ref[p]) <= 3 * e.sigma + budget)))
    w.table("probes", ["rule", "x1", "x2", "x3", "mc_re", "mc_im", "sigma", "grid_re", "grid_im",
                       "abs_diff", "within"], rows, [1, 2, 4, 5, 7, 8])


def exp_heat_analytic(cfg, w: Writer):
    params = build_params(cfg)
    pot = build_potential(cfg)
    psi0 = build_psi0(cfg)
    M = cfg.num("budget", "order", 2, int)
    frac = cfg.num("budget", "lambda_fraction", 0.3)
    z = params.t / params.hbar
    alpha = dyson.alpha_bound(pot)
    r = max(psi0.support_radius, pot.support_radius)
    lam = frac * lambda_star_z(alpha, r, params.hbar, z)
    p2 = PhysicalParams(params.hbar, params.t, lam, params.x)
    n_steps, n_samples = _budget(cfg, "n_steps", 512), _budget(cfg, "n_samples", 50_000)
    rows = []
    for label, xi, exact in (
            ("heat", 1.0, dyson.heat_dyson(z, lam, M, pot, psi0, params.hbar)),
            ("real", 1j, dyson.dyson_partial_sum(lam, M, pot, psi0, params.t, params.hbar))):
        est = feynman_mc.heat_fki_mc(pot, psi0, p2, n_steps=n_steps, n_samples=n_samples, seed=cfg.seed,
                                     threads=cfg.threads, order=M, xi=xi, partial_sums=True)
        partial = None
        for m in range(M + 1):
            term = exact.terms[m].state.scale(lam**m)
            partial = term if partial is None else partial + term
            vals = partial(params.points)
            for p, xv in enumerate(params.points):
                e = est[m, p]
                rows.append((label, m, *xv, e.mean.real, e.mean.imag, float(e.sigma),
                             vals[p].real, vals[p].imag, float(e.z_score(vals[p]))))
    w.table("partial_sums", ["time", "m", "x1", "x2", "x3", "mc_re", "mc_im", "sigma",
                             "dyson_re", "dyson_im", "z"], rows, [1, 5, 6, 8, 9, 10])


EXPERIMENTS = {
    "ito-vs-strat": exp_ito_vs_strat,
    "dyson-converge": exp_dyson_converge,
    "feynman-map": exp_feynman_map,
    "renorm-basis": exp_renorm_basis,
    "solver-compare": exp_solver_compare,
    "heat-analytic": exp_heat_analytic,
}

_DEFAULTS = {
    "ito-vs-strat": """
[potential]
kind = cos
component = 0
axis = 1
[budget]
n_samples = 20000
fine_steps = 8192
""",
    "dyson-converge": """
[params]
t = 1
hbar = 1
[potential]
kind = cos
[psi0]
kind = plane
atoms = 1 0 0 1 0
[budget]
order = 6
lambda_fractions = 0.5 2
""",
    "feynman-map": """
[params]
t = 1
x = 0 0 0; 0.5 0 0; 0 0.5 0; 1 1 0; -1 0.3 0; 0.2 -1 0; 2 0.5 0.5; -0.7 -0.7 0
[potential]
kind = cos
[psi0]
kind = plane
atoms = 1 0 0 1 0
[budget]
order = 1
n_steps = 512
n_samples = 100000
""",
    "renorm-basis": """
[potential]
kind = linear
alpha = 0 -0.5 0.5  0.5 0 -0.5  -0.5 0.5 0
[budget]
n_samples = 20000
bases = tent trig trig14
""",
    "solver-compare": """
[params]
t = 0.5
lam = 1
x = 0 0 0; 0.5 0.5 0; -0.5 0.3 0; 1 -0.5 0; 0.2 1 0; -1 -1 0; 1.2 0.4 0; -0.3 -1.2 0
[potential]
kind = symmetric
B = 1
[psi0]
kind = gaussian
sigma = 1
center = 0.3 -0.2 0
momentum = 0.5 0.2 0
[budget]
n_steps = 512
n_samples = 100000
grid = 256
box = 12
solver_steps = 400
""",
    "heat-analytic": """
[params]
t = 0.5
x = 0 0 0; 0.5 0.2 0; -0.4 1 0; 1 -1 0.5
[potential]
kind = cos
[psi0]
kind = plane
atoms = 1 0 0 1 0
    0 0.5 0 0 0.5
[budget]
order = 2
lambda_fraction = 0.3
n_samples = 50000
""",
}


def default_config(name) -> ExperimentConfig:
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}")
    cfg = ExperimentConfig.loads(f"[experiment]\nname = {name}\nseed = 1\n" + _DEFAULTS[name])
    return cfg


def run(cfg: ExperimentConfig, out_dir=None):
    """Run one experiment; returns the list of files written."""
    name = cfg.name
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}")
    writer = Writer(cfg, out_dir or cfg.out)
    EXPERIMENTS[name](cfg, writer)
    return writer.files
