"""Experiment driver: ensemble forcing generation, the maximal-regularity
constant-measurement campaign, elementary-estimate checks, kernel suite
dispatch, convergence studies, and CSV report emission."""
from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .elementary import (ModeProblem, solve_frac_backward, solve_frac_forward,
                         solve_heat_dirichlet)
from .grids import TimeGrid, VerticalGrid, diff1, diff2
from . import kernels as kernel_lab
from .norms import UPPER_NORM, _norm_bracket, interpolation_norm, lhs_norm_suite
from .spectral import BandSpec, SpectralField, build_lattice, zero_field
from .strip import consistency_check, solve_strip

CSV_HEADER = ["experiment", "R", "L", "d", "n_modes", "nz", "nt", "Zmax",
              "horizon", "seed", "sample", "norm_name", "lhs", "rhs", "ratio",
              "lower_or_upper", "refine_level"]


def _default_r_grid(L: float) -> tuple:
    top = (4.0 * L / (2.0 * np.pi)) / 4.0
    return tuple(np.geomspace(0.05, 1.0, 8) * top)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "mre"
    L: float = 2.0 * np.pi
    d: int = 2
    r_values: tuple = ()
    nz: int = 32
    nt: int = 32
    zmax: float = 8.0
    horizon: float = 1.0
    ensemble: int = 50
    n_modes: int = 5
    seed: int = 0
    delta: float = 0.1
    refine: int = 0
    nx: int | None = None
    golden_iters: int = 16
    out: str | None = None

    def __post_init__(self):
        if min(self.nz, self.nt, self.ensemble + 1, self.n_modes) <= 0:
            raise ValueError("all sizes must be positive")
        if not self.r_values:
            object.__setattr__(self, "r_values", _default_r_grid(self.L))
        for r in self.r_values:
            BandSpec(L=self.L, d=self.d, R=float(r))  # validates nonemptiness

    @classmethod
    def from_sources(cls, config_path: str | None = None, **overrides):
        data = {}
        if config_path:
            with open(config_path) as fh:
                data.update(json.load(fh))
        data.update({k: v for k, v in overrides.items() if v is not None})
        if "r_values" in data:
            data["r_values"] = tuple(float(x) for x in data["r_values"])
        return cls(**data)


@dataclass(frozen=True)
class EnsembleSpec:
    """Recipe for random band-limited, real-valued forcings."""

    n_samples: int
    n_modes: int = 5
    seed: int = 0
    amp_range: tuple = (0.1, 10.0)
    center_range: tuple = (0.2, 0.8)
    width_range: tuple = (0.06, 0.25)
    tau_fractions: tuple = (0.05, 0.5)


def n_workers() -> int:
    raw = os.environ.get("STOKESBAND_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


def _sample_rng(seed: int, r_index: int, sample: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, r_index, sample]))


def random_forcing(band: BandSpec, lattice, vgrid: VerticalGrid,
                   tgrid: TimeGrid, rng: np.random.Generator,
                   spec: EnsembleSpec, shift: float = 0.0) -> SpectralField:
    """One ensemble member: a few admissible conjugate-symmetric modes with
    gaussian z-bumps and saturating t-modulations."""
    f = zero_field(band, lattice, vgrid, tgrid, "full")
    neg = lattice.negation_permutation()
    half = [m for m in np.nonzero(lattice.flags)[0]
            if tuple(lattice.modes[m]) > tuple(-lattice.modes[m])]
    picks = rng.choice(len(half), size=min(spec.n_modes, len(half)),
                       replace=False)
    z = vgrid.nodes[:, None]
    span = vgrid.nodes[-1] - vgrid.nodes[0]
    t = tgrid.nodes[None, :]
    for i in picks:
        m = half[i]
        c0, c1 = spec.center_range
        center = vgrid.nodes[0] + span * rng.uniform(c0, c1)
        width = span * rng.uniform(*spec.width_range)
        tau = tgrid.t0 * rng.uniform(*spec.tau_fractions)
        bump = np.exp(-((z - center) / width) ** 2)
        mod = 1.0 - np.exp(-t / tau)
        profile = bump * mod
        for c in range(band.d):
            mag = np.exp(rng.uniform(np.log(spec.amp_range[0]),
                                     np.log(spec.amp_range[1])))
            phase = np.exp(2j * np.pi * rng.uniform())
            amp = mag * phase * np.exp(1j * lattice.modes[m] @
                                       np.full(band.d - 1, shift))
            f.values[m, c] = amp * profile
            f.values[neg[m], c] = np.conj(amp) * profile
    return f


def _campaign_nx(lattice) -> int:
    return max(64, 2 * lattice.nmax + 1)


def _mre_one_sample(band, lattice, nz, nt, horizon, rng, spec, nx, iters,
                    shift=0.0):
    vg = VerticalGrid.strip(nz)
    tg = TimeGrid(horizon, nt)
    f = random_forcing(band, lattice, vg, tg, rng, spec, shift=shift)
    state = solve_strip(f)
    return lhs_norm_suite(state, f, nx=nx or _campaign_nx(lattice),
                          iters=iters)


def run_mre_experiment(config: ExperimentConfig, shift: float = 0.0):
    """The headline campaign: for each R and ensemble member, solve the strip
    problem and record the five left-hand norms against the forcing norm.

    Returns (records, summary) with summary[R][level] = ensemble max ratio.
    """
    spec = EnsembleSpec(config.ensemble, config.n_modes, config.seed)
    records = []
    summary = {}
    levels = list(range(config.refine + 1))

    def one(args):
        ridx, R, level, s = args
        band = BandSpec(L=config.L, d=config.d, R=float(R))
        lattice = build_lattice(band)
        rng = _sample_rng(config.seed, ridx, s)
        nz, nt = config.nz << level, config.nt << level
        try:
            suite = _mre_one_sample(band, lattice, nz, nt, config.horizon,
                                    rng, spec, config.nx,
                                    config.golden_iters, shift=shift)
            return (ridx, level, s, suite, None)
        except Exception as exc:       # quarantine, do not kill the campaign
            return (ridx, level, s, None, repr(exc))

    jobs = [(ridx, R, level, s)
            for ridx, R in enumerate(config.r_values)
            for level in levels
            for s in range(config.ensemble)]
    workers = n_workers()
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, jobs))
    else:
        results = [one(j) for j in jobs]

    results.sort(key=lambda r: (r[0], r[1], r[2]))
    failures = []
    for ridx, level, s, suite, err in results:
        R = config.r_values[ridx]
        base = dict(experiment=config.experiment, R=R, L=config.L, d=config.d,
                    n_modes=config.n_modes, nz=config.nz << level,
                    nt=config.nt << level, Zmax=config.zmax,
                    horizon=config.horizon, seed=config.seed, sample=s,
                    refine_level=level)
        if err is not None:
            failures.append((R, level, s, err))
            records.append(dict(base, norm_name="FAILED", lhs=np.nan,
                                rhs=np.nan, ratio=np.nan,
                                lower_or_upper="n/a"))
            continue
        rhs = suite["rhs"]
        ratio = suite["ratio"]
        for name in ("heat_u_horiz", "grad_grad_u_horiz", "dt_u_vert",
                     "grad2_u_vert", "grad_p"):
            records.append(dict(base, norm_name=name, lhs=suite[name],
                                rhs=rhs, ratio=ratio, lower_or_upper="upper"))
        records.append(dict(base, norm_name="forcing", lhs=rhs, rhs=rhs,
                            ratio=ratio, lower_or_upper="lower"))
        summary.setdefault(float(R), {}).setdefault(level, 0.0)
        summary[float(R)][level] = max(summary[float(R)][level], ratio)
    return records, {"max_ratio": summary, "failures": failures}


def _upper_norm_of(values, lattice, vg, tg, nx, iters=16):
    val, _, _ = _norm_bracket(values, lattice, vg, tg, UPPER_NORM,
                              "banded_upper", nx, iters=iters)
    return val


def run_proposition_checks(config: ExperimentConfig):
    """Half-line estimate battery for the elementary stages, each recorded as
    a conservative ratio (banded-upper left side over lower right side)."""
    records = []
    spec = EnsembleSpec(config.ensemble, config.n_modes, config.seed,
                        center_range=(0.1, 0.45), width_range=(0.03, 0.12))
    for ridx, R in enumerate(config.r_values):
        band = BandSpec(L=config.L, d=config.d, R=float(R))
        lattice = build_lattice(band)
        for level in range(config.refine + 1):
            nz, nt = config.nz << level, config.nt << level
            vg = VerticalGrid.halfline(nz, config.zmax)
            tg = TimeGrid(config.horizon, nt)
            nxq = config.nx or _campaign_nx(lattice)
            for s in range(config.ensemble):
                rng = _sample_rng(config.seed, ridx, s)
                f = random_forcing(band, lattice, vg, tg, rng, spec)
                ratios = _proposition_ratios(f, band, lattice, vg, tg, nxq)
                base = dict(experiment=config.experiment, R=R, L=config.L,
                            d=config.d, n_modes=config.n_modes, nz=nz, nt=nt,
                            Zmax=config.zmax, horizon=config.horizon,
                            seed=config.seed, sample=s, refine_level=level)
                for name, (lhs, rhs) in ratios.items():
                    records.append(dict(
                        base, norm_name=name, lhs=lhs, rhs=rhs,
                        ratio=(lhs / rhs if rhs > 0 else np.nan),
                        lower_or_upper="upper/lower"))
    return records


def _proposition_ratios(f, band, lattice, vg, tg, nx):
    dims = band.d - 1
    dz, dt = vg.dz, tg.dt
    m_all = np.nonzero(lattice.flags)[0]
    phi = np.zeros((lattice.m, vg.n, tg.n), dtype=complex)
    vz = np.zeros_like(phi)
    uz = np.zeros_like(phi)
    uheat = np.zeros((lattice.m, dims, vg.n, tg.n), dtype=complex)
    for m in m_all:
        k, a = lattice.modes[m], lattice.norms[m]
        fh, fz = f.values[m, :dims], f.values[m, -1]
        div_f = np.einsum("c,czt->zt", 1j * k, fh) + diff1(fz, dz, axis=0)
        phi[m] = solve_frac_backward(ModeProblem(a, vg, tg, -div_f))
        rhs_vz = a * (fz - phi[m]) - np.einsum("c,czt->zt", 1j * k, fh)
        vz[m] = solve_heat_dirichlet(ModeProblem(a, vg, tg, rhs_vz))
        uz[m] = solve_frac_forward(ModeProblem(a, vg, tg, vz[m]))
        for c in range(dims):
            uheat[m, c] = solve_heat_dirichlet(ModeProblem(a, vg, tg,
                                                           f.values[m, c]))

    knorm = np.where(lattice.norms > 0, lattice.norms, 1.0)
    kvec = lattice.modes

    def up(vals):
        return _upper_norm_of(vals, lattice, vg, tg, nx)

    f_low = interpolation_norm(f, UPPER_NORM, "lower", nx=nx)

    grad_vz = np.stack([diff1(vz, dz, axis=1)]
                       + [1j * kvec[:, c, None, None] * vz
                          for c in range(dims)], axis=1)
    heat1d_vz = (diff1(vz, dt, axis=-1) - diff2(vz, dz, axis=1)) \
        / knorm[:, None, None]
    ratios = {
        "transport-bound": (up(phi), f_low),
        "heat-stage-bound": (up(grad_vz) + up(heat1d_vz),
                             f_low + up(phi)),
        "transport-forward-bound": (
            up(diff1(uz, dt, axis=-1))
            + up(np.stack([diff2(uz, dz, axis=1)]
                          + [1j * kvec[:, c, None, None]
                             * diff1(uz, dz, axis=1) for c in range(dims)]
                          + [-kvec[:, c, None, None] * kvec[:, b, None, None]
                             * uz for c in range(dims) for b in range(dims)],
                          axis=1)),
            up(grad_vz) + up(heat1d_vz)),
        "heat-gradient-bound": (
            up(np.concatenate([uheat * 1j * kvec[:, :, None, None],
                               diff1(uheat, dz, axis=2)], axis=1)),
            f_low),
        "heat-max-regularity": (
            up(diff1(uheat, dt, axis=-1) - diff2(uheat, dz, axis=2))
            + up(np.concatenate(
                [1j * kvec[:, :, None, None] * diff1(uheat[:, c], dz, axis=1)[:, None]
                 for c in range(dims)], axis=1)),
            f_low),
    }
    return ratios


def run_kernel_suite(config: ExperimentConfig):
    """Dispatch the appendix verification battery; one record per report."""
    if not config.r_values:
        raise ValueError("nothing to verify")
    reports = dict(kernel_lab.verify_heat_kernel_bounds(d=config.d))
    reports["min-integral"] = kernel_lab.verify_min_integral(
        np.asarray(config.r_values))
    reports["kbar-bound"] = kernel_lab.verify_kbar_bound()
    band = BandSpec(L=config.L, d=config.d, R=float(config.r_values[-1]))
    for variant in "abc":
        for rep in kernel_lab.verify_bandedness_lemma(
                band, variant, n_fields=config.ensemble, seed=config.seed):
            reports[rep.name] = rep
    reports["poisson-derivative"] = kernel_lab.verify_poisson_derivative_bound(band)
    records = []
    for name, rep in reports.items():
        rpar = rep.parameters.get("R", np.nan)
        if not np.isscalar(rpar):
            rpar = np.nan
        records.append(dict(
            experiment=config.experiment, R=float(rpar),
            L=config.L, d=config.d, n_modes=config.n_modes, nz=config.nz,
            nt=config.nt, Zmax=config.zmax, horizon=config.horizon,
            seed=config.seed, sample=0, norm_name=name, lhs=rep.constant,
            rhs=float(rep.stability), ratio=rep.constant,
            lower_or_upper="fit", refine_level=0))
    return records, reports


def run_consistency(config: ExperimentConfig):
    """Localization cross-validation over an ensemble of strip forcings."""
    records = []
    spec = EnsembleSpec(config.ensemble, config.n_modes, config.seed)
    for ridx, R in enumerate(config.r_values):
        band = BandSpec(L=config.L, d=config.d, R=float(R))
        lattice = build_lattice(band)
        for level in range(config.refine + 1):
            nz, nt = config.nz << level, config.nt << level
            vg = VerticalGrid.strip(nz)
            tg = TimeGrid(config.horizon, nt)
            for s in range(config.ensemble):
                rng = _sample_rng(config.seed, ridx, s)
                f = random_forcing(band, lattice, vg, tg, rng, spec)
                rep = consistency_check(f, delta=config.delta,
                                        zmax=config.zmax)
                base = dict(experiment=config.experiment, R=R, L=config.L,
                            d=config.d, n_modes=config.n_modes, nz=nz, nt=nt,
                            Zmax=config.zmax, horizon=config.horizon,
                            seed=config.seed, sample=s, refine_level=level)
                for side in ("upper", "lower"):
                    records.append(dict(base, norm_name=f"consistency-{side}",
                                        lhs=rep[side], rhs=5e-2,
                                        ratio=rep[side] / 5e-2,
                                        lower_or_upper=side))
    return records


def run_convergence(config: ExperimentConfig):
    """Cauchy refinement study of the reported norms at a fixed forcing."""
    records = []
    R = float(config.r_values[0])
    band = BandSpec(L=config.L, d=config.d, R=R)
    lattice = build_lattice(band)
    spec = EnsembleSpec(1, config.n_modes, config.seed)
    prev = None
    for level in range(max(config.refine, 2) + 1):
        nz, nt = config.nz << level, config.nt << level
        vg = VerticalGrid.strip(nz)
        tg = TimeGrid(config.horizon, nt)
        rng = _sample_rng(config.seed, 0, 0)
        f = random_forcing(band, lattice, vg, tg, rng, spec)
        state = solve_strip(f)
        suite = lhs_norm_suite(state, f, nx=config.nx or _campaign_nx(lattice),
                               iters=config.golden_iters)
        base = dict(experiment=config.experiment, R=R, L=config.L, d=config.d,
                    n_modes=config.n_modes, nz=nz, nt=nt, Zmax=config.zmax,
                    horizon=config.horizon, seed=config.seed, sample=0,
                    refine_level=level)
        for name in ("heat_u_horiz", "grad_grad_u_horiz", "dt_u_vert",
                     "grad2_u_vert", "grad_p", "rhs"):
            ratio_prev = np.nan if prev is None else suite[name] / prev[name]
            records.append(dict(base, norm_name=name, lhs=suite[name],
                                rhs=(prev[name] if prev else np.nan),
                                ratio=ratio_prev,
                                lower_or_upper="cauchy"))
        prev = suite
    return records


_PLOT_SCRIPT = """\
#!/usr/bin/env python3
\"\"\"Render ratio-vs-R curves from a campaign CSV (written alongside it).\"\"\"
import csv
import sys
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "{csv_name}"
by_level = defaultdict(lambda: defaultdict(list))
with open(path) as fh:
    for row in csv.DictReader(fh):
        if row["norm_name"] == "forcing" or row["lower_or_upper"] == "lower":
            by_level[row["refine_level"]][float(row["R"])].append(
                float(row["ratio"]))
fig, ax = plt.subplots()
for level, groups in sorted(by_level.items()):
    rs = sorted(groups)
    ax.plot(rs, [max(groups[r]) for r in rs], marker="o",
            label=f"level {{level}}")
ax.set_xscale("log")
ax.set_xlabel("R")
ax.set_ylabel("ensemble max ratio")
ax.legend()
fig.savefig(path.rsplit(".", 1)[0] + ".png", dpi=150)
"""


def emit_reports(records, path: str):
    """Write the CSV (exact fixed header) and a companion plot script."""
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_HEADER)
        writer.writeheader()
        for rec in records:
            writer.writerow({k: _fmt(rec.get(k)) for k in CSV_HEADER})
    script = path.rsplit(".", 1)[0] + "_plot.py"
    with open(script, "w") as fh:
        fh.write(_PLOT_SCRIPT.format(csv_name=os.path.basename(path)))
    return [path, script]


def _fmt(val):
    if isinstance(val, (float, np.floating)):
        return repr(float(val))
    if isinstance(val, np.integer):
        return int(val)
    return val
