"""Stokes flow in the unit strip with two no-slip walls, and the cutoff
machinery that transfers a strip solution to half-space data.

Per mode the vertical velocity solves the fourth-order problem

    (dt - dz^2 + a^2)(dz^2 - a^2) u^z = -a^2 f^z - dz(i k'. f'),
    u^z = dz u^z = 0 at both walls,

discretized with Crank-Nicolson in time and second-order differences in z,
with the four boundary rows replacing the outermost collocation rows. The
horizontal velocity follows from the heat equation for the horizontally
solenoidal part of f' plus a gradient correction, and the pressure from the
horizontal momentum equations.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .elementary import ModeProblem, _heat_stepping
from .grids import TimeGrid, VerticalGrid, diff1
from .halfspace import FlowState, recover_pressure, solve_halfspace
from .spectral import SpectralField, field_l1, zero_field

_TOL = 1e-12


def _second_diff_matrix(nz: int, dz: float) -> np.ndarray:
    d2 = np.zeros((nz + 1, nz + 1))
    for i in range(1, nz):
        d2[i, i - 1:i + 2] = [1.0, -2.0, 1.0]
    d2[0, :5] = [35.0, -104.0, 114.0, -56.0, 11.0]
    d2[0] /= 12.0
    d2[-1, -5:] = [11.0, -56.0, 114.0, -104.0, 35.0]
    d2[-1] /= 12.0
    return d2 / dz**2


def _mode_strip_vertical(a: float, vgrid: VerticalGrid, tgrid: TimeGrid,
                         rhs: np.ndarray) -> np.ndarray:
    """March the fourth-order vertical problem for one mode."""
    nz, dz, dt = vgrid.n - 1, vgrid.dz, tgrid.dt
    ident = np.eye(nz + 1)
    bmat = _second_diff_matrix(nz, dz) - a**2 * ident
    heat_half = 0.5 * dt * (a**2 * ident - _second_diff_matrix(nz, dz))
    mmat = (ident + heat_half) @ bmat
    nmat = (ident - heat_half) @ bmat

    bc_rows = np.zeros((4, nz + 1))
    bc_rows[0, 0] = 1.0
    bc_rows[1, :3] = [-3.0, 4.0, -1.0]
    bc_rows[2, -3:] = [1.0, -4.0, 3.0]
    bc_rows[3, -1] = 1.0
    for r, row in zip((0, 1, nz - 1, nz), bc_rows):
        mmat[r] = row
        nmat[r] = 0.0

    # row equilibration keeps the boundary rows from being swamped by the
    # O(1/dz^4) collocation rows in the factorization
    scale = np.abs(mmat).max(axis=1)
    mmat /= scale[:, None]
    nmat /= scale[:, None]

    lu = lu_factor(mmat)
    u = np.zeros((nz + 1, tgrid.n), dtype=complex)
    for n in range(tgrid.nt):
        b = nmat @ u[:, n] + 0.5 * dt * (rhs[:, n] + rhs[:, n + 1]) / scale
        for r in (0, 1, nz - 1, nz):
            b[r] = 0.0
        u[:, n + 1] = lu_solve(lu, b)
        u[0, n + 1] = u[-1, n + 1] = 0.0
    return u


def solve_strip(f: SpectralField, method: str = "stepping") -> FlowState:
    """Solve the no-slip Stokes system in the strip 0 < z < 1 driven by a
    band-limited, divergence-free-compatible forcing (rho = 0)."""
    if f.component != "full":
        raise ValueError("forcing must be a full-vector field")
    if f.vgrid.kind != "strip":
        raise ValueError("strip solver needs a strip grid")
    lat, vg, tg = f.lattice, f.vgrid, f.tgrid
    dz = vg.dz
    dims = f.band.d - 1

    uz_f = zero_field(f.band, lat, vg, tg, "scalar")
    uh_f = zero_field(f.band, lat, vg, tg, "horizontal")

    for m in np.nonzero(lat.flags)[0]:
        k = lat.modes[m]
        a = lat.norms[m]
        fh = f.values[m, :dims]
        fz = f.values[m, -1]

        rhs = -a**2 * fz - diff1(np.einsum("c,czt->zt", 1j * k, fh), dz, axis=0)
        uz = _mode_strip_vertical(a, vg, tg, rhs)

        proj_fh = fh - k[:, None, None] * np.einsum("c,czt->zt", k, fh) / a**2
        vh = np.stack([
            _heat_stepping(ModeProblem(a, vg, tg, proj_fh[c]),
                           "dirichlet", "dirichlet") for c in range(dims)])

        # the boundary rows force the one-sided diff1 of u^z to vanish at the
        # walls, so this correction keeps u' exactly zero there and the
        # divergence defect cancels row by row
        uh_f.values[m] = vh + (1j * k / a**2)[:, None, None] * diff1(uz, dz, axis=0)
        uz_f.values[m] = uz

    pressure, compat = recover_pressure(uh_f, uz_f, f, walls=("low", "high"))

    div_h = np.einsum("mc,mczt->mzt", 1j * lat.modes, uh_f.values)
    div = uz_f.with_values(div_h + diff1(uz_f.values, dz, axis=1))
    ref = field_l1(f) or 1.0
    wall = max(float(np.max(np.abs(uh_f.values[:, :, (0, -1)]))),
               float(np.max(np.abs(uz_f.values[:, (0, -1)]))),
               float(np.max(np.abs(diff1(uz_f.values, dz, axis=1)[:, (0, -1)]))))
    diagnostics = {
        "divergence": field_l1(div) / ref,
        "pressure_compat": compat,
        "wall": wall,
    }
    return FlowState(uh_f, uz_f, pressure, diagnostics)


@dataclass(frozen=True)
class CutoffProfile:
    """Quintic cutoff: 1 below 1/2 - delta, 0 above 1/2 + delta, with two
    continuous derivatives, sampled with analytic derivatives."""

    delta: float
    nodes: np.ndarray
    eta: np.ndarray
    deta: np.ndarray
    d2eta: np.ndarray


def build_cutoff(vgrid: VerticalGrid, delta: float) -> CutoffProfile:
    if not 0.0 < delta < 0.5:
        raise ValueError("cutoff width must lie in (0, 1/2)")
    z = vgrid.nodes
    x = np.clip((z - (0.5 - delta)) / (2.0 * delta), 0.0, 1.0)
    s = x**3 * (6.0 * x**2 - 15.0 * x + 10.0)
    ds = 30.0 * x**2 * (x - 1.0) ** 2
    d2s = 60.0 * x * (x - 1.0) * (2.0 * x - 1.0)
    inside = (x > 0.0) & (x < 1.0)
    return CutoffProfile(
        delta=delta, nodes=z, eta=1.0 - s,
        deta=np.where(inside, -ds / (2.0 * delta), 0.0),
        d2eta=np.where(inside, -d2s / (2.0 * delta) ** 2, 0.0))


@dataclass(frozen=True)
class LocalizedData:
    """Half-space forcing and divergence source produced by cutting off a
    strip solution near one wall."""

    forcing: SpectralField
    rho: SpectralField
    side: str
    cutoff: CutoffProfile
    reference: FlowState = field(repr=False, default=None)


def mirror_strip(state: FlowState, f: SpectralField) -> tuple[FlowState, SpectralField]:
    """Reflect a strip solution across z = 1/2. Horizontal components and the
    pressure are even under the flip, vertical components odd."""
    def flip(vals, sign):
        return sign * vals[..., ::-1, :]

    uh = state.u_horiz.with_values(flip(state.u_horiz.values, 1.0))
    uz = state.u_vert.with_values(flip(state.u_vert.values, -1.0))
    p = state.pressure.with_values(flip(state.pressure.values, 1.0))
    fm = f.with_values(np.concatenate(
        [flip(f.values[:, :-1], 1.0), flip(f.values[:, -1:], -1.0)], axis=1))
    return FlowState(uh, uz, p, dict(state.diagnostics)), fm


def localize(state: FlowState, f: SpectralField, cutoff: CutoffProfile,
             side: str = "upper", zmax: float = 8.0) -> LocalizedData:
    """Build half-space data whose solution agrees with eta * u on the strip.

    The cutoff turns u into eta u at the cost of commutator forcing terms and
    a divergence source eta' u^z. "upper" keeps the wall at z = 0; "lower"
    reflects the strip first so the other wall becomes z = 0.
    """
    if side == "lower":
        state, f = mirror_strip(state, f)
    elif side != "upper":
        raise ValueError("side must be 'upper' or 'lower'")

    vg, tg = f.vgrid, f.tgrid
    dz = vg.dz
    eta = cutoff.eta[:, None]
    deta = cutoff.deta[:, None]
    d2eta = cutoff.d2eta[:, None]

    uh, uz, p = state.u_horiz.values, state.u_vert.values, state.pressure.values
    fh_t = (eta * f.values[:, :-1] - 2.0 * deta * diff1(uh, dz, axis=2)
            - d2eta * uh)
    fz_t = (eta * f.values[:, -1] - 2.0 * deta * diff1(uz, dz, axis=1)
            - d2eta * uz + deta * p)
    rho_t = deta * uz

    nz_half = int(round(zmax / dz))
    if abs(nz_half * dz - zmax) > _TOL * zmax:
        raise ValueError("zmax must be a multiple of the strip spacing")
    vg_half = VerticalGrid.halfline(nz_half, zmax)

    fvals = np.zeros((f.lattice.m, f.band.d, vg_half.n, tg.n), dtype=complex)
    rvals = np.zeros((f.lattice.m, vg_half.n, tg.n), dtype=complex)
    ns = vg.n
    fvals[:, :-1, :ns] = fh_t
    fvals[:, -1, :ns] = fz_t
    rvals[:, :ns] = rho_t

    f_half = SpectralField(f.band, f.lattice, vg_half, tg, fvals, "full")
    rho_half = SpectralField(f.band, f.lattice, vg_half, tg, rvals, "scalar")
    return LocalizedData(f_half, rho_half, side, cutoff, state)


def consistency_check(f: SpectralField, delta: float = 0.1,
                      zmax: float = 8.0, method: str = "stepping") -> dict:
    """Solve the strip problem, localize at each wall, re-solve in the half
    space, and report the relative L1 mismatch against eta * u on the strip
    portion of the half-space grid."""
    state = solve_strip(f, method=method)
    cutoff = build_cutoff(f.vgrid, delta)
    ns = f.vgrid.n
    out = {}
    for side in ("upper", "lower"):
        data = localize(state, f, cutoff, side=side, zmax=zmax)
        half, _ = solve_halfspace(data.forcing, data.rho, method=method)
        ref = data.reference
        eta = cutoff.eta[:, None]
        num = 0.0
        den = 0.0
        for got, want in (
                (half.u_horiz.values[:, :, :ns], eta * ref.u_horiz.values),
                (half.u_vert.values[:, :ns], eta * ref.u_vert.values)):
            diff = got - want
            fld = f.with_values(np.abs(want) + 0j, component=(
                "horizontal" if want.ndim == 4 else "scalar"))
            num += field_l1(fld.with_values(np.abs(diff) + 0j))
            den += field_l1(fld)
        out[side] = num / (den or 1.0)
    out["strip_diagnostics"] = dict(state.diagnostics)
    return out
