import numpy as np
import pytest

from stokesband.grids import TimeGrid, VerticalGrid
from stokesband.halfspace import (check_irrotational, recover_pressure,
                                  solve_halfspace)
from stokesband.spectral import BandSpec, build_lattice, zero_field


def _setting(nz=128, nt=64, zmax=8.0, R=1.0):
    band = BandSpec(L=2 * np.pi, d=2, R=R)
    lattice = build_lattice(band)
    vg = VerticalGrid.halfline(nz, zmax)
    tg = TimeGrid(1.0, nt)
    return band, lattice, vg, tg


def _vertical_bump_forcing(band, lattice, vg, tg, kmode=2, amp=1.0):
    f = zero_field(band, lattice, vg, tg, "full")
    neg = lattice.negation_permutation()
    m = int(np.nonzero((lattice.modes[:, 0] == kmode) & lattice.flags)[0][0])
    z = vg.nodes[:, None]
    t = tg.nodes[None, :]
    profile = np.exp(-((z - 2.0) ** 2)) * (1.0 - np.exp(-t / 0.3))
    f.values[m, -1] = amp * profile
    f.values[neg[m], -1] = np.conj(amp) * profile
    return f


def test_single_mode_structural_identities():
    band, lattice, vg, tg = _setting()
    f = _vertical_bump_forcing(band, lattice, vg, tg)
    rho = zero_field(band, lattice, vg, tg, "scalar")
    state, trace = solve_halfspace(f, rho)
    assert state.diagnostics["divergence"] <= 1e-6
    assert np.all(state.u_horiz.values[:, :, 0] == 0.0)
    assert np.all(state.u_vert.values[:, 0] == 0.0)
    assert state.diagnostics["noslip_pin"] <= 1e-12


def test_rejects_grid_mismatch():
    band, lattice, vg, tg = _setting(nz=32, nt=16)
    f = _vertical_bump_forcing(band, lattice, vg, tg)
    rho = zero_field(band, lattice, VerticalGrid.halfline(16, 8.0), tg,
                     "scalar")
    with pytest.raises(ValueError):
        solve_halfspace(f, rho)


def test_rejects_non_banded_forcing():
    band = BandSpec(L=2 * np.pi, d=2, R=1.0)
    lattice = build_lattice(band, halo=1)
    vg = VerticalGrid.halfline(32, 8.0)
    tg = TimeGrid(1.0, 16)
    f = _vertical_bump_forcing(band, lattice, vg, tg)
    f.values[~lattice.flags] = 1.0
    rho = zero_field(band, lattice, vg, tg, "scalar")
    with pytest.raises(ValueError):
        solve_halfspace(f, rho)


def test_irrotational_defect_halves_under_refinement():
    secs = []
    for n in (128, 256):
        band, lattice, vg, tg = _setting(nz=n, nt=n)
        f = _vertical_bump_forcing(band, lattice, vg, tg)
        rho = zero_field(band, lattice, vg, tg, "scalar")
        state, _ = solve_halfspace(f, rho)
        secs.append(check_irrotational(state, f)["sec"])
    assert secs[1] <= 0.6 * secs[0]


def test_pressure_compatibility_decreases_under_refinement():
    defects = []
    for n in (128, 256):
        band, lattice, vg, tg = _setting(nz=n, nt=n)
        f = _vertical_bump_forcing(band, lattice, vg, tg)
        rho = zero_field(band, lattice, vg, tg, "scalar")
        state, _ = solve_halfspace(f, rho)
        _, compat = recover_pressure(state.u_horiz, state.u_vert, f,
                                     walls=("low",))
        defects.append(compat)
    assert defects[1] <= 0.75 * defects[0]


def test_momentum_defect_small():
    band, lattice, vg, tg = _setting(nz=256, nt=256)
    f = _vertical_bump_forcing(band, lattice, vg, tg)
    rho = zero_field(band, lattice, vg, tg, "scalar")
    state, _ = solve_halfspace(f, rho)
    assert state.diagnostics["momentum"] <= 1e-2
