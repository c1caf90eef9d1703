import numpy as np
import pytest

from stokesband.grids import TimeGrid, VerticalGrid
from stokesband.spectral import (BandSpec, apply_multiplier, band_project,
                                 build_lattice, from_physical, to_physical,
                                 zero_field)


@pytest.fixture
def setting():
    band = BandSpec(L=2 * np.pi, d=2, R=1.0)
    lattice = build_lattice(band)
    vg = VerticalGrid.strip(8)
    tg = TimeGrid(1.0, 4)
    return band, lattice, vg, tg


def test_lattice_annulus_membership(setting):
    band, lattice, _, _ = setting
    mags = lattice.norms[lattice.flags]
    assert np.all(band.R * mags >= 1.0 - 1e-12)
    assert np.all(band.R * mags <= 4.0 + 1e-12)
    assert not np.any(lattice.norms[lattice.flags] == 0.0)


def test_lattice_rejects_empty_band():
    with pytest.raises(ValueError):
        BandSpec(L=2 * np.pi, d=2, R=100.0)


def test_negation_permutation_involution(setting):
    _, lattice, _, _ = setting
    neg = lattice.negation_permutation()
    assert np.array_equal(neg[neg], np.arange(lattice.m))
    np.testing.assert_array_equal(lattice.modes[neg], -lattice.modes)


def _random_real_field(setting, seed=0):
    band, lattice, vg, tg = setting
    rng = np.random.default_rng(seed)
    f = zero_field(band, lattice, vg, tg, "scalar")
    neg = lattice.negation_permutation()
    vals = rng.standard_normal((lattice.m, vg.n, tg.n)) \
        + 1j * rng.standard_normal((lattice.m, vg.n, tg.n))
    vals[~lattice.flags] = 0.0
    return f.with_values(0.5 * (vals + np.conj(vals[neg])))


def test_physical_round_trip(setting):
    f = _random_real_field(setting)
    nx = 64
    samples = to_physical(f, nx)
    assert np.max(np.abs(np.imag(to_physical(f, nx, real=False)))) < 1e-12
    back = from_physical(samples, f, nx)
    err = np.max(np.abs(back.values - f.values))
    assert err <= 1e-12 * np.max(np.abs(f.values))


def test_band_project_idempotent(setting):
    band, lattice, vg, tg = setting
    f = _random_real_field(setting)
    g = f.with_values(f.values + 0.0)
    g.values[~lattice.flags] = 1.0
    proj = band_project(g)
    assert np.all(proj.values[~lattice.flags] == 0.0)
    np.testing.assert_array_equal(band_project(proj).values, proj.values)


def test_horizontal_gradient_multiplier_matches_finite_difference(setting):
    band, lattice, vg, tg = setting
    f = _random_real_field(setting)
    grad = apply_multiplier(f, "grad_h")
    errs = []
    for nx in (256, 512):
        phys = to_physical(f, nx)
        gphys = to_physical(grad.with_values(grad.values[:, 0],
                                             component="scalar"), nx)
        h = band.L / nx
        fd = (np.roll(phys, -1, axis=0) - np.roll(phys, 1, axis=0)) / (2 * h)
        errs.append(np.max(np.abs(fd - gphys)))
    assert errs[1] <= errs[0] / 3.0


def test_fractional_laplacian_powers_compose(setting):
    f = _random_real_field(setting)
    half = apply_multiplier(apply_multiplier(f, "neg_lap_h", s=0.25),
                            "neg_lap_h", s=0.25)
    full = apply_multiplier(f, "neg_lap_h", s=0.5)
    np.testing.assert_allclose(half.values, full.values, atol=1e-12)


def test_leray_projection_is_horizontally_divergence_free(setting):
    band, lattice, vg, tg = setting
    scalar = _random_real_field(setting)
    vec = apply_multiplier(scalar, "grad_h")
    proj = apply_multiplier(vec, "leray")
    div = apply_multiplier(proj, "div_h")
    assert np.max(np.abs(div.values)) < 1e-10 * np.max(np.abs(vec.values))
