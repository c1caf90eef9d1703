import numpy as np
import pytest

from stokesband.grids import TimeGrid, VerticalGrid
from stokesband.norms import (LOWER_NORM, STRIP_NORM, UPPER_NORM,
                              fiber_k_functional, interpolation_norm,
                              lhs_norm_suite, singular_weights, time_average)
from stokesband.spectral import BandSpec, build_lattice, zero_field
from stokesband.strip import solve_strip


def test_time_average_exponential():
    tg = TimeGrid(10.0, 2000)
    vals = np.exp(-tg.nodes)
    got = time_average(vals, tg)
    want = (1.0 - np.exp(-10.0)) / 10.0
    assert abs(got - want) < 1e-5


def test_singular_weights_indicator_mass():
    vg = VerticalGrid.strip(50)
    idx, w = singular_weights(vg, STRIP_NORM)
    nodes = vg.nodes[idx]
    mask = (nodes >= 0.45) & (nodes <= 0.55)
    got = w[mask].sum()
    want = 2.0 * np.log(11.0 / 9.0)
    assert abs(got - want) < 1e-10 * want


def test_fiber_k_functional_zero():
    vg = VerticalGrid.strip(64)
    value, lam = fiber_k_functional(np.zeros(vg.n), vg, STRIP_NORM)
    assert value == 0.0


def test_fiber_k_functional_constant():
    # the boundary weight has infinite mass, so clamping at the full level
    # is optimal: value = c
    vg = VerticalGrid.strip(400)
    c = 2.7
    value, lam = fiber_k_functional(np.full(vg.n, c), vg, STRIP_NORM)
    assert abs(value - c) < 1e-4 * c
    assert abs(lam - c) < 1e-8


def test_fiber_k_functional_indicator():
    # at nz = 50 the midpoint weight cells of the interior nodes tile the
    # interval [0.45, 0.55] exactly, so the quadrature has no edge error
    vg = VerticalGrid.strip(50)
    c = 3.0
    g = np.where((vg.nodes >= 0.45) & (vg.nodes <= 0.55), c, 0.0)
    value, lam = fiber_k_functional(g, vg, STRIP_NORM)
    want = c * 2.0 * np.log(11.0 / 9.0)
    assert lam == 0.0
    assert abs(value - want) < 1e-4 * want


def test_breakpoint_minimum_matches_dense_scan():
    vg = VerticalGrid.strip(40)
    idx, w = singular_weights(vg, STRIP_NORM)
    rng = np.random.default_rng(11)
    for _ in range(20):
        g = np.abs(rng.standard_normal(vg.n))
        value, lam = fiber_k_functional(g, vg, STRIP_NORM)
        lams = np.linspace(0.0, np.max(g), 1000)
        scans = lams + np.sum(
            w * np.maximum(g[idx][None, :] - lams[:, None], 0.0), axis=1)
        assert value <= scans.min() + 1e-12
        assert scans.min() - value <= (np.max(g) / 1000.0) * (1.0 + w.sum())


def _single_mode_field(R=1.0, nz=48, nt=24, kmode=2):
    band = BandSpec(L=2 * np.pi, d=2, R=R)
    lattice = build_lattice(band)
    vg = VerticalGrid.strip(nz)
    tg = TimeGrid(1.0, nt)
    f = zero_field(band, lattice, vg, tg, "scalar")
    m = int(np.nonzero((lattice.modes[:, 0] == kmode) & lattice.flags)[0][0])
    neg = lattice.negation_permutation()
    z = vg.nodes[:, None]
    prof = np.sin(np.pi * z) * (1.0 + 0.5 * np.cos(2 * np.pi * tg.nodes))
    f.values[m] = prof
    f.values[neg[m]] = prof
    return f


def test_lower_bound_below_banded_upper():
    f = _single_mode_field()
    lo = interpolation_norm(f, STRIP_NORM, "lower")
    hi, witness = interpolation_norm(f, STRIP_NORM, "banded_upper")
    assert lo <= hi * (1.0 + 1e-10)
    assert hi > 0.0
    np.testing.assert_allclose(witness.f0.values + witness.f1.values,
                               f.values, atol=1e-10)


def test_upper_witness_is_band_limited():
    f = _single_mode_field()
    _, witness = interpolation_norm(f, STRIP_NORM, "banded_upper")
    for part in (witness.f0, witness.f1):
        off = ~part.lattice.flags
        if off.any():
            assert np.max(np.abs(part.values[off])) < 1e-10


def test_norm_scales_linearly():
    f = _single_mode_field()
    g = f.with_values(3.0 * f.values)
    lo_f = interpolation_norm(f, STRIP_NORM, "lower")
    lo_g = interpolation_norm(g, STRIP_NORM, "lower")
    assert abs(lo_g - 3.0 * lo_f) < 1e-8 * lo_g


def test_lhs_norm_suite_keys_and_finiteness():
    band = BandSpec(L=2 * np.pi, d=2, R=1.0)
    lattice = build_lattice(band)
    vg = VerticalGrid.strip(32)
    tg = TimeGrid(1.0, 32)
    f = zero_field(band, lattice, vg, tg, "full")
    m = int(np.nonzero((lattice.modes[:, 0] == 2) & lattice.flags)[0][0])
    neg = lattice.negation_permutation()
    prof = np.exp(-((vg.nodes[:, None] - 0.5) ** 2) / 0.02) \
        * (1.0 - np.exp(-tg.nodes[None, :] / 0.2))
    f.values[m, 1] = prof
    f.values[neg[m], 1] = prof
    state = solve_strip(f)
    suite = lhs_norm_suite(state, f, iters=12)
    for key in ("heat_u_horiz", "grad_grad_u_horiz", "dt_u_vert",
                "grad2_u_vert", "grad_p", "rhs", "ratio", "anomaly"):
        assert key in suite
    assert np.isfinite(suite["ratio"])
    assert not suite["anomaly"]


def test_half_line_norm_kinds():
    # the (0, inf) norm lives on an upward half-line grid, the (-inf, 1)
    # norm on a grid ending at z = 1
    band = BandSpec(L=2 * np.pi, d=2, R=1.0)
    lattice = build_lattice(band)
    tg = TimeGrid(1.0, 16)
    grids = {
        UPPER_NORM: VerticalGrid.halfline(64, 8.0),
        LOWER_NORM: VerticalGrid("halfline", np.linspace(-7.0, 1.0, 65)),
    }
    for kind, vg in grids.items():
        f = zero_field(band, lattice, vg, tg, "scalar")
        m = int(np.nonzero(lattice.flags)[0][0])
        neg = lattice.negation_permutation()
        center = 0.5 * (vg.nodes[0] + vg.nodes[-1])
        prof = np.exp(-((vg.nodes[:, None] - center) ** 2)) * np.ones(tg.n)
        f.values[m] = prof
        f.values[neg[m]] = prof
        val = interpolation_norm(f, kind, "lower")
        assert np.isfinite(val) and val > 0.0
