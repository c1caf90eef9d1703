import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import erf

from stokesband.elementary import (ModeProblem, solve_frac_backward,
                                   solve_frac_forward, solve_heat_dirichlet,
                                   solve_heat_neumann, split_heat_solution)
from stokesband.grids import TimeGrid, VerticalGrid


def _setting(nz=128, zmax=8.0, nt=4):
    vg = VerticalGrid.halfline(nz, zmax)
    tg = TimeGrid(1.0, nt)
    return vg, tg


def _rel_l1(vg, got, want):
    w = vg.weights[:, None]
    return float(np.sum(w * np.abs(got - want)) / np.sum(w * np.abs(want)))


def test_backward_transport_exponential():
    vg, tg = _setting()
    rhs = np.exp(-vg.nodes)[:, None] * np.ones(tg.n)
    u = solve_frac_backward(ModeProblem(1.0, vg, tg, rhs))
    # closed form of the truncated integral over (z, zmax)
    z = vg.nodes
    want = (0.5 * (np.exp(-z) - np.exp(z - 2.0 * vg.nodes[-1])))[:, None] \
        * np.ones(tg.n)
    assert _rel_l1(vg, u, want) < 1e-6


def test_backward_transport_indicator():
    # node-sampled jumps limit the quadrature to first order, so this
    # example carries a looser tolerance plus a convergence check
    errs = []
    for nz in (512, 1024):
        vg, tg = _setting(nz=nz)
        ind = ((vg.nodes >= 1.0) & (vg.nodes <= 2.0)).astype(float)
        ind[np.isclose(vg.nodes, 1.0) | np.isclose(vg.nodes, 2.0)] = 0.5
        rhs = ind[:, None] * np.ones(tg.n)
        u = solve_frac_backward(ModeProblem(2.0, vg, tg, rhs))
        mask = vg.nodes < 1.0
        z = vg.nodes[mask]
        want = (np.exp(-2.0 * (1.0 - z)) - np.exp(-2.0 * (2.0 - z))) / 2.0
        errs.append(np.max(np.abs(u[mask, 0] - want)) / np.max(np.abs(want)))
    assert errs[0] < 2e-3
    assert errs[1] < 0.6 * errs[0]


def test_forward_transport_homogeneous_and_particular():
    vg, tg = _setting()
    zero = np.zeros((vg.n, tg.n))
    g = np.ones(tg.n)
    u = solve_frac_forward(ModeProblem(1.0, vg, tg, zero, g=g))
    assert _rel_l1(vg, u, np.exp(-vg.nodes)[:, None] * np.ones(tg.n)) < 1e-6
    u2 = solve_frac_forward(ModeProblem(1.0, vg, tg, np.ones_like(zero)))
    want = (1.0 - np.exp(-vg.nodes))[:, None] * np.ones(tg.n)
    assert _rel_l1(vg, u2, want) < 1e-6
    assert np.all(u2[0] == 0.0)


def test_transport_rejects_nonpositive_decay():
    vg, tg = _setting(nz=16)
    with pytest.raises(ValueError):
        solve_frac_forward(ModeProblem(0.0, vg, tg, np.zeros((vg.n, tg.n))))


def test_heat_dirichlet_zero_mode_oracle():
    # a = 0, rhs = 1: u(z, t) = integral_0^t erf(z / (2 sqrt(t - s))) ds
    vg = VerticalGrid.halfline(256, 8.0)
    tg = TimeGrid(0.5, 64)
    rhs = np.ones((vg.n, tg.n))
    u = solve_heat_dirichlet(ModeProblem(1e-12, vg, tg, rhs))
    zs = vg.nodes[[16, 48, 96]]
    t = tg.t0
    for iz, z in zip([16, 48, 96], zs):
        want, _ = quad(lambda s: erf(z / (2.0 * np.sqrt(t - s))), 0.0, t,
                       points=[t - 1e-6])
        assert abs(u[iz, -1] - want) < 2e-3 * abs(want)


def test_heat_solutions_satisfy_boundary_and_initial_conditions():
    vg, _ = _setting(nz=64)
    tg = TimeGrid(1.0, 32)
    rng = np.random.default_rng(3)
    rhs = rng.standard_normal((vg.n, tg.n)) \
        + 1j * rng.standard_normal((vg.n, tg.n))
    ud = solve_heat_dirichlet(ModeProblem(1.5, vg, tg, rhs))
    un = solve_heat_neumann(ModeProblem(1.5, vg, tg, rhs))
    assert np.all(ud[:, 0] == 0.0)
    assert np.all(un[:, 0] == 0.0)
    assert np.all(ud[0] == 0.0)


def test_heat_dual_path_agreement_small():
    vg = VerticalGrid.halfline(96, 8.0)
    tg = TimeGrid(1.0, 96)
    z, t = vg.nodes[:, None], tg.nodes[None, :]
    rhs = np.exp(-((z - 2.0)**2)) * (1.0 - np.exp(-t / 0.3))
    p = ModeProblem(1.0, vg, tg, rhs)
    us = solve_heat_dirichlet(p, method="stepping")
    uk = solve_heat_dirichlet(p, method="kernel")
    assert _rel_l1(vg, uk, us) < 5e-3


def test_split_heat_solution_identity():
    vg = VerticalGrid.halfline(128, 8.0)
    tg = TimeGrid(1.0, 128)
    z, t = vg.nodes[:, None], tg.nodes[None, :]
    rhs = np.exp(-((z - 2.0)**2)) * (1.0 - np.exp(-t / 0.3))
    p = ModeProblem(1.0, vg, tg, rhs)
    u = solve_heat_dirichlet(p)
    _, _, defect = split_heat_solution(u, p)
    assert defect < 1e-2
