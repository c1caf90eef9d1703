"""Per-mode elementary boundary-value solvers.

Each admissible horizontal mode k' reduces the half-space problems to 1-D
problems in (z, t) with fractional symbol a = |k'|:

* backward transport (d/dz - a)-type: explicit exponential integral from above,
* forward transport (d/dz + a)-type: exponential integral from the wall,
* heat equation (d/dt - d2/dz2 + a^2) with Dirichlet or Neumann wall data,
  solved either by reflected-kernel Duhamel quadrature or by Crank-Nicolson
  stepping (two independent paths, used as mutual oracles).

The half-line is truncated at z = Z_max with homogeneous Dirichlet far data;
band-limitation gives a >= 1/R so the truncation error decays like
exp(-Z_max/R).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded
from scipy.special import erf, roots_legendre

from .grids import TimeGrid, VerticalGrid, diff1

__all__ = [
    "ModeProblem", "HeatKernelEval",
    "solve_frac_backward", "solve_frac_forward",
    "solve_heat_dirichlet", "solve_heat_neumann", "split_heat_solution",
]


@dataclass(frozen=True)
class ModeProblem:
    """One horizontal mode's 1-D data: symbol a = |k'|, grids, forcing and
    optional wall data g(t)."""

    a: float
    vgrid: VerticalGrid
    tgrid: TimeGrid
    rhs: np.ndarray                # (nz, nt) complex
    g: np.ndarray | None = None    # (nt,) complex wall data

    def __post_init__(self):
        rhs = np.asarray(self.rhs, dtype=complex)
        object.__setattr__(self, "rhs", rhs)
        if rhs.shape != (self.vgrid.n, self.tgrid.n):
            raise ValueError("rhs shape does not match grids")
        if self.g is not None:
            g = np.asarray(self.g, dtype=complex)
            object.__setattr__(self, "g", g)
            if g.shape != (self.tgrid.n,):
                raise ValueError("wall data shape does not match time grid")


@dataclass(frozen=True)
class HeatKernelEval:
    """Value of the 1-D heat kernel factor t^(-1/2) exp(-z^2/4t)."""

    t: float
    z: float

    def __post_init__(self):
        if self.t <= 0:
            raise ValueError("t must be positive")

    @property
    def value(self) -> float:
        return self.t ** -0.5 * np.exp(-self.z**2 / (4.0 * self.t))


# -- exponential product integration ----------------------------------------

def _exp_moments(a: float, h: float, pmax: int) -> np.ndarray:
    """M_p = int_0^h exp(-a s) s^p ds for p = 0..pmax, numerically stable."""
    M = np.zeros(pmax + 1)
    if a * h < 0.5:
        # series avoids the cancellation in the recursion for small a*h
        for p in range(pmax + 1):
            term, total, j = h ** (p + 1) / (p + 1), 0.0, 0
            while abs(term) > 1e-18 * h ** (p + 1) and j < 60:
                total += term
                j += 1
                term *= -a * h * (p + j) / (j * (p + j + 1))
            M[p] = total
        return M
    e = np.exp(-a * h)
    M[0] = (1.0 - e) / a
    for p in range(1, pmax + 1):
        M[p] = (p * M[p - 1] - h**p * e) / a
    return M


def _panel_integrals(a: float, dz: float, r: np.ndarray, reverse: bool) -> np.ndarray:
    """Per-panel integrals int e^{-a s} r ds with the kernel anchored at the
    panel end toward which the recursion marches.

    r has shape (nz, ...).  Panel j couples nodes j..j+1 (plus stencil
    neighbours).  For the forward solver (reverse=False) the kernel weight is
    exp(-a (z_{j+1} - z0)); for the backward solver (reverse=True) it is
    exp(-a (z0 - z_j)), which is the same rule applied to the flipped array.
    """
    if reverse:
        return _panel_integrals(a, dz, r[::-1], reverse=False)[::-1]
    nz = r.shape[0]
    out = np.zeros((nz - 1,) + r.shape[1:], dtype=r.dtype)
    M = _exp_moments(a, dz, 3)

    def weights(snodes):
        V = np.vander(np.asarray(snodes), 4, increasing=True)
        return np.linalg.inv(V).T @ M

    if nz < 4:
        # tiny grids: linear product rule
        w_hi = _exp_moments(a, dz, 1)[1] / dz
        w_lo = _exp_moments(a, dz, 1)[0] - w_hi
        for j in range(nz - 1):
            out[j] = w_hi * r[j + 1] + w_lo * r[j]
        return out

    # panel j integrates r(z_{j+1} - s) over s in [0, dz]; the cubic stencil
    # uses nodes j-1..j+2 whose s-values are 2dz, dz, 0, -dz
    wi = weights([-dz, 0.0, dz, 2 * dz])
    out[1:nz - 2] = (wi[0] * r[3:] + wi[1] * r[2:-1]
                     + wi[2] * r[1:-2] + wi[3] * r[:-3])
    # first panel: stencil nodes 0..3, s-values dz, 0, -dz, -2dz
    w0 = weights([dz, 0.0, -dz, -2 * dz])
    out[0] = w0[0] * r[0] + w0[1] * r[1] + w0[2] * r[2] + w0[3] * r[3]
    # last panel: stencil nodes nz-4..nz-1, s-values 3dz, 2dz, dz, 0
    wl = weights([0.0, dz, 2 * dz, 3 * dz])
    out[-1] = wl[0] * r[-1] + wl[1] * r[-2] + wl[2] * r[-3] + wl[3] * r[-4]
    return out


def solve_frac_backward(p: ModeProblem) -> np.ndarray:
    """u(z,t) = int_z^Zmax exp(-a (z0 - z)) rhs(z0,t) dz0 columnwise in t."""
    if p.a <= 0:
        raise ValueError("non-band-limited mode: a must be positive")
    dz = p.vgrid.dz
    decay = np.exp(-p.a * dz)
    panels = _panel_integrals(p.a, dz, p.rhs, reverse=True)
    u = np.zeros_like(p.rhs)
    for j in range(p.vgrid.n - 2, -1, -1):
        u[j] = decay * u[j + 1] + panels[j]
    return u


def solve_frac_forward(p: ModeProblem) -> np.ndarray:
    """u(z,t) = exp(-a z) g(t) + int_0^z exp(-a (z - z0)) rhs(z0,t) dz0."""
    if p.a <= 0:
        raise ValueError("non-band-limited mode: a must be positive")
    dz = p.vgrid.dz
    decay = np.exp(-p.a * dz)
    panels = _panel_integrals(p.a, dz, p.rhs, reverse=False)
    u = np.zeros_like(p.rhs)
    if p.g is not None:
        u[0] = p.g
    for j in range(1, p.vgrid.n):
        u[j] = decay * u[j - 1] + panels[j - 1]
    return u


# -- heat equation: Crank-Nicolson stepping ----------------------------------

def _cn_banded(a: float, vgrid: VerticalGrid, dt: float, bc0: str, bc1: str):
    """Banded (l=2, u=2) matrices for (I - dt/2 A) with A = d2/dz2 - a^2 and
    the requested wall rows.  Returns (lhs_banded, apply_rhs) where apply_rhs
    maps u^n (nz,...) to (I + dt/2 A) u^n with boundary rows zeroed."""
    nz, dz = vgrid.n, vgrid.dz
    main = 1.0 + dt * (1.0 / dz**2 + 0.5 * a**2)
    off = -0.5 * dt / dz**2
    ab = np.zeros((5, nz))
    ab[2, :] = main
    ab[1, 1:] = off   # superdiagonal
    ab[3, :-1] = off  # subdiagonal

    def set_row(i, entries):  # entries: {col: val}
        for col, val in entries.items():
            ab[2 + i - col, col] = val

    # clear then set boundary rows
    for i, bc, orient in ((0, bc0, +1), (nz - 1, bc1, -1)):
        for col in range(max(0, i - 2), min(nz, i + 3)):
            ab[2 + i - col, col] = 0.0
        if bc == "dirichlet":
            set_row(i, {i: 1.0})
        elif bc == "neumann":
            set_row(i, {i: -3.0 * orient, i + orient: 4.0 * orient,
                        i + 2 * orient: -1.0 * orient})
        else:
            raise ValueError(f"unknown boundary condition {bc!r}")

    c_main = 1.0 - dt * (1.0 / dz**2 + 0.5 * a**2)

    def apply_rhs(u):
        out = np.zeros_like(u)
        out[1:-1] = c_main * u[1:-1] - off * (u[2:] + u[:-2])
        return out

    return ab, apply_rhs


def _heat_stepping(p: ModeProblem, bc0: str, bc1: str) -> np.ndarray:
    dt = p.tgrid.dt
    ab, apply_rhs = _cn_banded(p.a, p.vgrid, dt, bc0, bc1)
    u = np.zeros_like(p.rhs)
    for n in range(p.tgrid.n - 1):
        b = apply_rhs(u[:, n]) + 0.5 * dt * (p.rhs[:, n] + p.rhs[:, n + 1])
        b[0] = 0.0
        b[-1] = 0.0
        u[:, n + 1] = solve_banded((2, 2), ab, b)
    return u


# -- heat equation: reflected-kernel Duhamel quadrature ----------------------

def _gauss_rule(n: int = 8):
    x, w = roots_legendre(n)
    return x, w


def _heat_kernel_matrix(vgrid: VerticalGrid, tau: float, sign: float) -> np.ndarray:
    """Normalized reflected kernel on the grid, including z-quadrature weights:
    G[i, j] = [Ghat(z_i - z_j, tau) + sign * Ghat(z_i + z_j, tau)] * w_j with
    Ghat(s, tau) = (4 pi tau)^(-1/2) exp(-s^2 / 4 tau)."""
    z = vgrid.nodes
    pref = 1.0 / np.sqrt(4.0 * np.pi * tau)
    diff = z[:, None] - z[None, :]
    summ = z[:, None] + z[None, :]
    G = pref * (np.exp(-diff**2 / (4 * tau)) + sign * np.exp(-summ**2 / (4 * tau)))
    return G * vgrid.weights[None, :]


def _heat_kernel_path(p: ModeProblem, sign: float) -> np.ndarray:
    """Duhamel quadrature: trapezoid in s on the stored time grid for
    tau = t - s >= dt, with the integrable tau^(-1/2)-type concentration on
    the last panel handled by the substitution tau = sigma^2 and a local
    wall-mass factor (erf for Dirichlet, 1 for Neumann)."""
    nz, nt = p.vgrid.n, p.tgrid.n
    dt = p.tgrid.dt
    a2 = p.a**2
    u = np.zeros((nz, nt), dtype=complex)

    for k in range(1, nt):
        tau = k * dt
        Pk = _heat_kernel_matrix(p.vgrid, tau, sign)
        conv = Pk @ p.rhs  # (nz, nt)
        e = np.exp(-a2 * tau) * dt
        u[:, k:] += e * conv[:, : nt - k]
        # trapezoid end corrections: s = t - dt (k = 1) and s = 0 (k = n)
        if k == 1:
            u[:, 1:] -= 0.5 * e * conv[:, : nt - 1]
        u[:, k] -= 0.5 * e * conv[:, 0]

    # last panel tau in [0, dt]: 2 int_0^sqrt(dt) sig e^{-a^2 sig^2}
    # phi(z, sig) rhs(z, t - sig^2) dsig, rhs linear in t on the panel
    x, w = _gauss_rule(8)
    smax = np.sqrt(dt)
    sig = 0.5 * smax * (x + 1.0)
    gw = 0.5 * smax * w
    z = p.vgrid.nodes[:, None]
    if sign < 0:
        phi = erf(z / (2.0 * sig[None, :]))
    else:
        phi = np.ones((nz, sig.size))
    common = 2.0 * gw[None, :] * sig[None, :] * np.exp(-a2 * sig[None, :] ** 2) * phi
    frac = sig**2 / dt
    A = common @ (1.0 - frac)   # weight of rhs(:, n)
    B = common @ frac           # weight of rhs(:, n-1)
    u[:, 1:] += A[:, None] * p.rhs[:, 1:] + B[:, None] * p.rhs[:, :-1]
    u[:, 0] = 0.0
    if sign < 0:
        u[0, :] = 0.0
    return u


def solve_heat_dirichlet(p: ModeProblem, method: str = "stepping") -> np.ndarray:
    """(d/dt - d2/dz2 + a^2) u = rhs with u = 0 at the wall, at t = 0 and at
    the truncation boundary."""
    if method == "stepping":
        return _heat_stepping(p, "dirichlet", "dirichlet")
    if method == "kernel":
        return _heat_kernel_path(p, sign=-1.0)
    raise ValueError(f"unknown method {method!r}")


def solve_heat_neumann(p: ModeProblem, method: str = "stepping") -> np.ndarray:
    """As solve_heat_dirichlet with a zero-flux wall (one-sided second-order
    derivative row / plus-sign reflection kernel)."""
    if method == "stepping":
        return _heat_stepping(p, "neumann", "dirichlet")
    if method == "kernel":
        return _heat_kernel_path(p, sign=+1.0)
    raise ValueError(f"unknown method {method!r}")


def split_heat_solution(u_dirichlet: np.ndarray, p: ModeProblem,
                        method: str = "stepping"):
    """Split the Dirichlet solution into a Neumann part and a wall-flux
    correction driven by -2 du/dz at the wall through the whole-line kernel.

    Returns (u_N, u_C, defect) with defect the relative L1 mismatch of
    u_dirichlet - (u_N + u_C).
    """
    u_N = solve_heat_neumann(p, method=method)
    flux = diff1(u_dirichlet, p.vgrid.dz, axis=0)[0]  # (nt,)
    nz, nt = p.vgrid.n, p.tgrid.n
    dt = p.tgrid.dt
    a2 = p.a**2
    z = p.vgrid.nodes
    u_C = np.zeros((nz, nt), dtype=complex)
    for k in range(1, nt):
        tau = k * dt
        ker = np.exp(-a2 * tau) / np.sqrt(4 * np.pi * tau) * np.exp(-z**2 / (4 * tau))
        wk = dt
        u_C[:, k:] += -2.0 * wk * ker[:, None] * flux[None, : nt - k]
        if k == 1:
            u_C[:, 1:] -= -2.0 * 0.5 * wk * ker[:, None] * flux[None, : nt - 1]
        u_C[:, k] -= -2.0 * 0.5 * wk * ker * flux[0]
    # singular panel via tau = sigma^2
    x, w = _gauss_rule(8)
    smax = np.sqrt(dt)
    sig = 0.5 * smax * (x + 1.0)
    gw = 0.5 * smax * w
    ker = np.exp(-a2 * sig[None, :] ** 2 - z[:, None] ** 2 / (4 * sig[None, :] ** 2))
    common = -2.0 * gw[None, :] / np.sqrt(np.pi) * ker
    frac = sig**2 / dt
    A = common @ (1.0 - frac)
    B = common @ frac
    u_C[:, 1:] += A[:, None] * flux[None, 1:] + B[:, None] * flux[None, :-1]
    u_C[:, 0] = 0.0

    wz, wt = p.vgrid.weights, p.tgrid.weights
    num = np.einsum("zt,z,t->", np.abs(u_dirichlet - (u_N + u_C)), wz, wt)
    den = np.einsum("zt,z,t->", np.abs(u_dirichlet), wz, wt)
    defect = float(num / den) if den > 0 else 0.0
    return u_N, u_C, defect
