"""Horizontal Fourier representation on the torus: band-limited lattices,
multiplier symbols and the sampling transform pair.

The admissible wavenumbers are k' = 2*pi*n/L with 1 <= R|k'| <= 4.  The band
contains O(1) modes, so everything is direct summation over an enumerated
lattice; no FFT machinery is involved.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np

from .grids import TimeGrid, VerticalGrid

_TOL = 1e-12


@dataclass(frozen=True)
class BandSpec:
    """Torus size L, dimension d (2 or 3) and bandwidth R."""

    L: float
    d: int
    R: float

    def __post_init__(self):
        if self.L <= 0 or self.R <= 0:
            raise ValueError("L and R must be positive")
        if self.d not in (2, 3):
            raise ValueError("dimension must be 2 or 3")
        if self.R > 4.0 * self.L / (2.0 * np.pi) * (1 + _TOL):
            raise ValueError(f"no admissible modes for (L={self.L}, R={self.R})")

    @property
    def dk(self) -> float:
        return 2.0 * np.pi / self.L

    def in_band(self, knorm) -> np.ndarray:
        knorm = np.asarray(knorm, dtype=float)
        return (self.R * knorm >= 1.0 - _TOL) & (self.R * knorm <= 4.0 + _TOL)


@dataclass(frozen=True)
class WavenumberLattice:
    """Enumerated wavevectors k' = 2*pi*n/L, closed under negation."""

    band: BandSpec
    indices: np.ndarray  # (m, d-1) integer lattice points n
    modes: np.ndarray    # (m, d-1) wavevectors k'
    norms: np.ndarray    # (m,) euclidean |k'|
    flags: np.ndarray    # (m,) bool, in the admissible annulus

    @property
    def m(self) -> int:
        return self.modes.shape[0]

    @property
    def nmax(self) -> int:
        return int(np.max(np.abs(self.indices)))

    def negation_permutation(self) -> np.ndarray:
        """Row index of -k' for each row of the lattice."""
        lookup = {tuple(n): i for i, n in enumerate(self.indices)}
        return np.array([lookup[tuple(-n)] for n in self.indices])


def build_lattice(band: BandSpec, halo: int = 0) -> WavenumberLattice:
    """Enumerate all modes in the annulus 1 <= R|k'| <= 4 plus `halo` extra
    lattice shells around it.  The zero mode is never admissible."""
    if halo < 0:
        raise ValueError("halo must be nonnegative")
    nmax = int(np.floor(4.0 / (band.R * band.dk) + _TOL)) + halo
    dims = band.d - 1
    idx, kvecs = [], []
    for n in itertools.product(range(-nmax, nmax + 1), repeat=dims):
        n = np.array(n)
        k = band.dk * n
        knorm = float(np.linalg.norm(k))
        if band.in_band(knorm):
            idx.append(n)
            kvecs.append(k)
        elif halo > 0:
            # halo shells: within halo lattice steps of the annulus in |k'|
            lo = max(0.0, 1.0 / band.R - halo * band.dk)
            hi = 4.0 / band.R + halo * band.dk
            if lo - _TOL <= knorm <= hi + _TOL:
                idx.append(n)
                kvecs.append(k)
    if not idx:
        raise ValueError(f"no admissible modes for (L={band.L}, R={band.R})")
    indices = np.array(idx, dtype=int).reshape(-1, dims)
    modes = np.array(kvecs, dtype=float).reshape(-1, dims)
    order = np.lexsort(indices.T[::-1])
    indices, modes = indices[order], modes[order]
    norms = np.linalg.norm(modes, axis=1)
    flags = band.in_band(norms)
    if not flags.any():
        raise ValueError(f"no admissible modes for (L={band.L}, R={band.R})")
    return WavenumberLattice(band, indices, modes, norms, flags)


@dataclass(frozen=True)
class SpectralField:
    """Complex coefficients per (mode, z-node, t-node).

    Scalars have values of shape (m, nz, nt); vectors carry a leading
    component axis (m, ncomp, nz, nt) with horizontal components first and,
    for "full" fields, the vertical component last.
    """

    band: BandSpec
    lattice: WavenumberLattice
    vgrid: VerticalGrid
    tgrid: TimeGrid
    values: np.ndarray
    component: str = "scalar"  # "scalar" | "horizontal" | "full"

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        object.__setattr__(self, "values", vals)
        expect = self._expected_shape()
        if vals.shape != expect:
            raise ValueError(f"values shape {vals.shape}, expected {expect}")

    def _expected_shape(self):
        m, nz, nt = self.lattice.m, self.vgrid.n, self.tgrid.n
        if self.component == "scalar":
            return (m, nz, nt)
        if self.component == "horizontal":
            return (m, self.band.d - 1, nz, nt)
        if self.component == "full":
            return (m, self.band.d, nz, nt)
        raise ValueError(f"unknown component tag {self.component!r}")

    @property
    def ncomp(self) -> int:
        return 1 if self.component == "scalar" else self.values.shape[1]

    def with_values(self, values: np.ndarray, component: str | None = None) -> "SpectralField":
        return replace(self, values=values, component=component or self.component)

    def zeros_like(self, component: str | None = None) -> "SpectralField":
        comp = component or self.component
        shape = SpectralField._shape_for(self, comp)
        return replace(self, component=comp, values=np.zeros(shape, dtype=complex))

    @staticmethod
    def _shape_for(like: "SpectralField", component: str):
        m, nz, nt = like.lattice.m, like.vgrid.n, like.tgrid.n
        if component == "scalar":
            return (m, nz, nt)
        if component == "horizontal":
            return (m, like.band.d - 1, nz, nt)
        return (m, like.band.d, nz, nt)

    def horizontal_part(self) -> "SpectralField":
        if self.component != "full":
            raise ValueError("horizontal_part needs a full-vector field")
        return self.with_values(self.values[:, :-1], component="horizontal")

    def vertical_part(self) -> "SpectralField":
        if self.component != "full":
            raise ValueError("vertical_part needs a full-vector field")
        return self.with_values(self.values[:, -1], component="scalar")

    def is_conjugate_symmetric(self, tol: float = 1e-10) -> bool:
        perm = self.lattice.negation_permutation()
        ref = np.conj(self.values[perm])
        scale = np.max(np.abs(self.values)) or 1.0
        return bool(np.max(np.abs(self.values - ref)) <= tol * scale)


def zero_field(band: BandSpec, lattice: WavenumberLattice, vgrid: VerticalGrid,
               tgrid: TimeGrid, component: str = "scalar") -> SpectralField:
    m, nz, nt = lattice.m, vgrid.n, tgrid.n
    if component == "scalar":
        shape = (m, nz, nt)
    elif component == "horizontal":
        shape = (m, band.d - 1, nz, nt)
    elif component == "full":
        shape = (m, band.d, nz, nt)
    else:
        raise ValueError(f"unknown component tag {component!r}")
    return SpectralField(band, lattice, vgrid, tgrid,
                         np.zeros(shape, dtype=complex), component)


def band_project(field: SpectralField) -> SpectralField:
    """Zero the coefficients at non-admissible modes; idempotent."""
    mask = field.lattice.flags
    shape = [field.lattice.m] + [1] * (field.values.ndim - 1)
    return field.with_values(field.values * mask.reshape(shape))


def _mode_axis_view(field: SpectralField):
    """Values broadcast helper: returns (values, |k'| reshaped, k' reshaped)."""
    extra = field.values.ndim - 1
    knorm = field.lattice.norms.reshape((-1,) + (1,) * extra)
    return knorm


def _require_no_zero_mode(field: SpectralField):
    zero = field.lattice.norms <= _TOL
    if zero.any() and np.any(np.abs(field.values[zero]) > _TOL):
        raise ValueError("singular multiplier at zero mode")


def apply_multiplier(field: SpectralField, symbol: str, s: float | None = None) -> SpectralField:
    """Apply a horizontal Fourier multiplier per mode.

    Symbols: "grad_h" (scalar -> horizontal, i k'), "div_h" (horizontal ->
    scalar, i k' .), "neg_lap_h" with power s (|k'|^(2s)), "leray"
    (I - k'k'^T/|k'|^2 on horizontal vectors).
    """
    k = field.lattice.modes  # (m, dims)
    knorm = field.lattice.norms
    if symbol == "grad_h":
        if field.component != "scalar":
            raise ValueError("grad_h acts on scalar fields")
        vals = 1j * k[:, :, None, None] * field.values[:, None]
        return field.with_values(vals, component="horizontal")
    if symbol == "div_h":
        if field.component != "horizontal":
            raise ValueError("div_h acts on horizontal-vector fields")
        vals = np.einsum("mc,mczt->mzt", 1j * k, field.values)
        return field.with_values(vals, component="scalar")
    if symbol == "neg_lap_h":
        if s is None:
            raise ValueError("neg_lap_h needs a power s")
        if s < 0:
            _require_no_zero_mode(field)
        with np.errstate(divide="ignore"):
            factor = np.where(knorm > _TOL, knorm ** (2.0 * s), 0.0)
        shape = (-1,) + (1,) * (field.values.ndim - 1)
        return field.with_values(field.values * factor.reshape(shape))
    if symbol == "leray":
        if field.component != "horizontal":
            raise ValueError("leray acts on horizontal-vector fields")
        _require_no_zero_mode(field)
        kk = np.where(knorm[:, None, None] > _TOL,
                      k[:, :, None] * k[:, None, :] /
                      np.maximum(knorm, _TOL)[:, None, None] ** 2, 0.0)
        proj = np.eye(field.band.d - 1)[None] - kk
        vals = np.einsum("mcd,mdzt->mczt", proj, field.values)
        return field.with_values(vals)
    raise ValueError(f"unknown multiplier symbol {symbol!r}")


# -- physical sampling ------------------------------------------------------

def sample_grid(band: BandSpec, nx: int) -> np.ndarray:
    """Uniform sample points of the (d-1)-torus, flattened to (nx^(d-1), d-1)."""
    x = np.arange(nx) * (band.L / nx)
    dims = band.d - 1
    grids = np.meshgrid(*([x] * dims), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


def min_samples(lattice: WavenumberLattice) -> int:
    return 2 * lattice.nmax + 1


def phase_matrix(lattice: WavenumberLattice, nx: int) -> np.ndarray:
    """exp(i k'.x') of shape (m, nx^(d-1))."""
    if nx < min_samples(lattice):
        raise ValueError("aliasing: need at least 2*nmax+1 samples per direction")
    pts = sample_grid(lattice.band, nx)
    return np.exp(1j * lattice.modes @ pts.T)


def to_physical(field: SpectralField, nx: int, real: bool = True) -> np.ndarray:
    """Evaluate on the uniform sample grid.  Output shape (nx^(d-1), ...)"""
    E = phase_matrix(field.lattice, nx)
    out = np.einsum("mx,m...->x...", E, field.values)
    return out.real if real else out


def from_physical(samples: np.ndarray, like: SpectralField, nx: int,
                  component: str | None = None) -> SpectralField:
    """Exact inverse of to_physical for band-limited samples (uniform grid)."""
    E = phase_matrix(like.lattice, nx)
    coeffs = np.einsum("mx,x...->m...", np.conj(E), samples) / E.shape[1]
    return like.with_values(coeffs, component=component)


# -- diagnostics ------------------------------------------------------------

def field_l1(field: SpectralField) -> float:
    """Discrete L1-type magnitude: sum over modes of the (z,t)-trapezoid
    integral of |coefficient|.  Equivalent, up to mode count, to the physical
    L1 norm for band-limited fields; used for residual diagnostics."""
    wz = field.vgrid.weights
    wt = field.tgrid.weights
    mags = np.abs(field.values)
    if field.component != "scalar":
        mags = np.sqrt(np.sum(mags**2, axis=1))
    return float(np.einsum("mzt,z,t->", mags, wz, wt))


def relative_l1(num: SpectralField, ref: SpectralField) -> float:
    diff = num.with_values(num.values - ref.values)
    denom = field_l1(ref)
    if denom == 0.0:
        return 0.0 if field_l1(diff) == 0.0 else np.inf
    return field_l1(diff) / denom
