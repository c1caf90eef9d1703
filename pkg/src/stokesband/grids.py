"""Vertical and temporal grids plus the finite-difference stencils shared by all solvers."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class VerticalGrid:
    """Uniform vertical grid with trapezoid quadrature weights.

    kind is one of "strip" ([0,1]), "halfline" ([0, zmax]) or "reflected"
    ([-zmax, zmax]).
    """

    kind: str
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("vertical grid needs at least two nodes")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("vertical nodes must be strictly increasing")
        if self.kind not in ("strip", "halfline", "reflected"):
            raise ValueError(f"unknown vertical grid kind {self.kind!r}")

    @classmethod
    def strip(cls, nz: int) -> "VerticalGrid":
        return cls("strip", np.linspace(0.0, 1.0, nz + 1))

    @classmethod
    def halfline(cls, nz: int, zmax: float) -> "VerticalGrid":
        return cls("halfline", np.linspace(0.0, float(zmax), nz + 1))

    @classmethod
    def reflected(cls, nz: int, zmax: float) -> "VerticalGrid":
        return cls("reflected", np.linspace(-float(zmax), float(zmax), 2 * nz + 1))

    @property
    def n(self) -> int:
        return self.nodes.size

    @property
    def dz(self) -> float:
        return float(self.nodes[1] - self.nodes[0])

    @property
    def length(self) -> float:
        return float(self.nodes[-1] - self.nodes[0])

    @property
    def weights(self) -> np.ndarray:
        w = np.full(self.n, self.dz)
        w[0] = w[-1] = 0.5 * self.dz
        return w


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid on [0, t0] with nt steps (nt+1 nodes)."""

    t0: float
    nt: int

    def __post_init__(self):
        if self.t0 <= 0:
            raise ValueError("horizon t0 must be positive")
        if self.nt < 1:
            raise ValueError("need at least one time step")

    @property
    def dt(self) -> float:
        return self.t0 / self.nt

    @property
    def n(self) -> int:
        return self.nt + 1

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.t0, self.nt + 1)

    @property
    def weights(self) -> np.ndarray:
        w = np.full(self.n, self.dt)
        w[0] = w[-1] = 0.5 * self.dt
        return w


def diff1(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Second-order first derivative: centered interior, one-sided ends."""
    v = np.moveaxis(np.asarray(values), axis, 0)
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - v[:-2]) / (2.0 * h)
    out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
    out[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * h)
    return np.moveaxis(out, 0, axis)


def diff2(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Second-order second derivative: centered interior, one-sided ends."""
    v = np.moveaxis(np.asarray(values), axis, 0)
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / h**2
    out[0] = (35.0 * v[0] - 104.0 * v[1] + 114.0 * v[2] - 56.0 * v[3]
              + 11.0 * v[4]) / (12.0 * h**2)
    out[-1] = (35.0 * v[-1] - 104.0 * v[-2] + 114.0 * v[-3] - 56.0 * v[-4]
               + 11.0 * v[-5]) / (12.0 * h**2)
    return np.moveaxis(out, 0, axis)
