"""Linear finite elements on the uniform Dirichlet grid.

Operators act on interior nodal coefficients only (boundary values are
eliminated), so mass and stiffness are symmetric tridiagonal.  Loads for the
power-law family c x^a (1-x) are assembled from closed-form monomial moments
because fixed-order Gauss rules lose accuracy at the x^a singularity; smooth
sine data uses per-element Gauss quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solveh_banded

from .mesh import SpatialGrid, merge_breakpoints
from .problem import FunctionDescriptor, PowerLaw, SineCombo, TimeConstant, Zero

__all__ = [
    "TriDiagonalOperator",
    "NodalFunction",
    "assemble_mass",
    "assemble_stiffness",
    "load_powerlaw",
    "load_descriptor",
    "l2_project",
    "solve_tridiagonal",
    "cross_grid_l2",
    "pwl_l2_diff_sq",
]

# 8-point Gauss-Legendre on (-1, 1)
_G8_X = np.array([
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
    -0.1834346424956498, 0.1834346424956498, 0.5255324099163290,
    0.7966664774136267, 0.9602898564975363,
])
_G8_W = np.array([
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
    0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
    0.2223810344533745, 0.1012285362903763,
])


@dataclass(frozen=True)
class TriDiagonalOperator:
    """Symmetric tridiagonal operator over interior dofs."""

    sub: np.ndarray = field(repr=False)
    diag: np.ndarray = field(repr=False)
    sup: np.ndarray = field(repr=False)

    def apply(self, v: np.ndarray) -> np.ndarray:
        out = self.diag * v
        if v.ndim == 1:
            out[:-1] += self.sup * v[1:]
            out[1:] += self.sub * v[:-1]
        else:  # rows of v are vectors
            out[:, :-1] += self.sup * v[:, 1:]
            out[:, 1:] += self.sub * v[:, :-1]
        return out

    def quadratic_form(self, v: np.ndarray) -> float:
        return float(v @ self.apply(v))


@dataclass(frozen=True)
class NodalFunction:
    """Element of the Dirichlet finite element space: interior coefficients."""

    grid: SpatialGrid
    coeffs: np.ndarray = field(repr=False)

    def with_boundary(self) -> np.ndarray:
        v = np.zeros(self.grid.n + 1)
        v[1:-1] = self.coeffs
        return v


def assemble_mass(grid: SpatialGrid) -> TriDiagonalOperator:
    h = grid.h
    m = grid.num_interior
    return TriDiagonalOperator(
        sub=np.full(m - 1, h / 6.0),
        diag=np.full(m, 2.0 * h / 3.0),
        sup=np.full(m - 1, h / 6.0),
    )


def assemble_stiffness(grid: SpatialGrid) -> TriDiagonalOperator:
    h = grid.h
    m = grid.num_interior
    return TriDiagonalOperator(
        sub=np.full(m - 1, -1.0 / h),
        diag=np.full(m, 2.0 / h),
        sup=np.full(m - 1, -1.0 / h),
    )


def _moments(s: float, p: np.ndarray, q: np.ndarray) -> np.ndarray:
    # int_p^q x^s dx with s > -1
    return (q ** (s + 1.0) - p ** (s + 1.0)) / (s + 1.0)


def load_powerlaw(grid: SpatialGrid, c: float, a: float) -> np.ndarray:
    """Exact loads int c x^a (1-x) phi_i dx from monomial moments."""
    if a <= -1.0:
        raise ValueError(f"exponent must exceed -1 for integrability, got {a}")
    if c == 0.0:
        return np.zeros(grid.num_interior)
    h = grid.h
    x = grid.nodes
    i = np.arange(1, grid.n)
    xl, xm, xr = x[i - 1], x[i], x[i + 1]
    # rising piece: (1-x)(x - xl) = -x^2 + (1+xl) x - xl
    left = (-_moments(a + 2.0, xl, xm)
            + (1.0 + xl) * _moments(a + 1.0, xl, xm)
            - xl * _moments(a, xl, xm))
    # falling piece: (1-x)(xr - x) = x^2 - (1+xr) x + xr
    right = (_moments(a + 2.0, xm, xr)
             - (1.0 + xr) * _moments(a + 1.0, xm, xr)
             + xr * _moments(a, xm, xr))
    return (c / h) * (left + right)


def _load_sine(grid: SpatialGrid, k: int, c: float) -> np.ndarray:
    # int c sin(k pi x) phi_i dx by 8-point Gauss per element (exact beyond
    # the needed order for the smooth modes in play)
    x = grid.nodes
    mid = 0.5 * (x[:-1] + x[1:])
    half = 0.5 * grid.h
    pts = mid[:, None] + half * _G8_X[None, :]          # (n, 8)
    w = half * _G8_W[None, :]
    fvals = c * np.sin(k * math.pi * pts)
    rising = (pts - x[:-1, None]) / grid.h
    out = np.zeros(grid.n + 1)
    out[1:] += np.sum(w * fvals * rising, axis=1)       # phi at right node
    out[:-1] += np.sum(w * fvals * (1.0 - rising), axis=1)
    return out[1:-1]


def load_descriptor(grid: SpatialGrid, f: FunctionDescriptor) -> np.ndarray:
    if isinstance(f, TimeConstant):
        f = f.profile
    if isinstance(f, PowerLaw):
        return load_powerlaw(grid, f.c, f.a)
    if isinstance(f, SineCombo):
        out = np.zeros(grid.num_interior)
        for k, c in f.terms:
            out += _load_sine(grid, k, c)
        return out
    if isinstance(f, Zero):
        return np.zeros(grid.num_interior)
    raise ValueError(f"cannot assemble loads for descriptor {f!r}")


def solve_tridiagonal(op: TriDiagonalOperator, rhs: np.ndarray) -> np.ndarray:
    """Solve op x = rhs for a symmetric positive definite operator."""
    m = op.diag.size
    ab = np.zeros((2, m))
    ab[0, 1:] = op.sup
    ab[1, :] = op.diag
    return solveh_banded(ab, rhs, lower=False)


def l2_project(grid: SpatialGrid, f: FunctionDescriptor) -> NodalFunction:
    """L2-orthogonal projection onto the finite element space."""
    mass = assemble_mass(grid)
    return NodalFunction(grid, solve_tridiagonal(mass, load_descriptor(grid, f)))


def pwl_l2_diff_sq(xa: np.ndarray, va: np.ndarray, xb: np.ndarray, vb: np.ndarray) -> float:
    """Exact squared L2 distance between two piecewise-linear functions given
    as breakpoints/values (endpoints included, equal spans).

    On each merged interval the difference is linear, so
    int d^2 = w (dl^2 + dl dr + dr^2)/3 is exact.
    """
    xs = merge_breakpoints(xa, xb)
    da = np.interp(xs, xa, va) - np.interp(xs, xb, vb)
    dl, dr = da[:-1], da[1:]
    return float(np.sum(np.diff(xs) * (dl * dl + dl * dr + dr * dr)) / 3.0)


def cross_grid_l2(fA: NodalFunction, fB: NodalFunction) -> float:
    """Exact L2(0,1) distance between finite element functions living on
    different uniform grids."""
    return math.sqrt(max(0.0, pwl_l2_diff_sq(
        fA.grid.nodes, fA.with_boundary(), fB.grid.nodes, fB.with_boundary())))
