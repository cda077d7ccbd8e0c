"""Discrete solution operators by causal block substitution.

A space-time field is constant in time on each slab and piecewise linear in
space, so testing the fractional form against slab-k indicators times hat
functions turns the forward problem into a lower-triangular block system:

    (B[k][k] M + tau_k K) Y_k = src_k - sum_{j<k} B[k][j] M Y_j,

marched for k = 1..2M.  The adjoint operator transposes the temporal
coupling and marches backward.  Per-slab operators are symmetric positive
definite since the coupling diagonal is positive.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .fem import TriDiagonalOperator, NodalFunction, assemble_mass, load_descriptor
from .fracops import KernelMoments, TemporalCouplingMatrix
from .mesh import SpatialGrid, TemporalGrid
from .problem import FunctionDescriptor
from scipy.linalg import solveh_banded

__all__ = [
    "SpaceTimeField",
    "SourceTerm",
    "apply_forward",
    "apply_adjoint",
    "state_source",
    "adjoint_source",
    "check_adjoint_identity",
    "field_inner",
    "export_field_csv",
]


@dataclass(frozen=True)
class SpaceTimeField:
    """Per-slab interior nodal coefficients: shape (2M, n-1)."""

    tgrid: TemporalGrid
    xgrid: SpatialGrid
    values: np.ndarray = field(repr=False)

    def slab(self, k: int) -> NodalFunction:
        return NodalFunction(self.xgrid, self.values[k - 1])


@dataclass(frozen=True)
class SourceTerm:
    """Time-integrated loads per slab: src_k[i] = int_slab <g(t), phi_i> dt."""

    tgrid: TemporalGrid
    xgrid: SpatialGrid
    values: np.ndarray = field(repr=False)


def _check_grids(*objs) -> tuple[TemporalGrid, SpatialGrid]:
    tg, xg = objs[0].tgrid, objs[0].xgrid
    for o in objs[1:]:
        if o.tgrid is not tg and not np.array_equal(o.tgrid.nodes, tg.nodes):
            raise ValueError("temporal grids do not match")
        if o.xgrid is not xg and o.xgrid.n != xg.n:
            raise ValueError("spatial grids do not match")
    return tg, xg


def _slab_operator_banded(bkk: float, tau: float, mass: TriDiagonalOperator,
                          stiffness: TriDiagonalOperator) -> np.ndarray:
    m = mass.diag.size
    ab = np.zeros((2, m))
    ab[0, 1:] = bkk * mass.sup + tau * stiffness.sup
    ab[1, :] = bkk * mass.diag + tau * stiffness.diag
    return ab


def apply_forward(B: TemporalCouplingMatrix, mass: TriDiagonalOperator,
                  stiffness: TriDiagonalOperator, src: SourceTerm) -> SpaceTimeField:
    """March the forward operator: solve slab by slab in causal order,
    accumulating the temporal history through the coupling row."""
    tg, xg = src.tgrid, src.xgrid
    if B.grid.num_slabs != tg.num_slabs:
        raise ValueError("coupling matrix and source live on different grids")
    K = tg.num_slabs
    m = xg.num_interior
    tau = tg.widths
    Y = np.empty((K, m))
    hist = np.empty((K, m))  # mass @ Y_j, kept for the history sums
    for k in range(1, K + 1):
        row = B.row(k)
        rhs = src.values[k - 1].copy()
        if k > 1:
            rhs -= row[: k - 1] @ hist[: k - 1]
        ab = _slab_operator_banded(row[k - 1], tau[k - 1], mass, stiffness)
        Y[k - 1] = solveh_banded(ab, rhs, lower=False)
        hist[k - 1] = mass.apply(Y[k - 1])
    return SpaceTimeField(tgrid=tg, xgrid=xg, values=Y)


def apply_adjoint(B: TemporalCouplingMatrix, mass: TriDiagonalOperator,
                  stiffness: TriDiagonalOperator, src: SourceTerm) -> SpaceTimeField:
    """March the adjoint operator backward with the transposed coupling."""
    tg, xg = src.tgrid, src.xgrid
    if B.grid.num_slabs != tg.num_slabs:
        raise ValueError("coupling matrix and source live on different grids")
    K = tg.num_slabs
    m = xg.num_interior
    tau = tg.widths
    P = np.empty((K, m))
    hist = np.empty((K, m))
    for k in range(K, 0, -1):
        col = B.column_tail(k)  # entries B[k..2M][k]
        rhs = src.values[k - 1].copy()
        if k < K:
            rhs -= col[1:] @ hist[k:]
        ab = _slab_operator_banded(col[0], tau[k - 1], mass, stiffness)
        P[k - 1] = solveh_banded(ab, rhs, lower=False)
        hist[k - 1] = mass.apply(P[k - 1])
    return SpaceTimeField(tgrid=tg, xgrid=xg, values=P)


def state_source(U, y0_proj: NodalFunction | None, moments: KernelMoments,
                 mass: TriDiagonalOperator) -> SourceTerm:
    """Right side of the state solve: slab loads of the control plus the
    kernel-moment forcing of the (projected) initial datum."""
    tg = moments.grid
    if U is None:
        raise ValueError("control term must be a field (possibly zero-valued)")
    if hasattr(U, "spatial_loads"):  # kink-aware control
        xg = U.xgrid
        vals = tg.widths[:, None] * U.spatial_loads()
    else:  # member of the discrete space: loads are exact mass actions
        xg = U.xgrid
        if U.tgrid.num_slabs != tg.num_slabs:
            raise ValueError("control and moments live on different grids")
        vals = tg.widths[:, None] * mass.apply(U.values)
    if y0_proj is not None:
        vals = vals + moments.values[:, None] * mass.apply(y0_proj.coeffs)
    return SourceTerm(tgrid=tg, xgrid=xg, values=vals)


def adjoint_source(Y: SpaceTimeField, yd: FunctionDescriptor | None) -> SourceTerm:
    """Right side of the co-state solve: slab loads of the misfit Y - yd
    for a time-constant target."""
    vals = assemble_mass(Y.xgrid).apply(Y.values)
    if yd is not None:
        vals = vals - load_descriptor(Y.xgrid, yd)
    return SourceTerm(tgrid=Y.tgrid, xgrid=Y.xgrid,
                      values=Y.tgrid.widths[:, None] * vals)


def field_inner(a: SpaceTimeField, b: SpaceTimeField, mass: TriDiagonalOperator) -> float:
    """Space-time inner product sum_k tau_k a_k^T M b_k."""
    tg, _ = _check_grids(a, b)
    return float(np.sum(tg.widths * np.einsum("ki,ki->k", a.values, mass.apply(b.values))))


def check_adjoint_identity(B: TemporalCouplingMatrix, mass: TriDiagonalOperator,
                           stiffness: TriDiagonalOperator,
                           g1: SpaceTimeField, g2: SpaceTimeField) -> float:
    """|(S g1, g2) - (g1, S* g2)|, an exact algebraic identity up to roundoff."""
    tg, xg = _check_grids(g1, g2)
    src1 = SourceTerm(tg, xg, tg.widths[:, None] * mass.apply(g1.values))
    src2 = SourceTerm(tg, xg, tg.widths[:, None] * mass.apply(g2.values))
    a = field_inner(apply_forward(B, mass, stiffness, src1), g2, mass)
    b = field_inner(g1, apply_adjoint(B, mass, stiffness, src2), mass)
    return abs(a - b)


def export_field_csv(fieldobj: SpaceTimeField, path) -> None:
    """Dump as (t_k, x_i, value) rows; boundary values are written as zero."""
    tg, xg = fieldobj.tgrid, fieldobj.xgrid
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "value"])
        for k in range(tg.num_slabs):
            tk = float(tg.nodes[k + 1])
            vals = np.zeros(xg.n + 1)
            vals[1:-1] = fieldobj.values[k]
            for x, v in zip(xg.nodes, vals):
                w.writerow([repr(tk), repr(float(x)), repr(float(v))])
