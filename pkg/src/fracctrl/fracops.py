"""Temporal coupling weights for the fractional bilinear form.

For piecewise-constant test/trial functions on the slabs, the pairing of the
left-sided half derivative of a trial indicator with the right-sided half
derivative of a test indicator reduces, through the duality identity for
Riemann-Liouville operators, to second differences of w(s) = max(s,0)^(1-a):

    B[k][j] = [w(t_k - t_{j-1}) - w(t_k - t_j)
               - w(t_{k-1} - t_{j-1}) + w(t_{k-1} - t_j)] / Gamma(2-a).

This closed form is exact, lower triangular (indicators supported after slab
k do not couple), costs O(M^2) in total, and needs no singular quadrature.
The quadrature oracle below integrates the half-derivative products directly
and exists solely to certify the identity numerically.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .mesh import TemporalGrid

__all__ = [
    "TemporalCouplingMatrix",
    "KernelMoments",
    "OracleToleranceError",
    "assemble_coupling",
    "half_derivative_oracle",
    "source_moments",
]

# beyond this many slabs the triangle is not stored; rows are rebuilt from
# the closed form on demand to cap memory
ON_DEMAND_THRESHOLD = 2 ** 12

ORACLE_MAX_SLABS = 64
ORACLE_ABS_TOL = 1e-10


class OracleToleranceError(RuntimeError):
    """Quadrature could not certify the requested absolute tolerance."""


def _row(nodes: np.ndarray, exponent: float, inv_gamma: float, k: int) -> np.ndarray:
    """Entries B[k][1..k] of row k (slabs are 1-indexed)."""
    ak = np.zeros(k + 1)
    ak[:k] = (nodes[k] - nodes[:k]) ** exponent
    ak1 = np.zeros(k + 1)
    if k >= 2:
        ak1[: k - 1] = (nodes[k - 1] - nodes[: k - 1]) ** exponent
    return (ak[:k] - ak[1 : k + 1] - ak1[:k] + ak1[1 : k + 1]) * inv_gamma


@dataclass
class TemporalCouplingMatrix:
    """Lower-triangular coupling weights; stored packed or entry-on-demand.

    ``row(k)`` returns the k entries B[k][1..k].  Both modes evaluate the
    same closed form, so their results are bit-identical.
    """

    alpha: float
    grid: TemporalGrid
    stored: bool
    _buf: np.ndarray | None = field(default=None, repr=False)
    _offsets: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self._exponent = 1.0 - self.alpha
        self._inv_gamma = 1.0 / math.gamma(2.0 - self.alpha)

    def row(self, k: int) -> np.ndarray:
        if not 1 <= k <= self.grid.num_slabs:
            raise IndexError(f"slab index {k} out of range")
        if self.stored:
            off = self._offsets[k - 1]
            return self._buf[off : off + k]
        return _row(self.grid.nodes, self._exponent, self._inv_gamma, k)

    def entry(self, k: int, j: int) -> float:
        if j > k:
            return 0.0
        return float(self.row(k)[j - 1])

    def column_tail(self, j: int) -> np.ndarray:
        """Entries B[j..2M][j], the column below and including the diagonal."""
        K = self.grid.num_slabs
        if self.stored:
            return np.array([self._buf[self._offsets[k - 1] + j - 1] for k in range(j, K + 1)])
        t = self.grid.nodes
        e = self._exponent
        ks = np.arange(j, K + 1)
        w = lambda s: np.where(s > 0.0, s, 0.0) ** e
        vals = (w(t[ks] - t[j - 1]) - w(t[ks] - t[j])
                - w(t[ks - 1] - t[j - 1]) + w(t[ks - 1] - t[j]))
        return vals * self._inv_gamma

    def dense(self) -> np.ndarray:
        K = self.grid.num_slabs
        B = np.zeros((K, K))
        for k in range(1, K + 1):
            B[k - 1, :k] = self.row(k)
        return B

    def row_sums(self) -> np.ndarray:
        return np.array([self.row(k).sum() for k in range(1, self.grid.num_slabs + 1)])

    def dump_triangle(self, path) -> None:
        """Debug dump: packed triangle, row-major, little-endian float64."""
        with open(path, "wb") as fh:
            for k in range(1, self.grid.num_slabs + 1):
                fh.write(np.ascontiguousarray(self.row(k), dtype="<f8").tobytes())


def assemble_coupling(grid: TemporalGrid, alpha: float, mode: str = "auto") -> TemporalCouplingMatrix:
    """Assemble the coupling weights for the given grid and order.

    mode: "stored" packs the lower triangle (2M(2M+1)/2 floats), "ondemand"
    recomputes rows per access, "auto" stores up to 2M = 4096 slabs.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0,1), got {alpha}")
    if mode not in ("auto", "stored", "ondemand"):
        raise ValueError(f"unknown mode {mode!r}")
    K = grid.num_slabs
    stored = mode == "stored" or (mode == "auto" and K <= ON_DEMAND_THRESHOLD)
    mat = TemporalCouplingMatrix(alpha=float(alpha), grid=grid, stored=stored)
    if stored:
        offsets = (np.arange(K, dtype=np.int64) * np.arange(1, K + 1, dtype=np.int64)) // 2
        buf = np.empty(K * (K + 1) // 2)
        e = 1.0 - alpha
        inv_g = 1.0 / math.gamma(2.0 - alpha)
        for k in range(1, K + 1):
            buf[offsets[k - 1] : offsets[k - 1] + k] = _row(grid.nodes, e, inv_g, k)
        mat._buf = buf
        mat._offsets = offsets
    return mat


@dataclass(frozen=True)
class KernelMoments:
    """Slab integrals of the power kernel t^(-a)/Gamma(1-a): the forcing
    weights produced by a constant-in-time initial datum."""

    alpha: float
    grid: TemporalGrid
    values: np.ndarray = field(repr=False)

    def total(self) -> float:
        return float(self.values.sum())


def source_moments(grid: TemporalGrid, alpha: float) -> KernelMoments:
    """m_k = (t_k^(1-a) - t_{k-1}^(1-a)) / Gamma(2-a)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0,1), got {alpha}")
    e = 1.0 - alpha
    t = grid.nodes
    vals = (t[1:] ** e - t[:-1] ** e) / math.gamma(2.0 - alpha)
    return KernelMoments(alpha=float(alpha), grid=grid, values=vals)


def half_derivative_oracle(grid: TemporalGrid, alpha: float, j: int, k: int) -> float:
    """Numerically integrate the product of exact half derivatives of the
    slab indicators j (left-sided) and k (right-sided).

    Test-support operation for small grids; adaptive quadrature with the
    integration range split at every singular abscissa, absolute tolerance
    1e-10.  Independent of the closed-form assembly.
    """
    K = grid.num_slabs
    if K > ORACLE_MAX_SLABS:
        raise ValueError(f"oracle supports at most {ORACLE_MAX_SLABS} slabs, grid has {K}")
    if not (1 <= j <= K and 1 <= k <= K):
        raise IndexError(f"slab indices ({j}, {k}) out of range")
    if j > k:
        return 0.0
    a2 = 0.5 * alpha
    inv_g2 = 1.0 / math.gamma(1.0 - a2) ** 2
    t = grid.nodes
    tjm, tj = t[j - 1], t[j]
    tkm, tk = t[k - 1], t[k]

    def integrand(s: float) -> float:
        left = (s - tjm) ** (-a2) if s > tjm else 0.0
        if s > tj:
            left -= (s - tj) ** (-a2)
        right = (tk - s) ** (-a2) if s < tk else 0.0
        if s < tkm:
            right -= (tkm - s) ** (-a2)
        return left * right * inv_g2

    # the product is supported on (t_{j-1}, t_k); split at interior kinks
    pts = sorted({tjm, tj, tkm, tk})
    pts = [p for p in pts if tjm <= p <= tk]
    total = 0.0
    err_budget = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for a_, b_ in zip(pts[:-1], pts[1:]):
            if b_ <= a_:
                continue
            val, err = quad(integrand, a_, b_, epsabs=ORACLE_ABS_TOL / 8.0,
                            epsrel=1e-12, limit=300)
            total += val
            err_budget += err
    if err_budget > ORACLE_ABS_TOL:
        raise OracleToleranceError(
            f"quadrature error estimate {err_budget:.2e} exceeds {ORACLE_ABS_TOL:.0e} "
            f"for slabs ({j}, {k})")
    return total
