"""Dense linear algebra for small real symmetric positive-definite matrices.

Everything the detectors need from an SPD matrix is one of three things:
a quadratic form x' A^{-1} y, a log-determinant, or the log-determinant of
a rank-two update A + uu' + ww'.  All of them are served off a single
cached Cholesky factorization; the inverse is never formed explicitly.

Matrices here are small (N <= 64 in practice, N = 8 in the reference
scenarios), so a dense lower-triangular factorization is both the fastest
and the most accurate option.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DimensionMismatch, NotPositiveDefinite

# Pivots below this fraction of the largest diagonal entry are treated as
# numerically zero and the matrix is rejected.
PIVOT_RTOL = 1e-12


class SpdMatrix:
    """An immutable N x N real SPD matrix with a cached Cholesky factor.

    Construction symmetrizes the input as (A + A')/2, factors it once, and
    fails with :class:`NotPositiveDefinite` if any Cholesky pivot is not
    strictly positive (relative to the largest diagonal entry).  Instances
    are safe to share between threads: nothing is mutated after __init__.
    """

    __slots__ = ("dim", "entries", "chol")

    def __init__(self, entries):
        a = np.asarray(entries, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise NotPositiveDefinite("matrix has non-finite entries")
        a = (a + a.T) / 2.0
        a.setflags(write=False)
        self.dim = a.shape[0]
        self.entries = a
        self.chol = self._factor(a)
        self.chol.setflags(write=False)

    @staticmethod
    def _factor(a):
        max_diag = float(np.max(np.diagonal(a)))
        if max_diag <= 0.0:
            raise NotPositiveDefinite("no positive diagonal entry")
        try:
            low = np.linalg.cholesky(a)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefinite(str(exc)) from exc
        # Cholesky pivots are the squared diagonal entries of L.
        pivots = np.diagonal(low) ** 2
        if np.min(pivots) <= PIVOT_RTOL * max_diag:
            raise NotPositiveDefinite(
                f"pivot {np.min(pivots):.3e} below tolerance "
                f"{PIVOT_RTOL * max_diag:.3e}"
            )
        return low

    def solve(self, b):
        """Return A^{-1} b via two triangular solves (b may be a matrix)."""
        b = np.asarray(b, dtype=np.float64)
        if b.shape[0] != self.dim:
            raise DimensionMismatch(
                f"right-hand side has leading dimension {b.shape[0]}, "
                f"matrix is {self.dim}x{self.dim}"
            )
        y = solve_triangular(self.chol, b, lower=True)
        return solve_triangular(self.chol, y, lower=True, trans="T")

    def half_solve(self, b):
        """Return L^{-1} b, i.e. the whitened version of b."""
        b = np.asarray(b, dtype=np.float64)
        if b.shape[0] != self.dim:
            raise DimensionMismatch(
                f"right-hand side has leading dimension {b.shape[0]}, "
                f"matrix is {self.dim}x{self.dim}"
            )
        return solve_triangular(self.chol, b, lower=True)


def spd_from_entries(entries) -> SpdMatrix:
    """Build an :class:`SpdMatrix` from a square array (symmetrizing it)."""
    return SpdMatrix(entries)


def quad_form(a: SpdMatrix, x, y) -> float:
    """Quadratic form x' A^{-1} y computed through the Cholesky factor.

    Uses x' A^{-1} y = (L^{-1} x)' (L^{-1} y); no inverse is materialized.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != (a.dim,) or y.shape != (a.dim,):
        raise DimensionMismatch(
            f"vectors of shape {x.shape}, {y.shape} against {a.dim}x{a.dim} matrix"
        )
    wx = a.half_solve(x)
    wy = wx if y is x else a.half_solve(y)
    return float(wx @ wy)


def logdet(a: SpdMatrix) -> float:
    """ln det(A) from the cached factor (sum of log pivots)."""
    return 2.0 * float(np.sum(np.log(np.diagonal(a.chol))))


def rank_two_update_logdet(a: SpdMatrix, u, w) -> float:
    """ln det(A + uu' + ww') without assembling the updated matrix.

    Uses the determinant identity
    det(A + uu' + ww') = det(A) * [(1 + u'A^{-1}u)(1 + w'A^{-1}w) - (u'A^{-1}w)^2],
    so only two triangular solves against the cached factor are needed.
    """
    u = np.asarray(u, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if u.shape != (a.dim,) or w.shape != (a.dim,):
        raise DimensionMismatch(
            f"update vectors of shape {u.shape}, {w.shape} against "
            f"{a.dim}x{a.dim} matrix"
        )
    wu = a.half_solve(u)
    ww = a.half_solve(w)
    quu = float(wu @ wu)
    qww = float(ww @ ww)
    quw = float(wu @ ww)
    corr = (1.0 + quu) * (1.0 + qww) - quw * quw
    return logdet(a) + math.log(corr)
