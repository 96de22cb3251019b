"""Tridiagonal solvers for the chain's backward-Euler system.

``thomas`` is a plain Thomas algorithm kept as an independent reference.
``TridiagonalLU`` factors once with LAPACK ``gttrf`` and then solves each time
step with ``gttrs``; for the diagonally dominant chain matrix no row swaps
occur, so this is the same elimination as Thomas, only compiled.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import lapack


def thomas(lower, diag, upper, rhs):
    """Solve a tridiagonal system without pivoting.

    ``lower[i]`` multiplies x[i] in row i+1 and ``upper[i]`` multiplies x[i+1]
    in row i (both length n-1).
    """
    diag = np.asarray(diag, dtype=float)
    n = diag.size
    c = np.empty(max(n - 1, 0))
    d = np.empty(n)
    b = np.asarray(rhs, dtype=float)
    denom = diag[0]
    if n > 1:
        c[0] = upper[0] / denom
    d[0] = b[0] / denom
    for i in range(1, n):
        denom = diag[i] - lower[i - 1] * c[i - 1]
        if i < n - 1:
            c[i] = upper[i] / denom
        d[i] = (b[i] - lower[i - 1] * d[i - 1]) / denom
    x = np.empty(n)
    x[-1] = d[-1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return x


class TridiagonalLU:
    """Factor a real tridiagonal matrix once, solve many right-hand sides."""

    def __init__(self, lower, diag, upper):
        diag = np.array(diag, dtype=float)
        if diag.size < 3:
            # the scipy gttrf wrapper rejects n < 3 (empty du2); Thomas is trivial here
            if np.any(diag == 0):
                raise np.linalg.LinAlgError("zero pivot in tiny tridiagonal system")
            self._small = (np.array(lower, dtype=float), diag, np.array(upper, dtype=float))
            self.pivoted = False
            return
        self._small = None
        dl, d, du, du2, ipiv, info = lapack.dgttrf(
            np.array(lower, dtype=float), diag, np.array(upper, dtype=float))
        if info != 0:
            raise np.linalg.LinAlgError(f"singular tridiagonal matrix (gttrf info={info})")
        self._factors = (dl, d, du, du2, ipiv)
        self.pivoted = bool(np.any(ipiv != np.arange(1, len(d) + 1)))

    def solve(self, rhs):
        if self._small is not None:
            return thomas(*self._small, rhs)
        x, info = lapack.dgttrs(*self._factors, rhs)
        if info != 0:
            raise np.linalg.LinAlgError(f"gttrs failed (info={info})")
        return x
