"""JIT-compiled inner loops for the adapted Riemann sums.

The stopping-time scan is inherently sequential (each trigger moves the
anchor), so it lives here as a numba kernel; everything above it stays in
plain numpy.  For step paths the scan over grid times is exact: between grid
times the integrand cannot move, hence the hitting inf is attained on the
grid.
"""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = ["stopping_scan", "level_sum_scan", "left_riemann_stieltjes"]


@njit(cache=False, nogil=True)
def stopping_scan(z: np.ndarray, eps: float, n_times: int) -> np.ndarray:
    """Indices of the stopping times tau_i on a scalar value array.

    tau_0 = index 0; thereafter the first index strictly after the previous
    anchor where |z[j] - z[anchor]| >= eps (ties count as crossings).  Only the
    first ``n_times`` entries of z are scanned.
    """
    out = np.empty(n_times, dtype=np.int64)
    out[0] = 0
    m = 1
    anchor = z[0]
    for j in range(1, n_times):
        if abs(z[j] - anchor) >= eps:
            out[m] = j
            m += 1
            anchor = z[j]
    return out[:m]


@njit(cache=False, nogil=True)
def level_sum_scan(z: np.ndarray, x: np.ndarray, eps: float) -> np.ndarray:
    """Adapted Riemann sum I^n(z, x) on the shared grid of z and x.

    I(t) = z(0) x(0) + sum_i z(tau_i) (x(tau_{i+1} ^ t) - x(tau_i ^ t)) with
    the tau_i from stopping_scan; evaluated at every grid index in one pass.
    """
    n = z.shape[0]
    out = np.empty(n, dtype=np.float64)
    acc = z[0] * x[0]
    z_anchor = z[0]
    x_anchor = x[0]
    out[0] = acc
    for j in range(1, n):
        if abs(z[j] - z_anchor) >= eps:
            acc += z_anchor * (x[j] - x_anchor)
            z_anchor = z[j]
            x_anchor = x[j]
            out[j] = acc
        else:
            out[j] = acc + z_anchor * (x[j] - x_anchor)
    return out


@njit(cache=False, nogil=True)
def left_riemann_stieltjes(z: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Running sum z(0)x(0) + sum_{k<=j} z[k-1] (x[k] - x[k-1]) on a shared grid.

    The bounded-variation / fine-grid oracle integral of z_- against dx.
    """
    n = z.shape[0]
    out = np.empty(n, dtype=np.float64)
    acc = z[0] * x[0]
    out[0] = acc
    for j in range(1, n):
        acc += z[j - 1] * (x[j] - x[j - 1])
        out[j] = acc
    return out
