"""Shared finite-difference stencils and quadrature helpers.

Everything here is second-order accurate on uniform grids: centered
stencils in the interior, one-sided three/four-point formulas at the
ends. The z-ODE sweep is the single trapezoidal integrator used by the
marching solver, the initial-slice constraint, and the series oracle,
so their results are comparable like for like.
"""

import numpy as np

from .errors import DomainError


def d1(values, dx, axis=-1):
    """First derivative, centered interior, one-sided second order at ends."""
    return np.gradient(values, dx, axis=axis, edge_order=2)


def d2(values, dx, axis=-1):
    """Second derivative, centered interior, four-point one-sided at ends."""
    a = np.moveaxis(np.asarray(values, dtype=float), axis, -1)
    if a.shape[-1] < 4:
        raise DomainError("second derivative needs at least 4 points per axis")
    out = np.empty_like(a)
    out[..., 1:-1] = a[..., 2:] - 2.0 * a[..., 1:-1] + a[..., :-2]
    out[..., 0] = 2.0 * a[..., 0] - 5.0 * a[..., 1] + 4.0 * a[..., 2] - a[..., 3]
    out[..., -1] = 2.0 * a[..., -1] - 5.0 * a[..., -2] + 4.0 * a[..., -3] - a[..., -4]
    out /= dx * dx
    return np.moveaxis(out, -1, axis)


def d_mixed(values, dx0, dx1):
    """Mixed second derivative d^2/dx0 dx1 of a 2D array (rows x cols)."""
    return d1(d1(values, dx1, axis=1), dx0, axis=0)


def trapezoid_weights(n, dx):
    """Composite-trapezoid quadrature weights on n uniform points."""
    w = np.full(n, dx)
    w[0] = w[-1] = 0.5 * dx
    return w


def integrate_z_ode(c, rhs, w_end, dz):
    """Sweep the linear ODE 2 W' + c W = rhs from the last node down to the first.

    `c` and `rhs` are arrays on the z-grid, `w_end` the value at z[-1].
    Trapezoidal (Crank-Nicolson) in each cell, solved as a linear
    recurrence with a vectorized suffix scan.
    """
    c = np.asarray(c, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    n = c.shape[-1]
    half = 0.5 * dz
    alpha = 2.0 + half * c
    beta = 2.0 - half * c
    if np.any(np.abs(beta) < 1e-12):
        raise DomainError("z-ODE sweep singular: refine the grid (|2 - dz*c/2| ~ 0)")
    # W[j] = A[j] W[j+1] + B[j]
    A = alpha[1:] / beta[:-1]
    B = -half * (rhs[:-1] + rhs[1:]) / beta[:-1]
    S = np.cumprod(A[::-1])[::-1]          # suffix products of A
    Q = np.cumsum((B / S)[::-1])[::-1]     # suffix sums of B/S
    w = np.empty(n)
    w[-1] = w_end
    w[:-1] = S * (w_end + Q)
    return w


def refine_grid_counts(n, levels):
    """Point counts for `levels` grids doubling the cell count (nodes nest)."""
    return [(n - 1) * 2**k + 1 for k in range(levels)]


def fitted_order(errors):
    """Least-squares slope of log2(error) against refinement level."""
    e = np.asarray(errors, dtype=float)
    lev = np.arange(len(e))
    return float(-np.polyfit(lev, np.log2(e), 1)[0])
