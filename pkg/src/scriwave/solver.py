"""Marching solver for the null-timelike boundary problem per mode.

Data: v = phi on the null slice tau = 0, v = psi on the timelike
surface z = z0. The march advances in tau; at each step the rate
W = v_tau satisfies a linear ODE in z obtained by restricting the
equation to the current slice,

    2 W_z + c_tau W = f - (spatial operator applied to v),

integrated from z = z0 (where W = psi') inward to z = 0. No condition
is imposed at z = 0: the z^2 V coefficient degenerates there and the
march is well-posed without one; the solution's z = 0 column is the
radiation field. The step uses a trapezoidal predictor-corrector (one
corrector pass by default), second order in both directions. The
default time step dtau = dz is an engineering choice validated
empirically; an instability detector guards it.
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import CornerCompatibilityError, DomainError, InstabilityError
from .numerics import d1, d2, fitted_order, integrate_z_ode, refine_grid_counts

GROWTH_LIMIT = 1e6
SATURATION_FLOOR = 1e-11  # relative; march roundoff accumulates with step count


@dataclass(frozen=True)
class Grid:
    """Uniform (tau, z) product grid; z runs from 0 to z0 inclusive."""

    T: float
    z0: float
    n_tau: int
    n_z: int

    def __post_init__(self):
        if self.n_tau < 3 or self.n_z < 3:
            raise DomainError(f"grid needs >= 3 points per axis, got {self.n_tau} x {self.n_z}")
        if not (self.T > 0 and self.z0 > 0):
            raise DomainError(f"grid extents must be positive, got T={self.T}, z0={self.z0}")

    @property
    def dtau(self):
        return self.T / (self.n_tau - 1)

    @property
    def dz(self):
        return self.z0 / (self.n_z - 1)

    def tau(self):
        return np.linspace(0.0, self.T, self.n_tau)

    def z(self):
        return np.linspace(0.0, self.z0, self.n_z)

    def refined(self):
        """Grid with doubled cell counts; nodes nest."""
        return Grid(self.T, self.z0, 2 * self.n_tau - 1, 2 * self.n_z - 1)


@dataclass(frozen=True)
class ModeField:
    """Mode amplitude v[n, j] at (tau_n, z_j) for harmonic labels (l, m)."""

    l: int
    m: int
    values: np.ndarray
    grid: Grid

    def __post_init__(self):
        if self.values.shape != (self.grid.n_tau, self.grid.n_z):
            raise DomainError(
                f"field shape {self.values.shape} does not match grid "
                f"{(self.grid.n_tau, self.grid.n_z)}"
            )

    def like(self, values):
        return replace(self, values=values)


@dataclass(frozen=True)
class BoundaryData:
    """phi(z) on the null slice, psi(tau) on the timelike surface.

    `f` is an optional interior source f(tau, z) used by tests; the
    public CLI drives the homogeneous problem only.
    """

    phi: callable
    psi: callable
    f: callable = None

    def scaled(self, alpha):
        f = None if self.f is None else (lambda tau, z: alpha * self.f(tau, z))
        return BoundaryData(
            phi=lambda z: alpha * self.phi(z),
            psi=lambda tau: alpha * self.psi(tau),
            f=f,
        )


def check_compatibility(data, z0, tol=1e-10):
    """Corner constraint phi(z0) = psi(0); returns the mismatch on success."""
    mismatch = abs(float(data.phi(z0)) - float(data.psi(0.0)))
    if mismatch > tol:
        raise CornerCompatibilityError(mismatch, tol)
    return mismatch


def _spatial_operator(coeffs, v_row, z, dz, tau, lfac):
    """c_zz v_zz + c_z v_z + (c_0 - l(l+1) s) v on one tau-slice."""
    v_zz = d2(v_row, dz)
    v_z = d1(v_row, dz)
    return (
        coeffs.c_zz(tau, z) * v_zz
        + coeffs.c_z(tau, z) * v_z
        + (coeffs.c_0(tau, z) - lfac * coeffs.s(z)) * v_row
    )


def initial_slice_constraint(coeffs, phi, psi_rate, grid, f=None):
    """Rate W0 = v_tau on the initial slice, fixed by the equation itself.

    Restricting L v = f to tau = 0 leaves a linear z-ODE for W0 with
    the boundary rate psi'(0) as initial value at z0; trapezoidal
    integration inward on the grid.
    """
    z = grid.z()
    phi_row = np.asarray(phi(z), dtype=float) + np.zeros_like(z)
    lfac = coeffs.angular_factor()
    rhs = -_spatial_operator(coeffs, phi_row, z, grid.dz, 0.0, lfac)
    if f is not None:
        rhs = rhs + f(0.0, z)
    c = np.asarray(coeffs.c_tau(0.0, z), float) + np.zeros_like(z)
    return integrate_z_ode(c, rhs, float(psi_rate), grid.dz)


def solve(coeffs, data, grid, n_corrector=1, growth_limit=GROWTH_LIMIT,
          compatibility_tol=1e-10):
    """March the mode problem over the grid and return the field.

    Each step: freeze coefficients at the half step, sweep the rate ODE
    from z0 (rate = centered difference of psi across the step), update
    v, then one corrector pass with the trapezoidal average of v.
    """
    check_compatibility(data, grid.z0, tol=compatibility_tol)
    tau = grid.tau()
    z = grid.z()
    dz, dtau = grid.dz, grid.dtau
    lfac = coeffs.angular_factor()

    psi_vals = np.asarray(data.psi(tau), dtype=float) + np.zeros_like(tau)
    v = np.empty((grid.n_tau, grid.n_z))
    v[0] = np.asarray(data.phi(z), dtype=float) + np.zeros_like(z)

    scale = max(float(np.max(np.abs(v[0]))), float(np.max(np.abs(psi_vals))), 1.0)

    for n in range(grid.n_tau - 1):
        t_half = 0.5 * (tau[n] + tau[n + 1])
        rate_end = (psi_vals[n + 1] - psi_vals[n]) / dtau
        c_tau_row = np.asarray(coeffs.c_tau(t_half, z), float) + np.zeros_like(z)
        f_row = data.f(t_half, z) if data.f is not None else 0.0

        v_half = v[n]
        for _ in range(1 + n_corrector):
            rhs = f_row - _spatial_operator(coeffs, v_half, z, dz, t_half, lfac)
            w = integrate_z_ode(c_tau_row, rhs, rate_end, dz)
            v_new = v[n] + dtau * w
            v_new[-1] = psi_vals[n + 1]
            v_half = 0.5 * (v[n] + v_new)

        if not np.all(np.isfinite(v_new)):
            raise InstabilityError(n + 1, tau[n + 1], "non-finite value")
        if np.max(np.abs(v_new)) > growth_limit * scale:
            raise InstabilityError(n + 1, tau[n + 1], f"growth beyond {growth_limit:g} x data scale")
        v[n + 1] = v_new

    return ModeField(l=coeffs.l, m=0, values=v, grid=grid)


@dataclass(frozen=True)
class ConvergenceReport:
    """Errors and fitted orders across nested grid refinements."""

    grids: tuple           # (n_tau, n_z) per level
    errors: tuple          # max-norm error per comparison
    orders: tuple          # log2 ratios between consecutive errors
    mode: str              # "exact" or "richardson"
    saturated: bool        # all errors at roundoff; orders not meaningful
    order_fit: float       # least-squares slope, nan when saturated

    def as_dict(self):
        return {
            "grids": [list(g) for g in self.grids],
            "errors": list(self.errors),
            "orders": list(self.orders),
            "mode": self.mode,
            "saturated": self.saturated,
            "order_fit": self.order_fit,
        }


def convergence_study(coeffs, data, base_grid, levels, exact=None, n_corrector=1):
    """Solve on doubled grids and report observed convergence orders.

    With `exact` (callable of tau, z) the error is against it;
    otherwise Richardson self-differences on nested nodes. Errors at
    roundoff are flagged saturated instead of fitted.
    """
    if levels < 2:
        raise DomainError("convergence study needs at least 2 levels")
    counts = refine_grid_counts(base_grid.n_tau, levels)
    counts_z = refine_grid_counts(base_grid.n_z, levels)
    fields = []
    grids = []
    for nt, nz in zip(counts, counts_z):
        g = Grid(base_grid.T, base_grid.z0, nt, nz)
        fields.append(solve(coeffs, data, g, n_corrector=n_corrector))
        grids.append((nt, nz))

    scale = max(max(np.max(np.abs(f.values)) for f in fields), 1e-300)
    if exact is not None:
        errors = []
        for f in fields:
            tt, zz = np.meshgrid(f.grid.tau(), f.grid.z(), indexing="ij")
            errors.append(float(np.max(np.abs(f.values - exact(tt, zz)))))
        mode = "exact"
    else:
        errors = []
        for lo, hi in zip(fields[:-1], fields[1:]):
            errors.append(float(np.max(np.abs(lo.values - hi.values[::2, ::2]))))
        mode = "richardson"

    saturated = all(e <= SATURATION_FLOOR * scale for e in errors)
    if saturated or any(e == 0.0 for e in errors):
        orders = ()
        fit = float("nan")
    else:
        orders = tuple(
            float(np.log2(errors[i] / errors[i + 1])) for i in range(len(errors) - 1)
        )
        fit = fitted_order(errors)

    return ConvergenceReport(
        grids=tuple(grids), errors=tuple(errors), orders=orders,
        mode=mode, saturated=saturated, order_fit=fit,
    )
