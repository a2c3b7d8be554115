"""Radiation field and asymptotic coefficients near null infinity.

A solved mode behaves like v ~ sum_i v_i(tau) z^i near z = 0; v_0 is
the radiation field. Coefficients follow the Taylor convention
v_i = (1/i!) d_z^i v |_{z=0} throughout. Two independent routes
recover them:

  * fit        -- least-squares polynomial in z over a window of grid
                  points next to z = 0, row by row in tau;
  * recursion  -- transport ODEs in tau obtained by matching powers of
                  z in the mode equation, fed by the z-series of the
                  background and initialized from the slice data phi.

For a background with V = 1 + sum_k V_k z^k (and no shift), matching
the z^k coefficient of the mode equation gives

    2 (k+1) v_{k+1}' + [k(k+1) - l(l+1)] v_k
        + k * sum_{j>=1} (k - j + 1) V_j v_{k-j} = 0,

where the V_j sum collects the z^2 V v_zz, d_z(z^2 V) v_z and
z V_z v contributions together with their derivative index factors.
Cross-validation of the two routes (and the remainder certificate
|v - sum_{i<k} v_i z^i| / z^k) is the package's empirical handle on the
expansion's validity.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import DomainError, FitConditioningError

FIT_COND_LIMIT = 1e12
FIT_WINDOW_FACTOR = 4  # fit window holds 4k points for order k


@dataclass(frozen=True)
class MetricSeries:
    """z-series of the background around null infinity.

    V holds (V_1, V_2, ...); the optional extras `a_z` (coefficients of
    an additional a^1 d_z term, index starting at z^1) and `b`
    (additional zeroth-order term, index starting at z^0) extend the
    class beyond coefficients derived from V alone.
    """

    V: tuple = ()
    a_z: tuple = ()
    b: tuple = ()

    @classmethod
    def minkowski(cls, order=0):
        return cls(V=(0.0,) * order)

    @classmethod
    def schwarzschild(cls, M, order=1):
        if order < 1:
            order = 1
        return cls(V=(-2.0 * M,) + (0.0,) * (order - 1))

    def V_at(self, j):
        return self.V[j - 1] if 1 <= j <= len(self.V) else None

    def as_dict(self):
        return {"V": list(self.V), "a_z": list(self.a_z), "b": list(self.b)}


@dataclass(frozen=True)
class ExpansionTable:
    """Coefficients v_0 .. v_{k-1} on the tau grid, with provenance."""

    k: int
    tau: np.ndarray
    coeffs: np.ndarray        # shape (k, n_tau)
    method: str               # "fit" or "recursion"
    l: int
    metric_series: MetricSeries = None
    fit_window: int = 0
    condition_number: float = 0.0

    def __post_init__(self):
        if self.coeffs.shape != (self.k, len(self.tau)):
            raise DomainError(
                f"coefficient table shape {self.coeffs.shape} does not match "
                f"(k, n_tau) = {(self.k, len(self.tau))}"
            )


def extract_radiation_field(field):
    """The z = 0 column of a solved mode: the radiation field v_0(tau)."""
    if field.grid.z()[0] != 0.0:
        raise DomainError("field grid does not include the z = 0 column")
    return field.values[:, 0].copy()


def fit_coefficients(field, k):
    """Estimate v_0 .. v_{k-1} by polynomial fits near z = 0.

    Per tau-row, least squares of degree k-1 over the first 4k grid
    points; the Vandermonde is scaled to the window to keep it
    conditioned, and a condition number above 1e12 raises with the
    advice to lower k.
    """
    if k < 1:
        raise DomainError(f"expansion order must be >= 1, got {k}")
    if k > 5:
        raise DomainError(f"fit supports k <= 5 (conditioning), got {k}")
    grid = field.grid
    window = FIT_WINDOW_FACTOR * k
    if grid.n_z < window:
        raise DomainError(f"fit of order {k} needs n_z >= {window}, got {grid.n_z}")

    z_win = grid.z()[:window]
    scale = z_win[-1]
    A = np.vander(z_win / scale, N=k, increasing=True)
    cond = float(np.linalg.cond(A))
    if cond > FIT_COND_LIMIT:
        raise FitConditioningError(cond, k)

    sol, *_ = np.linalg.lstsq(A, field.values[:, :window].T, rcond=None)
    coeffs = sol / scale ** np.arange(k)[:, None]
    return ExpansionTable(
        k=k, tau=grid.tau(), coeffs=coeffs, method="fit", l=field.l,
        fit_window=window, condition_number=cond,
    )


def initial_values_from_phi(phi, z, k):
    """Taylor coefficients (1/i!) d_z^i phi |_0, i < k, from slice data.

    Uses the same scaled polynomial fit as fit_coefficients so the two
    extraction routes share their bias characteristics.
    """
    z = np.asarray(z, float)
    window = min(len(z), max(FIT_WINDOW_FACTOR * k, k + 1))
    z_win = z[:window]
    vals = np.asarray(phi(z_win), float) + np.zeros_like(z_win)
    scale = z_win[-1]
    A = np.vander(z_win / scale, N=k, increasing=True)
    sol, *_ = np.linalg.lstsq(A, vals, rcond=None)
    return sol / scale ** np.arange(k)


def recursion_coefficients(v0, tau, phi, z, l, k, metric_series):
    """Propagate v_1 .. v_{k-1} by the tau-transport recursion.

    `v0` is the radiation field (callable or array on `tau`); `phi`
    supplies the initial values v_i(0) (callable or precomputed list);
    `metric_series` must reach order k-2 (an input error otherwise) --
    use MetricSeries.minkowski / .schwarzschild for the built-ins.
    Each ODE 2 (i+1) v_{i+1}' = rhs(v_0..v_i) is integrated by
    cumulative trapezoid on the tau grid.
    """
    if k < 1:
        raise DomainError(f"expansion order must be >= 1, got {k}")
    tau = np.asarray(tau, float)
    needed = max(k - 2, 0)
    if len(metric_series.V) < needed:
        raise DomainError(
            f"metric series supplied to order {len(metric_series.V)}, "
            f"but order {needed} is needed for k = {k}"
        )

    v0_vals = np.asarray(v0(tau), float) + np.zeros_like(tau) if callable(v0) else np.asarray(v0, float)
    if v0_vals.shape != tau.shape:
        raise DomainError("v0 samples do not match the tau grid")

    if callable(phi):
        init = initial_values_from_phi(phi, z, k)
    else:
        init = np.asarray(phi, float)
        if len(init) < k:
            raise DomainError(f"need {k} initial values, got {len(init)}")

    L = float(l * (l + 1))
    coeffs = np.empty((k, len(tau)))
    coeffs[0] = v0_vals
    dtau_nonuniform = tau

    for i in range(k - 1):
        # z^i coefficient of the equation fixes v_{i+1}'
        rhs = -(i * (i + 1) - L) * coeffs[i]
        for j in range(1, i + 1):
            Vj = metric_series.V_at(j)
            if Vj:
                rhs -= i * (i - j + 1) * Vj * coeffs[i - j]
        for j in range(1, min(i, len(metric_series.a_z)) + 1):
            aj = metric_series.a_z[j - 1]
            if aj:
                rhs -= (i - j + 1) * aj * coeffs[i - j + 1]
        for j in range(0, min(i + 1, len(metric_series.b))):
            bj = metric_series.b[j]
            if bj:
                rhs -= bj * coeffs[i - j]
        rate = rhs / (2.0 * (i + 1))
        coeffs[i + 1] = init[i + 1] + cumulative_trapezoid(rate, dtau_nonuniform, initial=0.0)

    return ExpansionTable(
        k=k, tau=tau, coeffs=coeffs, method="recursion", l=int(l),
        metric_series=metric_series,
    )


def remainder_certificate(field, table, k, z_floor=None):
    """Empirical remainder bound max |v - sum_{i<k} v_i z^i| / z^k.

    z below the floor (default 2 dz) is excluded to avoid amplifying
    roundoff at the degenerate corner.
    """
    if k < 1:
        raise DomainError(f"remainder certificate needs k >= 1, got {k}")
    if table.k < k:
        raise DomainError(f"table holds {table.k} coefficients, need {k}")
    grid = field.grid
    if len(table.tau) != grid.n_tau or not np.allclose(table.tau, grid.tau()):
        raise DomainError("table tau grid does not match the field grid")
    if z_floor is None:
        z_floor = 2.0 * grid.dz
    z = grid.z()
    mask = z >= z_floor
    if not np.any(mask):
        raise DomainError(f"z floor {z_floor} excludes the whole grid")
    zs = z[mask]
    partial = np.zeros((grid.n_tau, mask.sum()))
    for i in range(k):
        partial += table.coeffs[i][:, None] * zs[None, :] ** i
    return float(np.max(np.abs(field.values[:, mask] - partial) / zs[None, :] ** k))
