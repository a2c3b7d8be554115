"""Independent verification routes for the marching solver.

Two oracles live here:

  * taylor_solve -- for static (tau-independent) coefficients, expand
    v = sum_i u_i^0(z) tau^i and alternate between the z-ODE for the
    rate table w_i (trapezoidal, same integrator as the march) and the
    algebraic recurrences (i+1) u^0_{i+1} = w_i,
    (i+1) u^1_{i+1} = d_z w_i. The rate ODE is obtained by expanding
    the assembled mode operator in tau, which is trivial for static
    coefficients. Majorant-based convergence arguments are not
    implemented; the truncation radius is validated empirically
    (default window tau <= T/4).

  * substitution_oracle -- a fully symbolic route: build the
    compactified background metric in sympy, apply the coordinate wave
    operator to z * v * Y_l(theta) for monomial probes
    v in {1, z, tau, z tau, z^2, f(tau)}, and solve for the mode
    coefficients. Each probe isolates one coefficient given the ones
    before it. This fixes the sign convention of the zeroth-order
    coefficient omega project-wide and cross-checks the reduction
    module coefficient by coefficient.
"""

from dataclasses import dataclass

import numpy as np
import sympy as sp

from .errors import DomainError, UnsupportedOracleError
from .numerics import d1, integrate_z_ode

MAX_SERIES_ORDER = 12


@dataclass(frozen=True)
class SeriesSolution:
    """tau-power-series tables on the z-grid for one mode.

    u0[i], u1[i] are the series tables of v and d_z v; w[i] those of
    d_tau v, i.e. w[i] = (i+1) u0[i+1]. Stored tables satisfy the
    recurrences by construction; tests recompute them independently.
    """

    N: int
    l: int
    z: np.ndarray
    u0: np.ndarray   # (N+1, n_z)
    u1: np.ndarray   # (N+1, n_z)
    w: np.ndarray    # (N, n_z)
    psi_taylor: tuple


def _require_static(coeffs, z):
    probes = np.linspace(0.0, coeffs.T, 5)
    for fn in (coeffs.c_zz, coeffs.c_z, coeffs.c_tau, coeffs.c_0):
        base = np.asarray(fn(probes[0], z), float) + np.zeros_like(z)
        for t in probes[1:]:
            cur = np.asarray(fn(t, z), float) + np.zeros_like(z)
            if np.max(np.abs(cur - base)) > 1e-13 * max(1.0, np.max(np.abs(base))):
                raise UnsupportedOracleError(
                    "series oracle requires tau-independent coefficients"
                )


def taylor_solve(coeffs, phi, psi_taylor, N, z):
    """Series tables for static mode coefficients and analytic data.

    phi: callable or array on the z-grid; psi_taylor: Taylor
    coefficients (psi_0 .. psi_N) of the boundary data. Level i solves
    2 d_z w_i + c_tau w_i = -(z^2 V d_z u1_i + c_z u1_i + (c_0 - l(l+1)) u0_i)
    inward from w_i(z0) = (i+1) psi_{i+1}, then the recurrences fill
    level i+1.
    """
    if N < 0 or N > MAX_SERIES_ORDER:
        raise DomainError(f"series order must be in [0, {MAX_SERIES_ORDER}], got {N}")
    z = np.asarray(z, float)
    if len(psi_taylor) < N + 1:
        raise DomainError(f"need {N + 1} boundary Taylor coefficients, got {len(psi_taylor)}")
    _require_static(coeffs, z)
    dz = z[1] - z[0]

    czz = np.asarray(coeffs.c_zz(0.0, z), float) + np.zeros_like(z)
    cz = np.asarray(coeffs.c_z(0.0, z), float) + np.zeros_like(z)
    ctau = np.asarray(coeffs.c_tau(0.0, z), float) + np.zeros_like(z)
    c0 = np.asarray(coeffs.c_0(0.0, z), float) + np.zeros_like(z)
    lfac = coeffs.angular_factor()

    u0 = np.zeros((N + 1, len(z)))
    u1 = np.zeros((N + 1, len(z)))
    w = np.zeros((max(N, 1), len(z))) if N > 0 else np.zeros((0, len(z)))

    u0[0] = np.asarray(phi(z), float) + np.zeros_like(z) if callable(phi) else np.asarray(phi, float)
    u1[0] = d1(u0[0], dz)

    for i in range(N):
        rhs = -(czz * d1(u1[i], dz) + cz * u1[i] + (c0 - lfac) * u0[i])
        w[i] = integrate_z_ode(ctau, rhs, (i + 1) * float(psi_taylor[i + 1]), dz)
        dz_w = 0.5 * (rhs - ctau * w[i])
        u0[i + 1] = w[i] / (i + 1)
        u1[i + 1] = dz_w / (i + 1)

    return SeriesSolution(N=N, l=coeffs.l, z=z, u0=u0, u1=u1, w=w,
                          psi_taylor=tuple(float(c) for c in psi_taylor))


def evaluate_series(sol, tau, z):
    """Horner evaluation of sum_i u0_i(z) tau^i; z off-grid is interpolated.

    Reliable within the empirical truncation window (tau <= T/4 by
    default in the comparisons); the caller owns the window choice.
    """
    tau = np.asarray(tau, float)
    z = np.asarray(z, float)
    levels = [np.interp(z, sol.z, sol.u0[i]) for i in range(sol.N + 1)]
    out = np.zeros(np.broadcast(tau, z).shape)
    for i in range(sol.N, -1, -1):
        out = out * tau + levels[i]
    return out if out.shape else float(out)


@dataclass(frozen=True)
class SignReport:
    """Outcome of the symbolic coefficient extraction for a background."""

    omega: object                 # sympy expression in z (and M)
    omega_convention: str         # the certified closed form
    matches_reduction: bool       # oracle == conformal_reduce coefficients
    max_reduction_deviation: float
    coefficients: dict            # sympy expressions keyed by term


def _symbolic_box_mode(V_expr, l, tau, z, M=None):
    """Apply the coordinate wave operator to z * v(tau, z) * P_l(cos theta).

    Builds the compactified background metric from its line element,
    inverts it symbolically, and uses
    Box u = (-det g)^{-1/2} d_i ((-det g)^{1/2} g^{ij} d_j u).
    Returns Box(z v Y) / (z^3 Y) simplified, with v kept as an
    undetermined function of (tau, z).
    """
    theta = sp.symbols("theta", positive=True)
    v = sp.Function("v")(tau, z)
    Y = sp.legendre(l, sp.cos(theta))

    g = sp.zeros(4, 4)
    g[0, 0] = -V_expr
    g[0, 1] = g[1, 0] = 1 / z**2
    g[2, 2] = 1 / z**2
    g[3, 3] = sp.sin(theta) ** 2 / z**2
    ginv = g.inv()
    sqrtg = sp.sqrt(-g.det())
    sqrtg = sp.simplify(sqrtg)

    u = z * v * Y
    coords = [tau, z, theta, sp.symbols("phi_angle")]
    box = 0
    for i in range(4):
        term = 0
        for j in range(4):
            if ginv[i, j] == 0:
                continue
            term += ginv[i, j] * sp.diff(u, coords[j])
        box += sp.diff(sqrtg * term, coords[i])
    box = sp.simplify(box / sqrtg)
    reduced = sp.simplify(box / (z**3 * Y))
    return sp.expand(reduced), v


def substitution_oracle(metric_kind, l=0, M=None, reduce_check=None):
    """Extract verified mode coefficients by symbolic substitution.

    metric_kind: "minkowski" or "schwarzschild" (M symbolic when not
    given). Probes v in {1, z, tau, z tau, z^2, f(tau)} isolate the
    coefficients of the mode equation

        c_ztau v_ztau + c_zz v_zz + c_z v_z + c_tau v_tau + c_0 v = 0,

    where c_0 bundles omega - l(l+1). Pass `reduce_check` (a
    ModeCoefficients from the reduction path) to cross-check values on
    a z-sample and report the worst deviation.
    """
    tau, z = sp.symbols("tau z", real=True)
    if metric_kind == "minkowski":
        V_expr = sp.Integer(1)
        Msym = None
    elif metric_kind == "schwarzschild":
        Msym = sp.Symbol("M", positive=True) if M is None else sp.nsimplify(M, rational=True)
        V_expr = 1 - 2 * Msym * z
    else:
        raise DomainError(f"substitution oracle supports built-ins only, got {metric_kind!r}")

    expr, v = _symbolic_box_mode(V_expr, l, tau, z)

    def probe(v_sub):
        return sp.expand(expr.subs(v, v_sub).doit())

    c0 = probe(sp.Integer(1))
    cz = sp.expand(probe(z) - c0 * z)
    ctau = sp.expand(probe(tau) - c0 * tau)
    cztau = sp.expand(probe(tau * z) - cz * tau - ctau * z - c0 * tau * z)
    czz = sp.expand((probe(z**2) - 2 * z * cz - c0 * z**2) / 2)

    # independent consistency probe: v = f(tau) exercises only c_tau, c_0
    f = sp.Function("f")(tau)
    probe_f = probe(f)
    check = sp.simplify(probe_f - ctau * sp.diff(f, tau) - c0 * f)
    if check != 0:
        raise DomainError(f"monomial probes inconsistent: residual {check}")

    omega = sp.expand(c0 + l * (l + 1))
    expected_omega = sp.expand(z * sp.diff(V_expr, z))
    if sp.simplify(omega - expected_omega) != 0:
        raise DomainError(
            f"oracle omega {omega} disagrees with +z dV/dz = {expected_omega}"
        )

    coefficients = {"c_ztau": cztau, "c_zz": czz, "c_z": cz, "c_tau": ctau, "c_0": c0,
                    "omega": omega}

    matches = True
    deviation = 0.0
    if reduce_check is not None:
        if Msym is not None and M is None:
            raise DomainError("numeric cross-check needs a numeric mass")
        zs = np.linspace(0.0, 1.0, 33)
        lam = {k: sp.lambdify(z, coefficients[k], "numpy") for k in ("c_zz", "c_z", "c_0")}
        omega_reduced = np.asarray(reduce_check.c_0(0.0, zs), float) + np.zeros_like(zs)
        pairs = [
            (np.asarray(lam["c_zz"](zs), float) + 0 * zs,
             np.asarray(reduce_check.c_zz(0.0, zs), float) + 0 * zs),
            (np.asarray(lam["c_z"](zs), float) + 0 * zs,
             np.asarray(reduce_check.c_z(0.0, zs), float) + 0 * zs),
            (np.asarray(lam["c_0"](zs), float) + 0 * zs,
             omega_reduced - l * (l + 1)),
        ]
        for oracle_vals, reduced_vals in pairs:
            deviation = max(deviation, float(np.max(np.abs(oracle_vals - reduced_vals))))
        matches = deviation <= 1e-12

    return SignReport(
        omega=omega,
        omega_convention="omega = +z dV/dz (zeroth-order term +omega v)",
        matches_reduction=matches,
        max_reduction_deviation=deviation,
        coefficients=coefficients,
    )
