"""Bondi-Sachs backgrounds and their compactified conformal reduction.

A background is the field set (V, eta, U^A, h_AB) on the compactified
domain [0, T] x [0, z0] x S^2, z = 1/r, with null infinity at z = 0 and
the timelike data surface at z = z0 (r = R = 1/z0). Radial coordinates
never appear: every field is a function of (tau, z).

Angular convention: h_AB is stored *relative to the round metric*, i.e.
as the matrix field h_rel with h = h_rel . g_S2 in any angular chart.
This makes the ellipticity bounds lambda, Lambda chart-free (identity
=> lambda = Lambda = 1) and puts the angular measure into the
orthonormal-harmonic normalization used by the mode machinery.

The reduction rescales g by z^2 (and e^{-2 eta}), turning the wave
operator into a regular operator on the bounded domain whose z^2 V
coefficient degenerates at z = 0; that degeneracy is what lets the
march reach null infinity without boundary data there. For the
supported class (eta = 0, U^A = 0, h = g_S2) the lower-order
coefficients are a^i = 0 and omega = z dV/dz; the sign of omega is
pinned by the symbolic substitution oracle (see scriwave.oracle), which
reproduces the closed-form Schwarzschild mode equation

    2 v_ztau + z^2 (1 - 2 M z) v_zz + Lap_S2 v + 2 z (1 - 3 M z) v_z - 2 M z v = 0.
"""

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import AssumptionViolationError, DomainError, UnsupportedClassError
from .numerics import d1

V_BOUND = "1/2 <= V <= 3/2"
ELLIPTICITY_BOUND = "lambda I <= h_AB <= Lambda I"
DET_INDEPENDENCE = "det(h_AB) independent of tau and z"

ALGEBRAIC_TOL = 1e-12    # closed-form fields
INTERPOLATED_TOL = 1e-8  # sampled user fields


def _const_field(value):
    def f(tau, z):
        tau, z = np.broadcast_arrays(np.asarray(tau, float), np.asarray(z, float))
        return np.full(tau.shape, value) if tau.shape else float(value)
    return f


@dataclass(frozen=True)
class BondiSachsMetric:
    """Background fields on [0,T] x [0,z0] x S^2, all evaluable off-grid.

    V, eta: scalar fields of (tau, z); U: the two angular shift
    components; h_rel: 2x2 angular metric relative to the round sphere.
    dV_dz is the analytic z-derivative when known (built-ins), else a
    finite-difference surrogate attached by the file loader.
    """

    T: float
    z0: float
    V: callable
    dV_dz: callable
    dV_dtau: callable = None
    eta: callable = None
    U: tuple = None
    h_rel: callable = None
    symmetry: str = "spherical"
    sampled: bool = False
    # optional user-supplied lower-order coefficients (a^0, a^1, omega)
    user_a: tuple = None
    user_omega: callable = None

    def __post_init__(self):
        if not (self.T > 0 and self.z0 > 0):
            raise DomainError(f"domain extents must be positive, got T={self.T}, z0={self.z0}")
        if self.dV_dtau is None:
            object.__setattr__(self, "dV_dtau", _const_field(0.0))
        if self.eta is None:
            object.__setattr__(self, "eta", _const_field(0.0))
        if self.U is None:
            object.__setattr__(self, "U", (_const_field(0.0), _const_field(0.0)))
        if self.h_rel is None:
            object.__setattr__(self, "h_rel", lambda tau, z: np.eye(2))

    @property
    def tolerance(self):
        return INTERPOLATED_TOL if self.sampled else ALGEBRAIC_TOL


def make_minkowski(T, z0):
    """Flat background: V = 1, eta = 0, U^A = 0, h = g_S2."""
    if not (T > 0 and z0 > 0):
        raise DomainError(f"domain extents must be positive, got T={T}, z0={z0}")
    return BondiSachsMetric(
        T=float(T), z0=float(z0),
        V=_const_field(1.0), dV_dz=_const_field(0.0),
        symmetry="spherical",
    )


def make_schwarzschild(M, T, z0):
    """Static mass-M background: V = 1 - 2 M z, other fields flat.

    The domain must stay away from the horizon so the V bounds hold on
    [0, z0]; in compactified terms 2 M z0 <= 1/2.
    """
    if not (T > 0 and z0 > 0):
        raise DomainError(f"domain extents must be positive, got T={T}, z0={z0}")
    M = float(M)
    v_lo = min(1.0, 1.0 - 2.0 * M * z0)
    v_hi = max(1.0, 1.0 - 2.0 * M * z0)
    if v_lo < 0.5 or v_hi > 1.5:
        raise AssumptionViolationError(
            V_BOUND, f"V = 1 - 2 M z reaches {v_lo if v_lo < 0.5 else v_hi} on [0, {z0}] for M = {M}"
        )

    def V(tau, z):
        return 1.0 - 2.0 * M * np.asarray(z, float) + 0.0 * np.asarray(tau, float)

    return BondiSachsMetric(
        T=float(T), z0=float(z0),
        V=V, dV_dz=_const_field(-2.0 * M),
        symmetry="spherical",
    )


@dataclass(frozen=True)
class ValidationReport:
    """Sampled admissibility audit of a background.

    Margins are (distance to the violated side); defects are the decay
    residuals at the smallest sampled z, which is z = 0 itself.
    """

    v_min: float
    v_max: float
    v_margin: float
    lam: float
    Lam: float
    det_defect: float
    decay_v: float
    decay_u: float
    decay_h: float
    sample_density: int
    tol: float
    violations: tuple = ()

    @property
    def passed(self):
        return not self.violations


def validate_asymptotics(metric, sample_density=64, tol=None):
    """Sample the closed domain and audit V bounds, ellipticity, det
    independence, and the z -> 0 decay of (V - 1, U^A, h - g_S2)."""
    if tol is None:
        tol = metric.tolerance
    taus = np.linspace(0.0, metric.T, sample_density)
    zs = np.linspace(0.0, metric.z0, sample_density)
    tt, zz = np.meshgrid(taus, zs, indexing="ij")

    v = np.asarray(metric.V(tt, zz), dtype=float)
    v_min, v_max = float(v.min()), float(v.max())
    v_margin = float(min(v_min - 0.5, 1.5 - v_max))

    violations = []
    if v_margin < -tol:
        violations.append(V_BOUND)

    # relative-eigenvalue ellipticity certificate and det independence
    lam, Lam = np.inf, -np.inf
    dets = np.empty_like(tt)
    for i in range(sample_density):
        for j in range(sample_density):
            h = np.asarray(metric.h_rel(tt[i, j], zz[i, j]), dtype=float)
            ev = np.linalg.eigvalsh(0.5 * (h + h.T))
            lam = min(lam, ev[0])
            Lam = max(Lam, ev[1])
            dets[i, j] = ev[0] * ev[1]
    if lam <= 0:
        violations.append(ELLIPTICITY_BOUND)
    det_defect = float(np.max(np.abs(dets - dets[0, 0])))
    if det_defect > tol:
        violations.append(DET_INDEPENDENCE)

    # decay defects at the innermost sampled z (z = 0)
    decay_v = float(np.max(np.abs(metric.V(taus, np.zeros_like(taus)) - 1.0)))
    u0 = np.max(np.abs(np.asarray(metric.U[0](taus, np.zeros_like(taus)), float)))
    u1 = np.max(np.abs(np.asarray(metric.U[1](taus, np.zeros_like(taus)), float)))
    decay_u = float(max(u0, u1))
    decay_h = 0.0
    for t in taus:
        h = np.asarray(metric.h_rel(t, 0.0), dtype=float)
        decay_h = max(decay_h, float(np.max(np.abs(h - np.eye(2)))))
    if max(decay_v, decay_u, decay_h) > tol:
        violations.append("asymptotic flatness at z = 0")

    return ValidationReport(
        v_min=v_min, v_max=v_max, v_margin=v_margin,
        lam=float(lam), Lam=float(Lam), det_defect=det_defect,
        decay_v=decay_v, decay_u=decay_u, decay_h=decay_h,
        sample_density=sample_density, tol=tol,
        violations=tuple(violations),
    )


@dataclass(frozen=True)
class ReducedProblem:
    """Coefficient data of the compactified equation

        Box_gbar v + a^i d_i v + omega v = 0

    on [0,T] x [0,z0] x S^2, with gbar^{01} = 1, gbar^{11} = z^2 V,
    gbar^{1A} = U^A (= 0 in the supported class) and round angular part.
    `a` holds the four lower-order coefficient fields; `gamma` is the
    relative angular determinant (= 1 here).
    """

    T: float
    z0: float
    V: callable
    dV_dz: callable
    dV_dtau: callable = None
    a: tuple = None
    omega: callable = None
    bounds: tuple = (1.0, 1.0)
    mode_decoupled: bool = True
    tol: float = ALGEBRAIC_TOL

    def __post_init__(self):
        if self.dV_dtau is None:
            object.__setattr__(self, "dV_dtau", _const_field(0.0))
        if self.a is None:
            zero = _const_field(0.0)
            object.__setattr__(self, "a", (zero, zero, zero, zero))
        if self.omega is None:
            object.__setattr__(self, "omega", _const_field(0.0))

    def gamma(self, tau, z):
        tau, z = np.broadcast_arrays(np.asarray(tau, float), np.asarray(z, float))
        return np.ones(tau.shape) if tau.shape else 1.0

    def gbar_inverse(self, tau, z):
        """4x4 inverse-metric components at a point (angular block relative)."""
        v = float(self.V(tau, z))
        z = float(z)
        g = np.zeros((4, 4))
        g[0, 1] = g[1, 0] = 1.0
        g[1, 1] = z * z * v
        g[2, 2] = g[3, 3] = 1.0
        return g

    def gbar_lower(self, tau, z):
        """4x4 metric components at a point, inverse of gbar_inverse."""
        v = float(self.V(tau, z))
        z = float(z)
        g = np.zeros((4, 4))
        g[0, 0] = -z * z * v
        g[0, 1] = g[1, 0] = 1.0
        g[2, 2] = g[3, 3] = 1.0
        return g


def conformal_reduce(metric, a=None, omega=None, sample_density=64):
    """Reduce a background to the coefficients of the compactified equation.

    Supported class: eta = 0 and U^A = 0, for which a^i = 0 and
    omega = z dV/dz (the convention certified by the substitution
    oracle against the closed-form Schwarzschild reduction). Outside
    that class the caller must pass `a` (4-tuple of fields) and `omega`
    explicitly; with eta or U nonzero the reduction itself is refused.
    """
    report = validate_asymptotics(metric, sample_density=sample_density)
    if not report.passed:
        raise AssumptionViolationError(
            "; ".join(report.violations),
            f"validation failed with margins V={report.v_margin:.3e}",
        )

    taus = np.linspace(0.0, metric.T, 16)
    zs = np.linspace(0.0, metric.z0, 16)
    tt, zz = np.meshgrid(taus, zs, indexing="ij")
    eta_max = float(np.max(np.abs(np.asarray(metric.eta(tt, zz), float))))
    u_max = max(
        float(np.max(np.abs(np.asarray(metric.U[0](tt, zz), float)))),
        float(np.max(np.abs(np.asarray(metric.U[1](tt, zz), float)))),
    )
    if eta_max > metric.tolerance or u_max > metric.tolerance:
        raise UnsupportedClassError(
            "reduction implemented for the eta = 0, U^A = 0 class only; "
            "supply the lower-order coefficients a^i and omega directly"
        )

    if a is None and metric.user_a is not None:
        a = metric.user_a
    if omega is None and metric.user_omega is not None:
        omega = metric.user_omega

    if omega is None:
        V_z = metric.dV_dz

        def omega(tau, z, _Vz=V_z):
            z = np.asarray(z, float)
            return z * np.asarray(_Vz(tau, z), float)

    if a is not None:
        zero = _const_field(0.0)
        a = tuple(ai if ai is not None else zero for ai in a)
        mode_decoupled = all(
            float(np.max(np.abs(np.asarray(ai(tt, zz), float)))) <= metric.tolerance
            for ai in a[2:]
        )
    else:
        mode_decoupled = True

    return ReducedProblem(
        T=metric.T, z0=metric.z0,
        V=metric.V, dV_dz=metric.dV_dz, dV_dtau=metric.dV_dtau,
        a=a, omega=omega,
        bounds=(report.lam, report.Lam),
        mode_decoupled=mode_decoupled,
        tol=metric.tolerance,
    )


def _interpolant(taus, zs, table):
    interp = RegularGridInterpolator(
        (taus, zs), table, method="linear", bounds_error=False, fill_value=None
    )

    def f(tau, z):
        tau, z = np.broadcast_arrays(np.asarray(tau, float), np.asarray(z, float))
        pts = np.stack([tau.ravel(), z.ravel()], axis=-1)
        out = interp(pts).reshape(tau.shape)
        return out if tau.shape else float(out)

    return f


def load_metric_file(path):
    """Load a sampled background from the JSON grid schema.

    Schema (all floats IEEE-754 doubles, decimal round-trip):

        {"schema": "metric-grid-v1", "symmetry": "spherical",
         "tau": [...ascending, starts at 0...],
         "z":   [...ascending, starts at 0...],
         "V":   [[row per tau, column per z]],
         "a":   {"tau": [[...]], "z": [[...]]},   # optional
         "omega": [[...]]}                        # optional

    V (and the optional coefficient tables) are bilinearly interpolated;
    dV/dz is attached from centered differences of the samples.
    """
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("schema") != "metric-grid-v1":
        raise DomainError(f"unknown metric file schema {doc.get('schema')!r}")
    taus = np.asarray(doc["tau"], dtype=float)
    zs = np.asarray(doc["z"], dtype=float)
    if taus.ndim != 1 or zs.ndim != 1 or taus.size < 3 or zs.size < 3:
        raise DomainError("metric grid needs 1-D tau and z axes with >= 3 points")
    if taus[0] != 0.0 or zs[0] != 0.0:
        raise DomainError("metric grid must start at tau = 0 and z = 0")
    if np.any(np.diff(taus) <= 0) or np.any(np.diff(zs) <= 0):
        raise DomainError("metric grid axes must be strictly increasing")
    V = np.asarray(doc["V"], dtype=float)
    if V.shape != (taus.size, zs.size):
        raise DomainError(f"V table shape {V.shape} does not match axes {(taus.size, zs.size)}")

    dz = float(zs[1] - zs[0])
    uniform = np.allclose(np.diff(zs), dz)
    if uniform:
        Vz = d1(V, dz, axis=1)
    else:
        Vz = np.gradient(V, zs, axis=1, edge_order=2)
    Vt = np.gradient(V, taus, axis=0, edge_order=2)

    user_a = None
    if "a" in doc:
        a_tau = np.asarray(doc["a"]["tau"], dtype=float)
        a_z = np.asarray(doc["a"]["z"], dtype=float)
        zero = _const_field(0.0)
        user_a = (_interpolant(taus, zs, a_tau), _interpolant(taus, zs, a_z), zero, zero)
    user_omega = _interpolant(taus, zs, np.asarray(doc["omega"], dtype=float)) if "omega" in doc else None

    return BondiSachsMetric(
        T=float(taus[-1]), z0=float(zs[-1]),
        V=_interpolant(taus, zs, V), dV_dz=_interpolant(taus, zs, Vz),
        dV_dtau=_interpolant(taus, zs, Vt),
        symmetry=doc.get("symmetry", "spherical"),
        sampled=True,
        user_a=user_a, user_omega=user_omega,
    )
