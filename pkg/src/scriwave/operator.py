"""Pointwise assembly of the reduced wave operator and its mode form.

The full operator acting on v(tau, z, theta) is

    L v = 2 v_ztau + z^2 V v_zz + 2 gbar^{1A} v_zA + gbar^{AB} v_AB
          + [gamma^{-1/2} d_i(sqrt(gamma) gbar^{ij}) + a^j] d_j v + omega v.

For mode-decoupled problems the angular block is the round-sphere
Laplacian, so each spherical-harmonic amplitude obeys the 1+1 equation

    2 v_ztau + c_zz v_zz + c_z v_z + c_tau v_tau - l(l+1) s(z) v + c_0 v = 0,

with s = 1 on the round sphere. Only the *total* first-order
coefficients are stored; the split between the divergence part and a^i
is not observable for sampled inputs.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, UnsupportedClassError
from .numerics import d1, d2, d_mixed


@dataclass(frozen=True)
class OperatorCoefficients:
    """Coefficient fields of the full reduced operator.

    c_ztau is identically 2; c_zz = z^2 V vanishes on z = 0 (the
    degeneracy that frees the march from z = 0 boundary data);
    c_first[j] is the collected first-order coefficient of d_j.
    """

    problem: object
    c_zz: callable
    c_zA: tuple
    c_first: tuple
    c_0: callable
    c_ztau: float = 2.0

    @property
    def mode_decoupled(self):
        return self.problem.mode_decoupled


@dataclass(frozen=True)
class ModeCoefficients:
    """1+1 coefficients for a single spherical-harmonic degree l."""

    l: int
    c_zz: callable
    c_z: callable
    c_tau: callable
    c_0: callable
    T: float
    z0: float

    def __post_init__(self):
        if self.l < 0 or int(self.l) != self.l:
            raise DomainError(f"mode degree must be a nonnegative integer, got {self.l}")

    def s(self, z):
        """Angular-Laplacian scale; 1 at all z for the round sphere."""
        z = np.asarray(z, float)
        return np.ones(z.shape) if z.shape else 1.0

    def angular_factor(self):
        return float(self.l * (self.l + 1))


def assemble(problem):
    """Collect the operator coefficients of a reduced problem.

    The divergence term gamma^{-1/2} d_i(sqrt(gamma) gbar^{ij}) is
    computed from the analytic dV/dz carried by the problem (built-ins)
    or its finite-difference surrogate (sampled fields); in the
    supported class it contributes d_z(z^2 V) in the z-direction only.
    """
    V, Vz = problem.V, problem.dV_dz
    a0, a1, a2, a3 = problem.a

    def c_zz(tau, z):
        z = np.asarray(z, float)
        return z * z * np.asarray(V(tau, z), float)

    def c_first_tau(tau, z):
        return np.asarray(a0(tau, z), float)

    def c_first_z(tau, z):
        z = np.asarray(z, float)
        div = 2.0 * z * np.asarray(V(tau, z), float) + z * z * np.asarray(Vz(tau, z), float)
        return div + np.asarray(a1(tau, z), float)

    zero = lambda tau, z: np.zeros(np.broadcast(np.asarray(tau), np.asarray(z)).shape)

    return OperatorCoefficients(
        problem=problem,
        c_zz=c_zz,
        c_zA=(zero, zero),
        c_first=(c_first_tau, c_first_z, a2, a3),
        c_0=problem.omega,
    )


def mode_reduce(coeffs, l):
    """Project onto spherical-harmonic degree l: Lap_S2 -> -l(l+1)."""
    if not coeffs.mode_decoupled:
        raise UnsupportedClassError(
            "mode reduction requires a decoupled problem (no angular shift or angular a^A)"
        )
    p = coeffs.problem
    return ModeCoefficients(
        l=int(l),
        c_zz=coeffs.c_zz,
        c_z=coeffs.c_first[1],
        c_tau=coeffs.c_first[0],
        c_0=coeffs.c_0,
        T=p.T,
        z0=p.z0,
    )


def apply(coeffs, field, f=None):
    """Discrete residual L v - f of a mode field, second-order centered.

    Interior nodes only; the boundary ring is NaN. `f` is an optional
    source callable f(tau, z).
    """
    grid = field.grid
    if grid.n_tau < 3 or grid.n_z < 3:
        raise DomainError("residual evaluation needs at least 3 points per axis")
    v = field.values
    tau = grid.tau()[:, None]
    z = grid.z()[None, :]

    v_ztau = d_mixed(v, grid.dtau, grid.dz)
    v_zz = d2(v, grid.dz, axis=1)
    v_z = d1(v, grid.dz, axis=1)
    v_tau = d1(v, grid.dtau, axis=0)

    lv = (
        2.0 * v_ztau
        + coeffs.c_zz(tau, z) * v_zz
        + coeffs.c_z(tau, z) * v_z
        + coeffs.c_tau(tau, z) * v_tau
        + (coeffs.c_0(tau, z) - coeffs.angular_factor() * coeffs.s(z)) * v
    )
    if f is not None:
        lv = lv - f(tau, z)
    lv[0, :] = lv[-1, :] = np.nan
    lv[:, 0] = lv[:, -1] = np.nan
    return field.like(lv)
