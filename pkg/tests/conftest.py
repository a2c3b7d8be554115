import numpy as np
import pytest

import scriwave as sw
from scriwave import operator


@pytest.fixture(scope="session")
def minkowski_problem():
    return sw.conformal_reduce(sw.make_minkowski(1.0, 1.0))


@pytest.fixture(scope="session")
def minkowski_modes(minkowski_problem):
    coeffs = operator.assemble(minkowski_problem)
    return {l: operator.mode_reduce(coeffs, l) for l in (0, 1, 2)}


@pytest.fixture(scope="session")
def schwarzschild_problem():
    return sw.conformal_reduce(sw.make_schwarzschild(0.1, T=1.0, z0=1.0))


@pytest.fixture(scope="session")
def schwarzschild_mode_l1(schwarzschild_problem):
    return operator.mode_reduce(operator.assemble(schwarzschild_problem), 1)


def l0_data(f):
    """Data generated by the z-independent transport solution v = f(tau)."""
    return sw.BoundaryData(phi=lambda z: f(0.0) + 0.0 * z, psi=f)


def l1_data(f, fp):
    """Data generated by the exact l=1 multipole v = f'(tau) + z f(tau)."""
    return sw.BoundaryData(
        phi=lambda z: fp(0.0) + z * f(0.0),
        psi=lambda t: fp(t) + 1.0 * f(t),
    )


def l1_exact(f, fp):
    return lambda t, z: fp(t) + z * f(t)


def max_grid_error(field, exact):
    tt, zz = np.meshgrid(field.grid.tau(), field.grid.z(), indexing="ij")
    return float(np.max(np.abs(field.values - exact(tt, zz))))
