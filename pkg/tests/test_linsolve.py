import numpy as np
import pytest
from scipy import sparse

from vmsbench import linsolve


class _Sys:
    def __init__(self, a, b):
        self.matrix = sparse.csr_matrix(a)
        self.rhs = np.asarray(b, dtype=float)


def test_identity():
    r = np.array([3.0, -1.0, 2.5])
    x = linsolve.solve(_Sys(np.eye(3), r))
    assert np.allclose(x, r, atol=1e-14)


def test_2x2_example():
    x = linsolve.solve(_Sys([[2.0, 0.0], [0.0, 4.0]], [2.0, 8.0]))
    assert np.allclose(x, [1.0, 2.0], atol=1e-14)


def test_gmres_agrees_with_direct():
    rng = np.random.default_rng(42)
    m = rng.standard_normal((50, 50))
    a = m @ m.T + 50 * np.eye(50)
    b = rng.standard_normal(50)
    xd = linsolve.solve(_Sys(a, b), linsolve.SolverConfig("direct_lu"))
    xi = linsolve.solve(_Sys(a, b),
                        linsolve.SolverConfig("gmres_ilu", rtol=1e-12))
    assert np.linalg.norm(xd - xi) < 1e-8 * np.linalg.norm(xd)


def test_residual_verification():
    rng = np.random.default_rng(1)
    a = sparse.random(40, 40, density=0.2, random_state=2) + 10 * sparse.eye(40)
    b = rng.standard_normal(40)
    cfg = linsolve.SolverConfig("direct_lu", verify=True)
    x = linsolve.solve(_Sys(a, b), cfg)
    assert np.linalg.norm(a @ x - b) <= 1e-9 * np.linalg.norm(b)


def test_singular_matrix_raises():
    a = np.zeros((3, 3))
    a[0, 0] = 1.0
    with pytest.raises(linsolve.SolverError):
        linsolve.solve(_Sys(a, np.ones(3)))


def test_config_validation():
    with pytest.raises(linsolve.SolverError):
        linsolve.SolverConfig("cholesky")
    with pytest.raises(linsolve.SolverError):
        linsolve.SolverConfig(rtol=0.0)
