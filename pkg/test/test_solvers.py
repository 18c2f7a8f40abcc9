import numpy as np
import pytest
import scipy.sparse as sp

from src.common.errors import LinearSolverError
from src.numerics.grid import build_grid
from src.numerics.operators import laplacian_matrix
from src.numerics.solvers import solve_spd, solve_general, relative_residual


def _spd():
    g = build_grid(3, 4, 5)
    return (2.0 * sp.identity(g.M * g.N * g.L) - laplacian_matrix(g)).tocsr()


def test_cg_reaches_tolerance():
    A = _spd()
    b = np.random.default_rng(0).normal(size=A.shape[0])
    x, info = solve_spd(A, b, 1e-10, 500)
    assert relative_residual(A, x, b) <= 1e-10
    assert info.residual <= 1e-10
    assert info.iterations > 0


def test_zero_rhs_short_circuits():
    A = _spd()
    x, info = solve_spd(A, np.zeros(A.shape[0]), 1e-10, 10)
    assert not x.any()
    assert info.iterations == 0


def test_cg_iteration_cap():
    A = _spd()
    b = np.random.default_rng(1).normal(size=A.shape[0])
    with pytest.raises(LinearSolverError) as exc:
        solve_spd(A, b, 1e-14, 1)
    assert exc.value.iterations >= 1
    assert exc.value.residual > 1e-14


def test_direct_multiple_rhs():
    rng = np.random.default_rng(2)
    A = (_spd() + sp.random(60, 60, density=0.05, random_state=3)).tocsr()
    b = rng.normal(size=(60, 2))
    x, info = solve_general(A, b, 1e-10, 100)
    assert x.shape == (60, 2)
    assert relative_residual(A, x, b) <= 1e-10


def test_gmres_path():
    rng = np.random.default_rng(4)
    A = (_spd() + 0.1 * sp.random(60, 60, density=0.05, random_state=5)).tocsr()
    b = rng.normal(size=(60, 2))
    x, info = solve_general(A, b, 1e-9, 200, method='gmres')
    assert relative_residual(A, x, b) <= 1e-9


def test_unknown_method():
    A = _spd()
    with pytest.raises(ValueError):
        solve_general(A, np.ones(A.shape[0]), 1e-8, 10, method='jacobi')
