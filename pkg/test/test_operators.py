import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from src.numerics.grid import build_grid, CellField, VectorField, fill_periodic_ghosts, fill_pressure_ghosts
from src.numerics.operators import (RotationParams, FaceFluxes, combine_fluxes, laplacian,
                                    grad_pressure, divergence, rotate, laplacian_matrix,
                                    horizontal_laplacian, horizontal_laplacian_matrix)


def _symbol(k, h):
    return -(2 - 2 * np.cos(k * h)) / h ** 2


def _periodic_field(g, values):
    """x、y 周期、z 方向按同样函数外延的场"""
    f = CellField.from_interior(g, values)
    fill_periodic_ghosts(f)
    f.values[:, :, 0] = f.values[:, :, 1]
    f.values[:, :, -1] = f.values[:, :, -2]
    return f


def test_laplacian_of_constant():
    g = build_grid(6, 5, 4)
    f = _periodic_field(g, np.full(g.interior_shape, 7.0))
    assert np.abs(laplacian(f, g).interior).max() < 1e-12


def test_laplacian_cos_x_eigenfunction():
    g = build_grid(12, 6, 4)
    X, _, _ = g.center_mesh()
    f = _periodic_field(g, np.cos(X))
    expected = _symbol(1, g.dx) * np.cos(X)
    np.testing.assert_allclose(laplacian(f, g).interior, expected, atol=1e-13)


def test_laplacian_separable_mode():
    g = build_grid(10, 12, 3)
    X, Y, _ = g.center_mesh()
    mode = np.cos(X) * np.cos(2 * Y)
    f = _periodic_field(g, mode)
    expected = (_symbol(1, g.dx) + _symbol(2, g.dy)) * mode
    np.testing.assert_allclose(laplacian(f, g).interior, expected, atol=1e-12)


def test_gradient_of_constant():
    g = build_grid(5, 5, 5)
    p = fill_pressure_ghosts(CellField.from_interior(g, np.full(g.interior_shape, 3.0)))
    assert np.abs(grad_pressure(p, g).interior_stack()).max() < 1e-13


def test_gradient_cos_x_symbol():
    g = build_grid(16, 4, 4)
    X, _, _ = g.center_mesh()
    p = fill_pressure_ghosts(CellField.from_interior(g, np.cos(X)))
    gx = grad_pressure(p, g).u.interior
    np.testing.assert_allclose(gx, -np.sin(X) * np.sin(g.dx) / g.dx, atol=1e-13)


def test_gradient_of_quadratic_in_z():
    g = build_grid(3, 3, 8)
    _, _, Z = g.center_mesh()
    p = fill_pressure_ghosts(CellField.from_interior(g, Z ** 2))
    gz = grad_pressure(p, g).w.interior
    np.testing.assert_allclose(gz[:, :, 1:-1], 2 * Z[:, :, 1:-1], atol=1e-12)
    # 紧致外推对 Z² 的幽灵偏差为 −Δz²，两侧首层梯度各偏 ±Δz/2
    np.testing.assert_allclose(gz[:, :, 0], 2 * Z[:, :, 0] + g.dz / 2, atol=1e-12)
    np.testing.assert_allclose(gz[:, :, -1], 2 * Z[:, :, -1] - g.dz / 2, atol=1e-12)


def test_gradient_exact_for_linear_in_z():
    g = build_grid(3, 3, 8)
    _, _, Z = g.center_mesh()
    p = fill_pressure_ghosts(CellField.from_interior(g, 1.0 - 3.0 * Z))
    np.testing.assert_allclose(grad_pressure(p, g).w.interior, -3.0, atol=1e-12)


def test_divergence_of_uniform_flux():
    g = build_grid(4, 4, 4)
    F = FaceFluxes.zeros(g)
    F.fu[:] = 1.5
    F.fv[:] = -2.0
    assert np.abs(divergence(F, g).interior).max() == 0.0


def test_divergence_telescopes_to_zero():
    g = build_grid(5, 4, 6)
    rng = np.random.default_rng(3)
    F = FaceFluxes(g, rng.normal(size=(g.M + 1, g.N, g.L)), rng.normal(size=(g.M, g.N + 1, g.L)),
                   rng.normal(size=(g.M, g.N, g.L + 1)))
    F.fu[-1] = F.fu[0]
    F.fv[:, -1] = F.fv[:, 0]
    F.fw[:, :, 0] = F.fw[:, :, -1] = 0.0
    assert abs(divergence(F, g).interior.sum()) < 1e-10


def test_combine_fluxes():
    g = build_grid(3, 3, 3)
    a, b = FaceFluxes.zeros(g), FaceFluxes.zeros(g)
    a.fu[:] = 1.0
    b.fu[:] = 2.0
    out = combine_fluxes([a, b], [3.0, -1.5])
    assert np.all(out.fu == 0.0)
    assert out.is_finite()


def test_rotation_of_unit_vector():
    g = build_grid(3, 3, 3)
    vel = VectorField.from_interior(g, np.ones(g.interior_shape), np.zeros(g.interior_shape),
                                    np.zeros(g.interior_shape))
    rot = rotate(vel, RotationParams(2.0))
    assert np.all(rot.v.interior == 2.0)
    assert not rot.u.interior.any()
    assert not rot.w.interior.any()


@settings(max_examples=30)
@given(arrays(np.float64, (3, 3, 3, 3), elements=st.floats(-1e3, 1e3)),
       st.floats(-10, 10))
def test_rotation_is_skew(data, alpha):
    g = build_grid(3, 3, 3)
    vel = VectorField.from_interior(g, *data)
    rot = rotate(vel, RotationParams(alpha))
    products = rot.interior_stack() * vel.interior_stack()
    assert abs(products.sum()) <= 1e-13 * (1.0 + np.abs(products).sum())


@settings(max_examples=30)
@given(arrays(np.float64, (2, 3, 3, 3), elements=st.floats(-1e3, 1e3)),
       st.floats(-5, 5), st.floats(-5, 5))
def test_rotation_is_linear(data, a, b):
    g = build_grid(3, 3, 3)
    v1 = VectorField.from_interior(g, data[0], data[1], data[0])
    v2 = VectorField.from_interior(g, data[1], data[0], data[1])
    r = RotationParams(1.3)
    lhs = rotate(v1.combine(a, v2, b), r).interior_stack()
    rhs = a * rotate(v1, r).interior_stack() + b * rotate(v2, r).interior_stack()
    np.testing.assert_allclose(lhs, rhs, atol=1e-9)


def test_matrix_matches_stencil():
    g = build_grid(4, 5, 6)
    rng = np.random.default_rng(0)
    data = rng.normal(size=g.interior_shape)
    f = CellField.from_interior(g, data)
    fill_periodic_ghosts(f)
    f.values[:, :, 0] = -f.values[:, :, 1]
    f.values[:, :, -1] = -f.values[:, :, -2]
    A = laplacian_matrix(g, 'dirichlet')
    np.testing.assert_allclose((A @ data.ravel()).reshape(g.interior_shape),
                               laplacian(f, g).interior, atol=1e-10)


def test_neumann_matrix_annihilates_constants():
    g = build_grid(4, 4, 4)
    A = laplacian_matrix(g, 'neumann')
    assert np.abs(A @ np.ones(A.shape[0])).max() < 1e-12
    assert abs(A - A.T).max() == 0


def test_matrix_is_cached():
    g = build_grid(3, 4, 5)
    assert laplacian_matrix(g) is laplacian_matrix(build_grid(3, 4, 5))


def test_horizontal_laplacian_matrix_matches_roll():
    g = build_grid(5, 6, 3)
    layer = np.random.default_rng(1).normal(size=(g.M, g.N))
    H = horizontal_laplacian_matrix(g)
    np.testing.assert_allclose((H @ layer.ravel()).reshape(g.M, g.N),
                               horizontal_laplacian(layer, g), atol=1e-10)


def test_unknown_wall_rule():
    with pytest.raises(KeyError):
        laplacian_matrix(build_grid(3, 3, 3), 'robin')
