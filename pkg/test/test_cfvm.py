import warnings
from functools import partial

import numpy as np
import pytest

from src.common.common import Scheme, RunStatus, MMS_PERIOD
from src.common.errors import ConfigError, StepFailure, PoissonCompatibilityWarning
from src.numerics.cfvm import (SimConfig, StepDiagnostics, BACKWARD_EULER, BDF2,
                               bdf_weights, coefficient_a, momentum_matrix, momentum_step,
                               interpolate_fluxes, solve_poisson_neumann, solve_psi,
                               update_pressure, cfvm_run, startup, initial_state)
from src.numerics.grid import (build_grid, CellField, VectorField, fill_velocity_ghosts,
                               fill_pressure_ghosts)
from src.numerics.mms import ExactSolution, sample_exact, sample_forcing, exact_face_fluxes
from src.numerics.operators import FaceFluxes, laplacian_matrix


def _zero_forcing(g, t):
    return VectorField.zeros(g)


@pytest.mark.parametrize('field, value', [
    ('eps', 0.0), ('dt', -1.0), ('theta', -0.5), ('lin_tol', 0.0),
    ('lin_maxit', 0), ('scheme', 'fd'), ('nfvm_solver', 'cholesky'), ('alpha', float('inf')),
])
def test_config_rejects(field, value):
    with pytest.raises(ConfigError) as exc:
        SimConfig(**{field: value})
    assert exc.value.field == field


def test_config_t_end_before_dt():
    with pytest.raises(ConfigError) as exc:
        SimConfig(dt=0.1, t_end=0.05)
    assert exc.value.field == 't_end'


def test_config_defaults():
    cfg = SimConfig()
    assert cfg.n_steps == 100
    assert cfg.rotation.alpha == 1.0
    assert cfg.to_dict()['scheme'] == Scheme.NFVM


def test_bdf_weights():
    assert bdf_weights(0) == BACKWARD_EULER
    assert bdf_weights(1) == BDF2
    assert sum(BDF2) == 0.0 and sum(BACKWARD_EULER) == 0.0


def test_coefficient_a():
    g = build_grid(10, 10, 10)
    cfg = SimConfig(eps=1e-2, dt=1e-2)
    dx, dy, dz = g.dx, g.dy, g.dz
    expected = 3 * dx * dy * dz / 2e-2 + 2e-2 * (dx * dy / dz + dy * dz / dx + dx * dz / dy)
    assert coefficient_a(cfg, g) == pytest.approx(expected)


def test_momentum_matrix_is_symmetric_and_cached():
    g = build_grid(4, 4, 4)
    A = momentum_matrix(g, 150.0, 1e-2)
    assert abs(A - A.T).max() == 0
    assert A is momentum_matrix(g, 150.0, 1e-2)


def test_zero_state_stays_zero():
    g = build_grid(4, 4, 4)
    cfg = SimConfig(scheme=Scheme.CFVM, dt=0.1, t_end=0.3)
    result = cfvm_run(cfg, g, _zero_forcing)
    assert result.status == RunStatus.OK
    assert len(result.diagnostics) == 3
    assert not result.state.u_n.interior_stack().any()
    assert not result.state.p_n.interior.any()


def test_one_step_from_exact_history(exact_history):
    g = build_grid(20, 20, 20)
    es = ExactSolution(1e-2)
    errors = []
    for dt in (1e-2, 5e-3):
        cfg = SimConfig(eps=1e-2, dt=dt, scheme=Scheme.CFVM)
        st = exact_history(es, g, cfg, 0.5)
        u = momentum_step(st, cfg, g, sample_forcing(es, g, 0.5 + dt))
        exact, _ = sample_exact(es, g, 0.5 + dt)
        errors.append(np.abs(u.interior_stack() - exact.interior_stack()).max())
    assert errors[0] < 5e-2
    assert errors[1] < 0.6 * errors[0]


def test_one_step_error_on_unit_period(exact_history):
    g = build_grid(20, 20, 20, MMS_PERIOD, MMS_PERIOD)
    es = ExactSolution(1e-2)
    cfg = SimConfig(eps=1e-2, dt=1e-2, scheme=Scheme.CFVM)
    st = exact_history(es, g, cfg, 0.5)
    u = momentum_step(st, cfg, g, sample_forcing(es, g, 0.51))
    exact, _ = sample_exact(es, g, 0.51)
    assert np.abs(u.interior_stack() - exact.interior_stack()).max() < 5e-3


def test_momentum_residual_and_iterations(exact_history):
    g = build_grid(20, 20, 20)
    es = ExactSolution(1.0)
    cfg = SimConfig(eps=1.0, scheme=Scheme.CFVM, lin_tol=1e-10)
    st = exact_history(es, g, cfg, 0.5)
    stats = StepDiagnostics(1, 0.51)
    momentum_step(st, cfg, g, sample_forcing(es, g, 0.51), stats)
    assert stats.momentum_residual <= 1e-10
    assert 0 < stats.momentum_iterations <= 200


def test_startup_uses_initial_velocity():
    g = build_grid(4, 4, 4)
    u0 = VectorField.from_interior(g, *(np.ones(g.interior_shape) for _ in range(3)))
    st = startup(initial_state(g, u0), SimConfig(), g)
    assert st.step_index == 0
    np.testing.assert_array_equal(st.u_nm1.u.values, st.u_n.u.values)
    assert st.u_n.u.values[1, 1, 0] == -1.0
    assert not st.p_n.values.any()


def test_fluxes_are_neighbour_averages_without_relaxation():
    g = build_grid(5, 4, 6)
    rng = np.random.default_rng(0)
    u = fill_velocity_ghosts(VectorField.from_interior(g, *rng.normal(size=(3,) + g.interior_shape)))
    p = CellField.from_interior(g, rng.normal(size=g.interior_shape))
    F = interpolate_fluxes(u, p, SimConfig(theta=0.0), g)
    U, W = u.u.interior, u.w.interior
    np.testing.assert_allclose(F.fu[1], 0.5 * (U[0] + U[1]))
    np.testing.assert_allclose(F.fu[0], F.fu[-1])
    np.testing.assert_allclose(F.fw[:, :, 2], 0.5 * (W[:, :, 1] + W[:, :, 2]))
    assert not F.fw[:, :, [0, -1]].any()


def test_relaxation_vanishes_for_quadratic_pressure():
    g = build_grid(6, 6, 8)
    _, _, Z = g.center_mesh()
    u = VectorField.zeros(g)
    p = CellField.from_interior(g, 1.0 + Z + Z ** 2)
    F = interpolate_fluxes(u, p, SimConfig(theta=1.0), g)
    assert np.abs(F.fw).max() < 1e-10
    assert np.abs(F.fu).max() < 1e-12


def test_relaxation_skips_faces_next_to_walls():
    g = build_grid(4, 4, 8)
    _, _, Z = g.center_mesh()
    p = CellField.from_interior(g, Z ** 3)
    F = interpolate_fluxes(VectorField.zeros(g), p, SimConfig(theta=1.0), g)
    assert not F.fw[:, :, [0, 1, g.L - 1, g.L]].any()
    # 三次剖面的三阶差分为常数 6Δz³
    expected = g.dx * g.dy / (4 * coefficient_a(SimConfig(theta=1.0), g)) * 6 * g.dz ** 3
    np.testing.assert_allclose(F.fw[:, :, 2:g.L - 1], expected, rtol=1e-8)


def test_gauge_shift_leaves_velocity_unchanged(exact_history):
    g = build_grid(8, 8, 8)
    es = ExactSolution(1e-2)
    cfg = SimConfig(eps=1e-2, dt=1e-2, scheme=Scheme.CFVM)
    f = sample_forcing(es, g, 0.51)
    u_ref = momentum_step(exact_history(es, g, cfg, 0.5), cfg, g, f)
    st = exact_history(es, g, cfg, 0.5)
    st.p_n = fill_pressure_ghosts(CellField.from_interior(g, st.p_n.interior + 5.0))
    st.p_nm1 = fill_pressure_ghosts(CellField.from_interior(g, st.p_nm1.interior + 5.0))
    u_shifted = momentum_step(st, cfg, g, f)
    np.testing.assert_allclose(u_shifted.interior_stack(), u_ref.interior_stack(), rtol=0, atol=1e-9)


def test_poisson_recovers_periodic_eigenfunction():
    g = build_grid(16, 4, 4)
    X, _, _ = g.center_mesh()
    lam = (2 - 2 * np.cos(g.dx)) / g.dx ** 2
    psi = solve_poisson_neumann(-lam * np.cos(X), g, 1e-12)
    np.testing.assert_allclose(psi.interior, np.cos(X) - np.cos(X).mean(), atol=1e-8)


def test_poisson_solution_is_zero_mean_and_consistent():
    g = build_grid(6, 6, 6)
    rng = np.random.default_rng(1)
    rhs = rng.normal(size=g.interior_shape)
    rhs -= rhs.mean()
    psi = solve_poisson_neumann(rhs, g, 1e-10)
    assert abs(psi.mean()) < 1e-12
    lap = (laplacian_matrix(g, 'neumann') @ psi.interior.ravel()).reshape(g.interior_shape)
    assert np.abs(lap - rhs).max() < 1e-7
    assert np.all(psi.values[:, :, 0] == psi.values[:, :, 1])


def test_poisson_compatibility_warning():
    g = build_grid(4, 4, 4)
    rhs = np.ones(g.interior_shape)
    with pytest.warns(PoissonCompatibilityWarning):
        psi = solve_poisson_neumann(rhs, g, 1e-10)
    assert not psi.interior.any()


def test_psi_of_divergence_free_fluxes_is_zero():
    g = build_grid(8, 8, 8)
    es = ExactSolution(1e-2)
    F1, F0 = exact_face_fluxes(es, g, 0.2), exact_face_fluxes(es, g, 0.1)
    with warnings.catch_warnings():
        warnings.simplefilter('error')
        psi = solve_psi(F1, F0, F0, g, 1e-10, 0.1, BDF2)
    assert not psi.interior.any()


def test_pressure_update_is_mean_free(exact_history):
    g = build_grid(5, 5, 5)
    es = ExactSolution(1e-2)
    cfg = SimConfig(dt=0.1)
    st = exact_history(es, g, cfg, 0.5)
    psi = CellField.from_interior(g, np.full(g.interior_shape, 3.0))
    p = update_pressure(psi, st, st.u_n, FaceFluxes.zeros(g), g, cfg)
    assert abs(p.mean()) < 1e-14


def test_moderate_eps_stable_without_relaxation():
    g = build_grid(10, 10, 10)
    es = ExactSolution(1e-2)
    cfg = SimConfig(eps=1e-2, theta=0.0, scheme=Scheme.CFVM)
    result = cfvm_run(cfg, g, partial(sample_forcing, es), es)
    assert result.status == RunStatus.OK
    assert len(result.diagnostics) == cfg.n_steps
    assert result.last.time == pytest.approx(1.0)
    assert np.isfinite(result.vel_l2) and np.isfinite(result.p_l2)
    assert result.vel_rel is not None and result.p_rel is not None


def test_first_step_error_scales_with_dt():
    g = build_grid(10, 10, 10)
    es = ExactSolution(1e-2)
    errors = []
    for dt in (2e-2, 1e-2):
        cfg = SimConfig(eps=1e-2, dt=dt, t_end=dt, scheme=Scheme.CFVM)
        errors.append(cfvm_run(cfg, g, partial(sample_forcing, es), es).vel_l2)
    assert errors[1] < 0.6 * errors[0]


def test_blowup_keeps_last_diagnostics():
    g = build_grid(4, 4, 4)

    def huge(grid, t):
        return VectorField.from_interior(grid, np.full(grid.interior_shape, 1e40),
                                         np.zeros(grid.interior_shape), np.zeros(grid.interior_shape))

    result = cfvm_run(SimConfig(dt=0.1, t_end=1.0), g, huge)
    assert result.status == RunStatus.BLOWUP
    assert len(result.diagnostics) == 1
    assert result.last.vel_norm > 1e30


def test_non_finite_forcing_is_blowup_with_prior_diagnostics():
    g = build_grid(4, 4, 4)

    def broken_after_two_steps(grid, t):
        value = np.nan if t > 0.25 else 1.0
        return VectorField.from_interior(grid, *(np.full(grid.interior_shape, value) for _ in range(3)))

    result = cfvm_run(SimConfig(dt=0.1, t_end=0.5), g, broken_after_two_steps)
    assert result.status == RunStatus.BLOWUP
    assert [d.step for d in result.diagnostics] == [1, 2]
    assert result.last.time == pytest.approx(0.2)
    assert '第 3 步' in result.message


def test_unconverged_solve_becomes_step_failure():
    g = build_grid(6, 6, 6)
    es = ExactSolution(1e-2)
    cfg = SimConfig(dt=0.1, t_end=0.3, lin_tol=1e-14, lin_maxit=1)
    with pytest.raises(StepFailure) as exc:
        cfvm_run(cfg, g, partial(sample_forcing, es), es)
    assert exc.value.step == 1


def test_divergence_diagnostic_recorded():
    g = build_grid(6, 6, 6)
    es = ExactSolution(1e-2)
    result = cfvm_run(SimConfig(dt=0.05, t_end=0.1, scheme=Scheme.CFVM), g,
                      partial(sample_forcing, es), es)
    d = result.last
    assert d.step == 2
    assert d.div_l2 >= 0.0
    assert d.psi_residual <= 1e-10
    assert d.p_l2_raw >= d.p_l2 - 1e-15
