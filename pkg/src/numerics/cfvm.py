"""经典同位网格有限体积格式（CFVM）：BDF2 动量步、ψ 压力泊松方程、压力更新、松弛动量插值通量。

单步流程：momentum_step → interpolate_fluxes → solve_psi → update_pressure → 历史量轮换。
run_scheme 是两种格式共用的时间推进循环，动量步以参数传入。
"""
import logging
import math
import time as _time
import warnings
from dataclasses import dataclass, field, asdict
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from src.common.common import Scheme, RunStatus, BLOWUP_NORM
from src.common.errors import (ConfigError, LayerFVError, LinearSolverError, StepFailure,
                               PoissonCompatibilityWarning)
from src.numerics.grid import (CellField, VectorField, fill_velocity_ghosts, fill_pressure_ghosts,
                               fill_periodic_ghosts, fill_neumann_wall_ghosts)
from src.numerics.operators import (FaceFluxes, RotationParams, combine_fluxes, divergence,
                                    grad_pressure, rotate, laplacian_matrix)
from src.numerics.mms import l2_error, l2_norm, exact_norm
from src.numerics.solvers import solve_spd

logger = logging.getLogger(__name__)

# BDF 权重 (w0, w1, w2)：∂u/∂t ≈ (w0 u^{n+1} + w1 u^n + w2 u^{n−1})/Δt
BACKWARD_EULER = (1.0, -1.0, 0.0)
BDF2 = (1.5, -2.0, 0.5)


@dataclass(frozen=True)
class SimConfig:
    eps: float = 1e-2
    alpha: float = 1.0
    dt: float = 1e-2
    t_end: float = 1.0
    theta: float = 1.0
    scheme: str = Scheme.NFVM
    lin_tol: float = 1e-10
    lin_maxit: int = 2000
    nfvm_flat_ratio: float = 1e3   # ε t/h² 超过此值时剖面视为常数，近壁关系退化
    nfvm_solver: str = 'direct'    # direct | gmres

    def __post_init__(self):
        self.validate()

    def validate(self):
        checks = (
            ('eps', self.eps > 0, "必须为正数"),
            ('dt', self.dt > 0, "必须为正数"),
            ('t_end', self.t_end >= self.dt, "不能小于时间步长 dt"),
            ('theta', self.theta >= 0, "不能为负"),
            ('lin_tol', self.lin_tol > 0, "必须为正数"),
            ('lin_maxit', self.lin_maxit >= 1, "至少为 1"),
            ('alpha', math.isfinite(self.alpha), "必须是有限数"),
            ('scheme', self.scheme in Scheme.ALL, f"只能是 {', '.join(Scheme.ALL)}"),
            ('nfvm_solver', self.nfvm_solver in ('direct', 'gmres'), "只能是 direct 或 gmres"),
        )
        for name, ok, message in checks:
            if not ok:
                raise ConfigError(name, f"{message}，实际为 {getattr(self, name)}")
        return self

    @property
    def n_steps(self):
        return int(round(self.t_end / self.dt))

    @property
    def rotation(self):
        return RotationParams(self.alpha)

    def to_dict(self):
        return asdict(self)


@dataclass
class SchemeState:
    """时间推进的全部历史量；time = step_index·dt"""
    grid: object
    u_np1: VectorField
    u_n: VectorField
    u_nm1: VectorField
    p_n: CellField
    p_nm1: CellField
    F_np1: FaceFluxes
    F_n: FaceFluxes
    F_nm1: FaceFluxes
    step_index: int = 0
    time: float = 0.0
    psi: CellField = None
    enrichment: object = None   # NFVM 的 r 节点与剖面积分

    def advance(self, u_new, p_new, F_new, dt):
        self.u_nm1, self.u_n, self.u_np1 = self.u_n, u_new, u_new
        self.p_nm1, self.p_n = self.p_n, p_new
        self.F_nm1, self.F_n, self.F_np1 = self.F_n, F_new, F_new
        self.step_index += 1
        self.time = self.step_index * dt
        return self

    def is_finite(self):
        return bool(all(np.isfinite(c.values).all() for c in self.u_n.components)
                    and np.isfinite(self.p_n.values).all())


@dataclass
class StepDiagnostics:
    step: int
    time: float
    vel_l2: float = None
    p_l2: float = None
    p_l2_raw: float = None
    vel_norm: float = 0.0
    div_l2: float = 0.0
    momentum_iterations: int = 0
    momentum_residual: float = 0.0
    psi_iterations: int = 0
    psi_residual: float = 0.0
    psi_rhs_mean: float = 0.0
    closure_gap: float = None
    near_wall_residual: float = None

    def to_dict(self):
        return asdict(self)


@dataclass
class RunResult:
    scheme: str
    state: SchemeState
    status: str = RunStatus.OK
    diagnostics: list = field(default_factory=list)
    vel_rel: float = None
    p_rel: float = None
    wall_clock_s: float = 0.0
    message: str = ''

    @property
    def last(self):
        return self.diagnostics[-1] if self.diagnostics else None

    @property
    def vel_l2(self):
        return self.last.vel_l2 if self.last else None

    @property
    def p_l2(self):
        return self.last.p_l2 if self.last else None

    @property
    def p_l2_raw(self):
        return self.last.p_l2_raw if self.last else None


def coefficient_a(cfg, g):
    """通量插值中的 a = 3ΔxΔyΔz/(2Δt) + 2ε(ΔxΔy/Δz + ΔyΔz/Δx + ΔxΔz/Δy)"""
    dx, dy, dz = g.dx, g.dy, g.dz
    return (3 * dx * dy * dz / (2 * cfg.dt)
            + 2 * cfg.eps * (dx * dy / dz + dy * dz / dx + dx * dz / dy))


def bdf_weights(step_index):
    """第一步为后向 Euler（u^{−1} 未定义），其后为 BDF2"""
    return BACKWARD_EULER if step_index == 0 else BDF2


@lru_cache(maxsize=8)
def momentum_matrix(g, c0, eps):
    """c0·I − εΔ_h，壁面 Dirichlet 幽灵已折叠（对称正定）"""
    n = g.M * g.N * g.L
    return (c0 * sp.identity(n, format='csr') - eps * laplacian_matrix(g, 'dirichlet')).tocsr()


def startup(st, cfg, g):
    """u^{−1} := u⁰，p⁰ = p^{−1} := 0，通量历史由 u⁰ 线性插值得到"""
    u0 = fill_velocity_ghosts(st.u_n.copy())
    zero_p = CellField(g)
    F0 = interpolate_fluxes(u0, zero_p, cfg, g)
    return SchemeState(g, u0, u0, u0.copy(), zero_p, zero_p.copy(), F0, F0, F0.copy(),
                       step_index=0, time=0.0, psi=CellField(g))


def initial_state(g, u0=None):
    """包装初始速度（默认 0）供 startup 使用"""
    u0 = u0 if u0 is not None else VectorField.zeros(g)
    zero_p = CellField(g)
    F = FaceFluxes.zeros(g)
    return SchemeState(g, u0, u0, u0, zero_p, zero_p, F, F, F)


def momentum_rhs(st, cfg, g, f_np1):
    """动量方程右端（单位体积），返回 (c0, b)，b 形状 (3, M, N, L)

    b = f^{n+1} − (w1 u^n + w2 u^{n−1})/Δt − ω×(2u^n − u^{n−1}) − ∇(2p^n − p^{n−1})
    """
    w0, w1, w2 = bdf_weights(st.step_index)
    u_star = st.u_n.combine(2.0, st.u_nm1, -1.0)
    rot = rotate(u_star, cfg.rotation)
    p_star = fill_pressure_ghosts(CellField(g, 2.0 * st.p_n.values - st.p_nm1.values))
    grad = grad_pressure(p_star, g)
    b = (f_np1.interior_stack()
         - (w1 * st.u_n.interior_stack() + w2 * st.u_nm1.interior_stack()) / cfg.dt
         - rot.interior_stack()
         - grad.interior_stack())
    return w0 / cfg.dt, b


def solve_components(A, b, cfg, g):
    """逐分量求解对称正定系统，返回内部数组列表与 (最大迭代数, 最大残差)"""
    shape = g.interior_shape
    out, iters, res = [], 0, 0.0
    for rhs in b:
        x, info = solve_spd(A, rhs.ravel(), cfg.lin_tol, cfg.lin_maxit)
        out.append(x.reshape(shape))
        iters = max(iters, info.iterations)
        res = max(res, info.residual)
    return out, (iters, res)


def momentum_step(st, cfg, g, f_np1, stats=None):
    """隐式动量步：(c0 − εΔ_h)u^{n+1} = b，三个分量各自用共轭梯度求解"""
    c0, b = momentum_rhs(st, cfg, g, f_np1)
    A = momentum_matrix(g, c0, cfg.eps)
    parts, info = solve_components(A, b, cfg, g)
    if stats is not None:
        stats.momentum_iterations, stats.momentum_residual = info
    return fill_velocity_ghosts(VectorField.from_interior(g, *parts))


def _third_difference(P, axis):
    """面 i+1/2 处 p_{i+2} − 3p_{i+1} + 3p_i − p_{i−1}（周期方向）"""
    return (np.roll(P, -2, axis) - 3 * np.roll(P, -1, axis)
            + 3 * P - np.roll(P, 1, axis))


def interpolate_fluxes(u_np1, p_n, cfg, g):
    """相邻单元速度平均 + θ·面积/(4a)·压力三阶差分；壁面 z 面通量为 0

    z 方向的三阶差分只加在 f=2..L−2 的面上，紧邻壁面的两个面（f=1、f=L−1）只取平均，
    不使用压力幽灵。
    """
    a = coefficient_a(cfg, g)
    P = p_n.interior
    U, V, W = (c.interior for c in u_np1.components)

    right = 0.5 * (U + np.roll(U, -1, 0)) + cfg.theta * g.dy * g.dz / (4 * a) * _third_difference(P, 0)
    fu = np.concatenate([right[-1:], right], axis=0)

    right = 0.5 * (V + np.roll(V, -1, 1)) + cfg.theta * g.dx * g.dz / (4 * a) * _third_difference(P, 1)
    fv = np.concatenate([right[:, -1:], right], axis=1)

    L = g.L
    fw = np.zeros((g.M, g.N, L + 1))
    fw[:, :, 1:L] = 0.5 * (W[:, :, :-1] + W[:, :, 1:])
    third = P[:, :, 3:] - 3 * P[:, :, 2:-1] + 3 * P[:, :, 1:-2] - P[:, :, :-3]
    fw[:, :, 2:L - 1] += cfg.theta * g.dx * g.dy / (4 * a) * third
    return FaceFluxes(g, fu, fv, fw)


def solve_poisson_neumann(rhs, g, tol, maxit=2000, stats=None):
    """Δ_h ψ = rhs，x、y 周期，z 齐次 Neumann；右端先减均值，解归一到零均值

    右端均值超过 1e3·tol 时发出 PoissonCompatibilityWarning。
    """
    mean = float(rhs.mean())
    if abs(mean) > 1e3 * tol:
        message = f"ψ 方程右端均值 {mean:.3e} 超过相容性阈值"
        logger.debug(message)
        warnings.warn(message, PoissonCompatibilityWarning, stacklevel=2)
    b = -(rhs - mean).ravel()
    A = -laplacian_matrix(g, 'neumann')
    x, info = solve_spd(A, b, tol, maxit)
    x = x - x.mean()
    if stats is not None:
        stats.psi_iterations, stats.psi_residual, stats.psi_rhs_mean = info.iterations, info.residual, mean
    psi = CellField.from_interior(g, x.reshape(g.interior_shape))
    fill_periodic_ghosts(psi)
    return fill_neumann_wall_ghosts(psi)


def solve_psi(F_np1, F_n, F_nm1, g, tol, dt, weights=BDF2, maxit=2000, stats=None):
    """ψ 的右端为 (w0 F^{n+1} + w1 F^n + w2 F^{n−1})/Δt 的散度"""
    combo = combine_fluxes([F_np1, F_n, F_nm1], [w / dt for w in weights])
    rhs = divergence(combo, g).interior
    return solve_poisson_neumann(rhs, g, tol, maxit, stats)


def update_pressure(psi, st, u_np1, F_np1, g, cfg):
    """p^{n+1} = ψ + 2p^n − p^{n−1} − ε div F^{n+1}，再减去均值"""
    div = divergence(F_np1, g).interior
    p = psi.interior + 2 * st.p_n.interior - st.p_nm1.interior - cfg.eps * div
    return fill_pressure_ghosts(CellField.from_interior(g, p - p.mean()))


def _mark_blowup(result, scheme, step, t_new, reason):
    result.status = RunStatus.BLOWUP
    result.message = f"第 {step} 步{reason}"
    logger.warning("%s 在 t=%.3f 发散（%s）", scheme, t_new, reason)


def run_scheme(cfg, g, forcing, exact=None, step_fn=momentum_step, u0=None, scheme=Scheme.CFVM):
    """通用时间推进循环

    forcing(g, t) 返回单元中心的源项 VectorField；exact 为 ExactSolution 时逐步记录 L² 误差。
    源项、求解残差或场出现非有限值，或速度范数超过 BLOWUP_NORM 时停止并返回 blowup 状态，
    diagnostics 保留此前各步；其它失败包装为 StepFailure。
    """
    started = _time.perf_counter()
    st = startup(initial_state(g, u0), cfg, g)
    result = RunResult(scheme, st)
    for _ in range(cfg.n_steps):
        step = st.step_index + 1
        t_new = step * cfg.dt
        stats = StepDiagnostics(step, t_new)
        try:
            f_np1 = forcing(g, t_new)
            if not np.isfinite(f_np1.interior_stack()).all():
                _mark_blowup(result, scheme, step, t_new, "源项出现非有限值")
                break
            u_new = step_fn(st, cfg, g, f_np1, stats)
            F_new = interpolate_fluxes(u_new, st.p_n, cfg, g)
            psi = solve_psi(F_new, st.F_n, st.F_nm1, g, cfg.lin_tol, cfg.dt,
                            bdf_weights(st.step_index), cfg.lin_maxit, stats)
            p_new = update_pressure(psi, st, u_new, F_new, g, cfg)
        except LinearSolverError as exc:
            if math.isfinite(exc.residual):
                raise StepFailure(step, exc) from exc
            _mark_blowup(result, scheme, step, t_new, f"求解出现非有限值：{exc}")
            break
        except LayerFVError as exc:
            raise StepFailure(step, exc) from exc

        vel_norm = l2_norm(u_new.interior_stack(), g)
        finite = (np.isfinite(vel_norm) and np.isfinite(p_new.values).all()
                  and F_new.is_finite())
        if not finite:
            _mark_blowup(result, scheme, step, t_new, "场出现非有限值")
            break

        st.psi = psi
        st.advance(u_new, p_new, F_new, cfg.dt)
        stats.vel_norm = vel_norm
        stats.div_l2 = l2_norm(divergence(F_new, g).interior, g)
        if exact is not None:
            stats.vel_l2 = l2_error(u_new, exact, t_new, g)
            stats.p_l2 = l2_error(p_new, exact, t_new, g)
            stats.p_l2_raw = l2_error(p_new, exact, t_new, g, centered=False)
        result.diagnostics.append(stats)
        logger.debug("%s step=%d t=%.3f |u|=%.4e div=%.3e err_u=%s", scheme, step, t_new,
                     vel_norm, stats.div_l2, stats.vel_l2)

        if vel_norm > BLOWUP_NORM:
            result.status = RunStatus.BLOWUP
            result.message = f"第 {step} 步速度范数 {vel_norm:.3e} 超过阈值"
            logger.warning("%s 在 t=%.3f 发散（|u|=%.3e）", scheme, t_new, vel_norm)
            break

    if exact is not None and result.diagnostics:
        t_last = result.last.time
        result.vel_rel = result.last.vel_l2 / exact_norm(exact, t_last, g, 'velocity')
        result.p_rel = result.last.p_l2 / exact_norm(exact, t_last, g, 'pressure')
    result.wall_clock_s = _time.perf_counter() - started
    return result


def cfvm_run(cfg, g, forcing, exact=None, u0=None):
    return run_scheme(cfg, g, forcing, exact, momentum_step, u0, Scheme.CFVM)
