"""边界层校正子增强格式（NFVM）：首末层单元用近似校正子剖面加权，r 节点作为额外未知量。

壁面幽灵由 u_{i,j,0} = 2r_{i,j,0} − u_{i,j,1} 给出（顶壁同理）。每个 (i, j) 的近壁加权残差
关系（除以 ∫₀ʰφ̃ 归一化后）为

    c0·u1 − εκ(u2 − 3u1 + 2r) − εΔ_H u1 = b1,   κ = φ̃(h/2)/(h·∫₀ʰφ̃)

b1 与第一层单元动量方程右端相同。剖面为常数时 κ = 1/h²，该关系与单元方程重合，
系统奇异，此时退回经典 Dirichlet 闭合（r = 0）。只增强水平分量 u、v，w 保持 Dirichlet。
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.special import erf

from src.common.common import Scheme
from src.numerics.cfvm import (momentum_rhs, momentum_matrix, solve_components, run_scheme)
from src.numerics.grid import VectorField, fill_periodic_ghosts, fill_velocity_ghosts
from src.numerics.operators import horizontal_laplacian, horizontal_laplacian_matrix
from src.numerics.solvers import solve_general

logger = logging.getLogger(__name__)

BOTTOM = 'bottom'
TOP = 'top'


@dataclass(frozen=True)
class ProfileIntegrals:
    """近似剖面 φ̃(z) = −exp(−z²/(4εt)) 在第一层单元上的积分与点值"""
    I0h: float
    phi_0: float
    phi_h2: float
    phi_h: float
    I_zgrad_lower: float
    I_zgrad_upper: float
    h: float
    flat_ratio: float = math.inf   # εt/h²

    @property
    def kappa(self):
        return self.phi_h2 / (self.h * self.I0h)

    @property
    def closure_gap(self):
        """1 − κh²，为 0 时近壁关系与单元方程重合"""
        return 1.0 - self.kappa * self.h ** 2

    @classmethod
    def flat(cls, h):
        """常数剖面 φ̃ ≡ −1"""
        return cls(-h, -1.0, -1.0, -1.0, 0.0, 0.0, h)


def profile_integrals(eps, t, h):
    if t <= 0:
        raise ValueError("剖面积分要求 t > 0")
    if h <= 0:
        raise ValueError("剖面积分要求 h > 0")
    s = math.sqrt(eps * t)
    I0h = -math.sqrt(math.pi) * s * erf(h / (2 * s))
    phi_0 = -1.0
    phi_h2 = -math.exp(-h ** 2 / (16 * eps * t))
    phi_h = -math.exp(-h ** 2 / (4 * eps * t))
    return ProfileIntegrals(I0h, phi_0, phi_h2, phi_h, phi_h2 - phi_0, phi_h - phi_h2, h,
                            eps * t / h ** 2)


@dataclass
class EnrichmentData:
    """r 节点（两个水平分量，形状 (2, M, N)）及本步使用的剖面"""
    r_bottom: np.ndarray
    r_top: np.ndarray
    profile: ProfileIntegrals
    enriched: bool = True

    @classmethod
    def zeros(cls, g, profile):
        return cls(np.zeros((2, g.M, g.N)), np.zeros((2, g.M, g.N)), profile, False)


@dataclass
class NearWallRelation:
    """每个 (i, j) 的近壁关系系数（已除以 ∫₀ʰφ̃）及两个水平分量的右端 (2, M, N)

    weight 为归一化前的 ∫₀ʰφ̃。
    """
    layer: str
    c0: float
    eps: float
    kappa: float
    rhs: np.ndarray
    weight: float = 1.0

    def cells(self, g):
        """(第一层, 第二层) 的 k 下标（0 起）"""
        return (0, 1) if self.layer == BOTTOM else (g.L - 1, g.L - 2)

    @property
    def coef_u1(self):
        return self.c0 + 3 * self.eps * self.kappa

    @property
    def coef_u2(self):
        return -self.eps * self.kappa

    @property
    def coef_r(self):
        return -2 * self.eps * self.kappa

    def residual(self, u, r, g):
        """u 为 (2, M, N, L) 内部数组，r 为 (2, M, N)；返回逐点残差"""
        k1, k2 = self.cells(g)
        u1, u2 = u[..., k1], u[..., k2]
        lateral = np.stack([horizontal_laplacian(c, g) for c in u1])
        return (self.coef_u1 * u1 + self.coef_u2 * u2 + self.coef_r * r
                - self.eps * lateral - self.rhs)

    def weighted_residual(self, u, r, g):
        """未归一化的残差（乘回 |∫₀ʰφ̃|），随网格加密按 O(h) 减小"""
        return abs(self.weight) * self.residual(u, r, g)

    def rows(self, g):
        """(对 u 的块 (MN × MNL), 对 r 的块 (MN × MN))"""
        k1, k2 = self.cells(g)
        mn = g.M * g.N
        P1, P2 = layer_selector(g, k1), layer_selector(g, k2)
        H = horizontal_laplacian_matrix(g)
        block_u = self.coef_u1 * P1 + self.coef_u2 * P2 - self.eps * (H @ P1)
        block_r = self.coef_r * sp.identity(mn, format='csr')
        return block_u.tocsr(), block_r


def layer_selector(g, k):
    """从 C 顺序展平的 (M, N, L) 中取出第 k 层 (MN × MNL)"""
    mn = g.M * g.N
    cols = np.arange(mn) * g.L + k
    return sp.csr_matrix((np.ones(mn), (np.arange(mn), cols)), shape=(mn, mn * g.L))


def build_relation(layer, c0, eps, profile, b, g):
    k1 = 0 if layer == BOTTOM else g.L - 1
    return NearWallRelation(layer, c0, eps, profile.kappa, b[:2, :, :, k1].copy(), profile.I0h)


def near_wall_equation(st, cfg, g, f_np1, layer=BOTTOM, profile=None):
    """组装 t_{n+1} 时刻第一层（或最后一层）单元的近壁加权残差关系

    profile 缺省时按 t_{n+1} 计算（剖面在一步内冻结）。
    """
    t_new = (st.step_index + 1) * cfg.dt
    profile = profile or profile_integrals(cfg.eps, t_new, g.dz)
    c0, b = momentum_rhs(st, cfg, g, f_np1)
    return build_relation(layer, c0, cfg.eps, profile, b, g)


def augmented_matrix(g, c0, eps, bottom, top):
    """[A_cell  C_b  C_t; R_b  D_b  0; R_t  0  D_t]，未知量顺序 u, r_bottom, r_top"""
    h2 = g.dz ** 2
    A = momentum_matrix(g, c0, eps)
    # 第一层（最后一层）单元方程中幽灵 2r − u1 里 r 的贡献
    C_b = layer_selector(g, 0).T * (-2 * eps / h2)
    C_t = layer_selector(g, g.L - 1).T * (-2 * eps / h2)
    Rb_u, Rb_r = bottom.rows(g)
    Rt_u, Rt_r = top.rows(g)
    return sp.bmat([[A, C_b, C_t],
                    [Rb_u, Rb_r, None],
                    [Rt_u, None, Rt_r]], format='csc')


def nfvm_momentum_step(st, cfg, g, f_np1, stats=None):
    """增强格式的动量步；w 分量与经典格式相同"""
    t_new = (st.step_index + 1) * cfg.dt
    profile = profile_integrals(cfg.eps, t_new, g.dz)
    c0, b = momentum_rhs(st, cfg, g, f_np1)
    M, N, L = g.interior_shape
    mn, n = M * N, M * N * L

    if profile.flat_ratio > cfg.nfvm_flat_ratio:
        # 剖面在第一层单元内已近似常数，近壁关系退化为单元方程
        parts, info = solve_components(momentum_matrix(g, c0, cfg.eps), b, cfg, g)
        vel = fill_velocity_ghosts(VectorField.from_interior(g, *parts))
        st.enrichment = EnrichmentData.zeros(g, profile)
        if stats is not None:
            stats.momentum_iterations, stats.momentum_residual = info
            stats.closure_gap = profile.closure_gap
        return vel

    bottom = build_relation(BOTTOM, c0, cfg.eps, profile, b, g)
    top = build_relation(TOP, c0, cfg.eps, profile, b, g)
    A = augmented_matrix(g, c0, cfg.eps, bottom, top)
    rhs = np.column_stack([np.concatenate([b[c].ravel(), b[c, :, :, 0].ravel(), b[c, :, :, L - 1].ravel()])
                           for c in range(2)])
    x, info = solve_general(A, rhs, cfg.lin_tol, cfg.lin_maxit, cfg.nfvm_solver)
    horizontal = [x[:n, c].reshape(M, N, L) for c in range(2)]
    r_bottom = np.stack([x[n:n + mn, c].reshape(M, N) for c in range(2)])
    r_top = np.stack([x[n + mn:, c].reshape(M, N) for c in range(2)])

    w, w_info = solve_components(momentum_matrix(g, c0, cfg.eps), b[2:], cfg, g)
    vel = VectorField.from_interior(g, horizontal[0], horizontal[1], w[0])
    apply_enriched_ghosts(vel, r_bottom, r_top)
    st.enrichment = EnrichmentData(r_bottom, r_top, profile)

    if stats is not None:
        stats.momentum_iterations = max(info.iterations, w_info[0])
        stats.momentum_residual = max(info.residual, w_info[1])
        stats.closure_gap = profile.closure_gap
        u = np.stack(horizontal)
        stats.near_wall_residual = float(max(np.abs(bottom.residual(u, r_bottom, g)).max(),
                                             np.abs(top.residual(u, r_top, g)).max()))
    return vel


def fill_periodic_velocity(vel):
    for c in vel.components:
        fill_periodic_ghosts(c)
    return vel


def apply_enriched_ghosts(vel, r_bottom, r_top):
    """u、v 的壁面幽灵取 2r − u1，w 取 Dirichlet 幽灵，最后补齐周期幽灵"""
    L = vel.grid.L
    w = vel.w.values
    w[:, :, 0] = -w[:, :, 1]
    w[:, :, L + 1] = -w[:, :, L]
    for c, comp in enumerate((vel.u, vel.v)):
        a = comp.values
        a[1:-1, 1:-1, 0] = 2 * r_bottom[c] - a[1:-1, 1:-1, 1]
        a[1:-1, 1:-1, L + 1] = 2 * r_top[c] - a[1:-1, 1:-1, L]
    return fill_periodic_velocity(vel)


def r_identity_error(vel, enrichment):
    """max |r − (幽灵 + 第一层)/2|，按构造应为舍入量级"""
    L = vel.grid.L
    worst = 0.0
    for c, comp in enumerate((vel.u, vel.v)):
        a = comp.values[1:-1, 1:-1]
        worst = max(worst,
                    float(np.abs(enrichment.r_bottom[c] - 0.5 * (a[:, :, 0] + a[:, :, 1])).max()),
                    float(np.abs(enrichment.r_top[c] - 0.5 * (a[:, :, L + 1] + a[:, :, L])).max()))
    return worst


def nfvm_run(cfg, g, forcing, exact=None, u0=None):
    return run_scheme(cfg, g, forcing, exact, nfvm_momentum_step, u0, Scheme.NFVM)
