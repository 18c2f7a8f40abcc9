"""两种格式共用的离散算子：7 点拉普拉斯、中心压力梯度、通量散度、旋转项。

所有算子都按单位体积给出，ΔxΔyΔz 权重在组装时再乘。
"""
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from src.numerics.grid import CellField, VectorField


@dataclass(frozen=True)
class RotationParams:
    alpha: float = 1.0   # ω = α e₃


@dataclass
class FaceFluxes:
    """面法向速度通量

    fu[f, j, k]：x 面 x_f = f·dx（f=0..M，f=0 与 f=M 周期等同）
    fv[i, f, k]：y 面
    fw[i, j, f]：z 面 z_f = f·dz（f=0 与 f=L 为壁面，恒为 0）
    """
    grid: object
    fu: np.ndarray = field(default=None)
    fv: np.ndarray = field(default=None)
    fw: np.ndarray = field(default=None)

    def __post_init__(self):
        M, N, L = self.grid.interior_shape
        if self.fu is None:
            self.fu = np.zeros((M + 1, N, L))
        if self.fv is None:
            self.fv = np.zeros((M, N + 1, L))
        if self.fw is None:
            self.fw = np.zeros((M, N, L + 1))

    @classmethod
    def zeros(cls, grid):
        return cls(grid)

    def copy(self):
        return FaceFluxes(self.grid, self.fu.copy(), self.fv.copy(), self.fw.copy())

    def is_finite(self):
        return bool(np.isfinite(self.fu).all() and np.isfinite(self.fv).all()
                    and np.isfinite(self.fw).all())


def combine_fluxes(fluxes, weights):
    """Σ w_i F_i，用于 (3F^{n+1} − 4F^n + F^{n−1})/(2Δt)"""
    grid = fluxes[0].grid
    out = FaceFluxes.zeros(grid)
    for F, w in zip(fluxes, weights):
        if w == 0.0:
            continue
        out.fu += w * F.fu
        out.fv += w * F.fv
        out.fw += w * F.fw
    return out


def laplacian(f, g):
    """标准 7 点拉普拉斯，只写内部单元，幽灵层为 0。调用前需按边界类型填好幽灵。"""
    a = f.values
    c = a[1:-1, 1:-1, 1:-1]
    lap = ((a[2:, 1:-1, 1:-1] - 2 * c + a[:-2, 1:-1, 1:-1]) / g.dx ** 2
           + (a[1:-1, 2:, 1:-1] - 2 * c + a[1:-1, :-2, 1:-1]) / g.dy ** 2
           + (a[1:-1, 1:-1, 2:] - 2 * c + a[1:-1, 1:-1, :-2]) / g.dz ** 2)
    return CellField.from_interior(g, lap)


def horizontal_laplacian(a, g):
    """周期 x、y 方向的二阶差分，a 为内部数组 (M, N, ...)"""
    return ((np.roll(a, -1, axis=0) - 2 * a + np.roll(a, 1, axis=0)) / g.dx ** 2
            + (np.roll(a, -1, axis=1) - 2 * a + np.roll(a, 1, axis=1)) / g.dy ** 2)


def grad_pressure(p, g):
    """中心差分梯度；压力幽灵需已填充（x、y 周期，z 紧致外推）"""
    a = p.values
    gx = (a[2:, 1:-1, 1:-1] - a[:-2, 1:-1, 1:-1]) / (2 * g.dx)
    gy = (a[1:-1, 2:, 1:-1] - a[1:-1, :-2, 1:-1]) / (2 * g.dy)
    gz = (a[1:-1, 1:-1, 2:] - a[1:-1, 1:-1, :-2]) / (2 * g.dz)
    return VectorField.from_interior(g, gx, gy, gz)


def divergence(F, g):
    """通量散度 (ΔF_u)/dx + (ΔF_v)/dy + (ΔF_w)/dz"""
    div = (np.diff(F.fu, axis=0) / g.dx
           + np.diff(F.fv, axis=1) / g.dy
           + np.diff(F.fw, axis=2) / g.dz)
    return CellField.from_interior(g, div)


def rotate(vel, r):
    """ω × v = α(−v₂, v₁, 0)，逐单元（含幽灵层）"""
    g = vel.grid
    return VectorField(CellField(g, -r.alpha * vel.v.values),
                       CellField(g, r.alpha * vel.u.values),
                       CellField(g))


def _periodic_second_difference(n, h):
    main = -2.0 * np.ones(n)
    off = np.ones(n - 1)
    D = sp.diags([off, main, off], [-1, 0, 1], format='lil')
    D[0, n - 1] = 1.0
    D[n - 1, 0] = 1.0
    return D.tocsr() / h ** 2


def _wall_second_difference(n, h, z_bc):
    """z 方向二阶差分，幽灵规则已折叠进首末行

    dirichlet: u_0 = −u_1（对角 −3）
    neumann:   ψ_0 = ψ_1（对角 −1）
    open:      幽灵作为额外未知量另行处理（对角 −2）
    """
    main = -2.0 * np.ones(n)
    end = {'dirichlet': -3.0, 'neumann': -1.0, 'open': -2.0}[z_bc]
    main[0] = end
    main[-1] = end
    off = np.ones(n - 1)
    return sp.diags([off, main, off], [-1, 0, 1], format='csr') / h ** 2


@lru_cache(maxsize=16)
def laplacian_matrix(g, z_bc='dirichlet'):
    """内部单元上的拉普拉斯稀疏矩阵（C 顺序展平 (M, N, L)），按网格缓存，调用方不得原地修改"""
    Ix, Iy, Iz = sp.identity(g.M), sp.identity(g.N), sp.identity(g.L)
    Dx = _periodic_second_difference(g.M, g.dx)
    Dy = _periodic_second_difference(g.N, g.dy)
    Dz = _wall_second_difference(g.L, g.dz, z_bc)
    return (sp.kron(sp.kron(Dx, Iy), Iz)
            + sp.kron(sp.kron(Ix, Dy), Iz)
            + sp.kron(sp.kron(Ix, Iy), Dz)).tocsr()


@lru_cache(maxsize=16)
def horizontal_laplacian_matrix(g):
    """单层 (M, N) 上的周期水平拉普拉斯矩阵"""
    Dx = _periodic_second_difference(g.M, g.dx)
    Dy = _periodic_second_difference(g.N, g.dy)
    return (sp.kron(Dx, sp.identity(g.N)) + sp.kron(sp.identity(g.M), Dy)).tocsr()
