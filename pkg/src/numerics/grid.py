"""通道 (0,lx)×(0,ly)×(0,1)（缺省 lx = ly = 2π）上的均匀控制体网格、场容器和幽灵单元边界规则。

数组下标约定：values[i, j, k]，内部单元 i=1..M, j=1..N, k=1..L，
两侧各一层幽灵单元（i=0 与 i=M+1 等）。
"""
import math
from dataclasses import dataclass, field

import numpy as np

from src.common.errors import GridError


@dataclass(frozen=True)
class GridSpec:
    M: int
    N: int
    L: int
    lx: float = 2 * math.pi
    ly: float = 2 * math.pi
    lz: float = 1.0

    @property
    def dx(self):
        return self.lx / self.M

    @property
    def dy(self):
        return self.ly / self.N

    @property
    def dz(self):
        return self.lz / self.L

    @property
    def shape(self):
        """含幽灵层的数组形状"""
        return (self.M + 2, self.N + 2, self.L + 2)

    @property
    def interior_shape(self):
        return (self.M, self.N, self.L)

    @property
    def cell_volume(self):
        return self.dx * self.dy * self.dz

    @property
    def volume(self):
        return self.lx * self.ly * self.lz

    def x_centers(self):
        """i=0..M+1 的单元中心 (i−1/2)dx（含幽灵）"""
        return (np.arange(self.M + 2) - 0.5) * self.dx

    def y_centers(self):
        return (np.arange(self.N + 2) - 0.5) * self.dy

    def z_centers(self):
        return (np.arange(self.L + 2) - 0.5) * self.dz

    def x_faces(self):
        """x_{i+1/2} = i·dx, i=0..M"""
        return np.arange(self.M + 1) * self.dx

    def y_faces(self):
        return np.arange(self.N + 1) * self.dy

    def z_faces(self):
        return np.arange(self.L + 1) * self.dz

    def center_mesh(self, interior=True):
        """单元中心的三维网格坐标 (X, Y, Z)"""
        x, y, z = self.x_centers(), self.y_centers(), self.z_centers()
        if interior:
            x, y, z = x[1:-1], y[1:-1], z[1:-1]
        return np.meshgrid(x, y, z, indexing='ij')


def build_grid(M, N, L, lx=2 * math.pi, ly=2 * math.pi):
    """构造均匀网格，每个方向至少 3 个内部单元（紧致外推需要 3 个单元）；lx、ly 为水平周期"""
    for name, count in (('M', M), ('N', N), ('L', L)):
        if int(count) != count or count < 3:
            raise GridError(f"{name} 必须是不小于 3 的整数，实际为 {count}")
    for name, length in (('lx', lx), ('ly', ly)):
        if not (length > 0 and math.isfinite(length)):
            raise GridError(f"{name} 必须是有限正数，实际为 {length}")
    return GridSpec(int(M), int(N), int(L), float(lx), float(ly))


@dataclass
class CellField:
    """单元中心标量场（含一层幽灵单元）"""
    grid: GridSpec
    values: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.values is None:
            self.values = np.zeros(self.grid.shape)
        elif self.values.shape != self.grid.shape:
            raise GridError(f"场的形状 {self.values.shape} 与网格 {self.grid.shape} 不符")

    @property
    def interior(self):
        return self.values[1:-1, 1:-1, 1:-1]

    @interior.setter
    def interior(self, data):
        self.values[1:-1, 1:-1, 1:-1] = data

    def copy(self):
        return CellField(self.grid, self.values.copy())

    @classmethod
    def from_interior(cls, grid, data):
        f = cls(grid)
        f.interior = data
        return f

    def mean(self):
        return float(self.interior.mean())


@dataclass
class VectorField:
    """速度场 (u, v, w)，三个分量共享同一网格"""
    u: CellField
    v: CellField
    w: CellField

    def __post_init__(self):
        if not (self.u.grid == self.v.grid == self.w.grid):
            raise GridError("速度分量必须定义在同一网格上")

    @property
    def grid(self):
        return self.u.grid

    @property
    def components(self):
        return (self.u, self.v, self.w)

    @classmethod
    def zeros(cls, grid):
        return cls(CellField(grid), CellField(grid), CellField(grid))

    @classmethod
    def from_interior(cls, grid, u, v, w):
        return cls(CellField.from_interior(grid, u),
                   CellField.from_interior(grid, v),
                   CellField.from_interior(grid, w))

    def copy(self):
        return VectorField(self.u.copy(), self.v.copy(), self.w.copy())

    def combine(self, a, other, b):
        """返回 a·self + b·other（含幽灵层）"""
        return VectorField(*(CellField(self.grid, a * s.values + b * o.values)
                             for s, o in zip(self.components, other.components)))

    def interior_stack(self):
        return np.stack([c.interior for c in self.components])


def fill_periodic_ghosts(f):
    """x、y 方向周期幽灵单元（原地填充并返回 f）

    先填 x 再填 y，y 方向使用包含 x 幽灵的整行，因此角点也一致。
    """
    a = f.values
    M, N = f.grid.M, f.grid.N
    a[0, :, :] = a[M, :, :]
    a[M + 1, :, :] = a[1, :, :]
    a[:, 0, :] = a[:, N, :]
    a[:, N + 1, :] = a[:, 1, :]
    return f


def fill_velocity_wall_ghosts(vel):
    """壁面齐次 Dirichlet：(幽灵 + 第一层)/2 = 0"""
    L = vel.grid.L
    for c in vel.components:
        a = c.values
        a[:, :, 0] = -a[:, :, 1]
        a[:, :, L + 1] = -a[:, :, L]
    return vel


def fill_pressure_wall_ghosts(p):
    """压力壁面幽灵的紧致外推 p0 = 2.5p1 − 2p2 + 0.5p3

    只对 k 的线性剖面精确；对 c·k² 幽灵值偏差为 −c（二次精确的外推是 3p1 − 3p2 + p3）。
    """
    a = p.values
    L = p.grid.L
    a[:, :, 0] = 2.5 * a[:, :, 1] - 2.0 * a[:, :, 2] + 0.5 * a[:, :, 3]
    a[:, :, L + 1] = 2.5 * a[:, :, L] - 2.0 * a[:, :, L - 1] + 0.5 * a[:, :, L - 2]
    return p


def fill_neumann_wall_ghosts(f):
    """ψ 的齐次 Neumann 幽灵：ψ_0 = ψ_1, ψ_{L+1} = ψ_L"""
    a = f.values
    L = f.grid.L
    a[:, :, 0] = a[:, :, 1]
    a[:, :, L + 1] = a[:, :, L]
    return f


def fill_velocity_ghosts(vel):
    """速度的完整幽灵填充（周期 + 壁面 Dirichlet）"""
    for c in vel.components:
        fill_periodic_ghosts(c)
    return fill_velocity_wall_ghosts(vel)


def fill_pressure_ghosts(p):
    fill_periodic_ghosts(p)
    return fill_pressure_wall_ghosts(p)
