"""人工解：带两侧壁面边界层的旋转 Stokes 精确解、对应源项以及离散 L² 误差。

u = t·sin(2πy)·G(z), v = t·sin(2πx)·G(z), w = 0,
p = t·cos(2πx)·cos(2πy)·cos(πz),
G(z) = B(z/δ)·B((1−z)/δ), B(s) = 1 − e^{−s}cos(s), δ = √ε。

水平方向以 1 为周期，误差算例使用 lx = ly = MMS_PERIOD 的网格。
"""
import math
from dataclasses import dataclass

import numpy as np

from src.numerics.grid import (VectorField, CellField, fill_velocity_ghosts,
                               fill_pressure_ghosts)
from src.numerics.operators import FaceFluxes

TWO_PI = 2 * math.pi

# 1 − e^{−s}cos(s) 在 s = 3π/4 处取得最大值
LAYER_FACTOR_MAX = 1 + math.exp(-0.75 * math.pi) / math.sqrt(2)


def _b(s):
    return 1.0 - np.exp(-s) * np.cos(s)


def _b1(s):
    return np.exp(-s) * (np.cos(s) + np.sin(s))


def _b2(s):
    return -2.0 * np.exp(-s) * np.sin(s)


@dataclass(frozen=True)
class ExactSolution:
    eps: float
    alpha: float = 1.0

    @property
    def delta(self):
        return math.sqrt(self.eps)

    def layer(self, z):
        """G(z)"""
        d = self.delta
        return _b(z / d) * _b((1 - z) / d)

    def layer_dz(self, z):
        d = self.delta
        a, b = z / d, (1 - z) / d
        return (_b1(a) * _b(b) - _b(a) * _b1(b)) / d

    def layer_dzz(self, z):
        d = self.delta
        a, b = z / d, (1 - z) / d
        return (_b2(a) * _b(b) - 2 * _b1(a) * _b1(b) + _b(a) * _b2(b)) / d ** 2

    def velocity(self, x, y, z, t):
        G = self.layer(z)
        u = t * np.sin(TWO_PI * y) * G
        v = t * np.sin(TWO_PI * x) * G
        return u, v, np.zeros_like(u)

    def pressure(self, x, y, z, t):
        return t * np.cos(TWO_PI * x) * np.cos(TWO_PI * y) * np.cos(math.pi * z)

    def velocity_dt(self, x, y, z, t):
        G = self.layer(z)
        return np.sin(TWO_PI * y) * G, np.sin(TWO_PI * x) * G

    def velocity_laplacian(self, x, y, z, t):
        """水平两分量的 Δu（u 与 x 无关，v 与 y 无关）"""
        G, G2 = self.layer(z), self.layer_dzz(z)
        k2 = TWO_PI ** 2
        lap_u = t * np.sin(TWO_PI * y) * (G2 - k2 * G)
        lap_v = t * np.sin(TWO_PI * x) * (G2 - k2 * G)
        return lap_u, lap_v

    def pressure_gradient(self, x, y, z, t):
        cx, sx = np.cos(TWO_PI * x), np.sin(TWO_PI * x)
        cy, sy = np.cos(TWO_PI * y), np.sin(TWO_PI * y)
        cz, sz = np.cos(math.pi * z), np.sin(math.pi * z)
        return (-TWO_PI * t * sx * cy * cz,
                -TWO_PI * t * cx * sy * cz,
                -math.pi * t * cx * cy * sz)


def exact_eval(es, x, y, z, t):
    """返回 (u, v, w, p)，支持 numpy 广播"""
    u, v, w = es.velocity(x, y, z, t)
    return u, v, w, es.pressure(x, y, z, t)


def forcing(es, x, y, z, t):
    """f = ∂u/∂t − εΔu + ω×u + ∇p，全部由解析导数给出"""
    u, v, _ = es.velocity(x, y, z, t)
    ut, vt = es.velocity_dt(x, y, z, t)
    lap_u, lap_v = es.velocity_laplacian(x, y, z, t)
    px, py, pz = es.pressure_gradient(x, y, z, t)
    f1 = ut - es.eps * lap_u - es.alpha * v + px
    f2 = vt - es.eps * lap_v + es.alpha * u + py
    return f1, f2, pz


def sample_forcing(es, g, t):
    """源项在单元中心的取值（幽灵层为 0）"""
    X, Y, Z = g.center_mesh()
    return VectorField.from_interior(g, *forcing(es, X, Y, Z, t))


def sample_exact(es, g, t):
    """精确速度与压力在单元中心取值，幽灵按各自规则填充"""
    X, Y, Z = g.center_mesh()
    u, v, w, p = exact_eval(es, X, Y, Z, t)
    vel = fill_velocity_ghosts(VectorField.from_interior(g, u, v, w))
    return vel, fill_pressure_ghosts(CellField.from_interior(g, p))


def exact_face_fluxes(es, g, t):
    """精确速度在各面中心的法向分量，壁面 z 面为 0"""
    xc, yc, zc = g.x_centers()[1:-1], g.y_centers()[1:-1], g.z_centers()[1:-1]
    Xf, Y, Z = np.meshgrid(g.x_faces(), yc, zc, indexing='ij')
    fu = es.velocity(Xf, Y, Z, t)[0]
    X, Yf, Z = np.meshgrid(xc, g.y_faces(), zc, indexing='ij')
    fv = es.velocity(X, Yf, Z, t)[1]
    return FaceFluxes(g, fu, fv, np.zeros((g.M, g.N, g.L + 1)))


def l2_norm(a, g):
    """单元中点求积的 L² 范数（a 为内部数组，可带前置分量轴）"""
    return math.sqrt(float(np.sum(a ** 2)) * g.cell_volume)


def l2_error(numeric, es, t, g, centered=True):
    """数值解与精确解在单元中心的 L² 误差

    速度场直接比较；压力场默认两边都先减去均值（压力只定义到一个常数）。
    """
    X, Y, Z = g.center_mesh()
    if isinstance(numeric, VectorField):
        exact = np.stack(es.velocity(X, Y, Z, t))
        return l2_norm(numeric.interior_stack() - exact, g)
    exact = es.pressure(X, Y, Z, t)
    diff = numeric.interior - exact
    if centered:
        diff = diff - diff.mean()
    return l2_norm(diff, g)


def exact_norm(es, t, g, quantity='velocity'):
    """精确解自身的离散 L² 范数，用于相对误差"""
    X, Y, Z = g.center_mesh()
    if quantity == 'velocity':
        return l2_norm(np.stack(es.velocity(X, Y, Z, t)), g)
    p = es.pressure(X, Y, Z, t)
    return l2_norm(p - p.mean(), g)
