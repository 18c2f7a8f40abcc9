"""边界层校正子：精确校正子的自适应求积、指数近似剖面，以及 ε 幂律斜率。

切向校正子在旋转坐标下是半直线热方程的 Dirichlet 解，用 s = 1/√(t−τ) 换元后
积分端点奇性消失，核变为 z̄/√π·exp(−(z̄s/2)²)，z̄ = z/√ε。
法向分量 φ̄₃ 由不可压条件对切向分量积分得到，并保留 z=1 处的指数小反项。
"""
import logging
import math
from dataclasses import dataclass, replace, field

import numpy as np
from scipy.integrate import quad
from scipy.special import erfc

from src.common.common import Quantity
from src.common.errors import ConfigError, QuadratureError

logger = logging.getLogger(__name__)

SQRT_PI = math.sqrt(math.pi)

# exp(−(z̄s/2)²) 在 z̄s/2 > 7 时低于 1e−21，积分上限按此截断
_DECAY = 14.0


def _linear(t):
    return t


def _unit(t):
    return 1.0


def _zero(t):
    return 0.0


def _zero_trace(t, x, y):
    return 0.0


@dataclass(frozen=True)
class BoundaryTrace:
    """需要抵消的切向迹 g = (g1, g2, 0)，g_j(t, x, y)"""
    g1: object = _zero_trace
    g2: object = _zero_trace

    def __call__(self, t, x, y):
        return self.g1(t, x, y), self.g2(t, x, y)


@dataclass(frozen=True)
class CorrectorEval:
    eps: float
    alpha: float = 1.0
    quad_tol: float = 1e-9
    t_singularity_cut: float = 0.0
    max_subdivisions: int = 2 ** 14

    def __post_init__(self):
        if not self.eps > 0:
            raise ConfigError('eps', f"必须为正数，实际为 {self.eps}")
        if not self.quad_tol > 0:
            raise ConfigError('quad_tol', f"必须为正数，实际为 {self.quad_tol}")
        if self.t_singularity_cut < 0:
            raise ConfigError('t_singularity_cut', "不能为负")

    @property
    def sqrt_eps(self):
        return math.sqrt(self.eps)

    def s_cap(self):
        """τ ∈ (t − cut, t] 被排除时 s 的上界"""
        if self.t_singularity_cut > 0:
            return 1.0 / math.sqrt(self.t_singularity_cut)
        return math.inf


@dataclass(frozen=True)
class SurfaceTraces:
    """φ̄₃ 所需的壁面数据，取可分离形式

    ∂_z u₃⁰|_{z=0} = dz_u3·f(t)·cos(kx x)cos(ky y)
    (∂_x u₂⁰ − ∂_y u₁⁰)|_{z=0} = curl·f(t)·cos(kx x)cos(ky y)
    rate 为 f 的导数。
    """
    dz_u3: float = 1.0
    curl: float = 0.0
    kx: int = 1
    ky: int = 1
    profile: object = _linear
    rate: object = _unit

    @classmethod
    def constant(cls, dz_u3=1.0, curl=0.0, kx=0, ky=0):
        return cls(dz_u3, curl, kx, ky, _unit, _zero)

    def spatial(self, x, y):
        return math.cos(self.kx * x) * math.cos(self.ky * y)

    def xy_norm(self):
        """空间因子在 (0,2π)² 上的 L² 范数"""
        def c(k):
            return 2 * math.pi if k == 0 else math.pi
        return math.sqrt(c(self.kx) * c(self.ky))


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ''

    def to_dict(self):
        return {'name': self.name, 'passed': self.passed, 'value': self.value,
                'threshold': self.threshold, 'detail': self.detail}


@dataclass
class ScalingResult:
    quantity: str
    eps_list: list
    norms: list = field(default_factory=list)
    slope: float = float('nan')

    def to_dict(self):
        return {'quantity': self.quantity, 'eps_list': list(self.eps_list),
                'norms': list(self.norms), 'slope': self.slope}


def _integrate(fn, a, b, ce):
    if b <= a:
        return 0.0
    result = quad(fn, a, b, epsabs=ce.quad_tol, epsrel=0.0,
                  limit=ce.max_subdivisions, full_output=1)
    if len(result) > 3:
        raise QuadratureError(f"自适应求积未收敛：{result[3]}", result[1])
    return result[0]


def _upper_limit(zb, ce, decay=_DECAY):
    """积分上限：被积函数衰减到舍入以下的位置（z̄ = 0 时为无穷）"""
    upper = decay / zb if zb > 0 else math.inf
    return min(upper, ce.s_cap())


def heat_kernel(t, z):
    """一维热核 K(t, z) = (4πt)^{−1/2} exp(−z²/(4t))"""
    if np.any(np.asarray(t) <= 0):
        raise ValueError("热核要求 t > 0")
    return np.exp(-np.asarray(z) ** 2 / (4 * t)) / np.sqrt(4 * math.pi * t)


def exact_tangential_corrector(ce, g, t, x, y, z):
    """切向校正子 (φ̄₁, φ̄₂)，其壁面值为 −(g₁, g₂)(t)"""
    if t <= 0:
        raise ValueError("校正子要求 t > 0")
    if z < 0:
        raise ValueError("校正子要求 z ≥ 0")
    if z == 0:
        g1, g2 = g(t, x, y)
        return -g1, -g2
    zb = z / ce.sqrt_eps
    s0 = 1.0 / math.sqrt(t)
    upper = _upper_limit(zb, ce)
    if upper <= s0:
        return 0.0, 0.0
    alpha = ce.alpha

    def integrand(s, j):
        tau = t - 1.0 / s ** 2
        g1, g2 = g(tau, x, y)
        # cos(α(τ−t)) 与 sin(α(τ−t))
        c, sn = math.cos(alpha / s ** 2), -math.sin(alpha / s ** 2)
        comp = g1 * c - g2 * sn if j == 0 else g2 * c + g1 * sn
        return zb / SQRT_PI * math.exp(-(zb * s / 2) ** 2) * comp

    phi1 = -_integrate(lambda s: integrand(s, 0), s0, upper, ce)
    phi2 = -_integrate(lambda s: integrand(s, 1), s0, upper, ce)
    return phi1, phi2


def _trace_mode(traces, tau, alpha, s, derivative=False):
    """−2a(τ)cos(α/s²) + 2b(τ)sin(α/s²)"""
    f = traces.rate(tau) if derivative else traces.profile(tau)
    c, sn = math.cos(alpha / s ** 2), math.sin(alpha / s ** 2)
    return f * (-2 * traces.dz_u3 * c + 2 * traces.curl * sn)


def _phi3_kernel(ce, t, z):
    """(ε, z̄, s0, 上限)；反项 e^{−s²/4ε} 在 s > 14√ε 后可忽略"""
    zb = z / ce.sqrt_eps
    s0 = 1.0 / math.sqrt(t)
    upper = max(_upper_limit(zb, ce), min(_DECAY * ce.sqrt_eps, ce.s_cap()))
    return ce.eps, zb, s0, upper


def normal_corrector_phi3(ce, traces, t, x, y, z):
    """由不可压条件导出的法向分量 φ̄₃，量级 O(√ε)，在 z=1 处为 0"""
    if t <= 0:
        raise ValueError("校正子要求 t > 0")
    eps, zb, s0, upper = _phi3_kernel(ce, t, z)

    def integrand(s):
        tau = t - 1.0 / s ** 2
        bracket = math.exp(-(zb * s / 2) ** 2) - math.exp(-s ** 2 / (4 * eps))
        return ce.sqrt_eps / (SQRT_PI * s ** 2) * bracket * _trace_mode(traces, tau, ce.alpha, s)

    return -traces.spatial(x, y) * _integrate(integrand, s0, upper, ce)


def normal_corrector_phi3_dt(ce, traces, t, x, y, z):
    """∂φ̄₃/∂t：下限 s0 = t^{−1/2} 随 t 移动，另加边界项"""
    if t <= 0:
        raise ValueError("校正子要求 t > 0")
    eps, zb, s0, upper = _phi3_kernel(ce, t, z)

    def weight(s):
        bracket = math.exp(-(zb * s / 2) ** 2) - math.exp(-s ** 2 / (4 * eps))
        return ce.sqrt_eps / (SQRT_PI * s ** 2) * bracket

    def integrand(s):
        tau = t - 1.0 / s ** 2
        return weight(s) * _trace_mode(traces, tau, ce.alpha, s, derivative=True)

    boundary = weight(s0) * _trace_mode(traces, 0.0, ce.alpha, s0) / (2 * t ** 1.5)
    return -traces.spatial(x, y) * (boundary + _integrate(integrand, s0, upper, ce))


def normal_corrector_phi3_dzz(ce, traces, t, x, y, z):
    """∂²φ̄₃/∂z²，z > 0

    迹在 τ → t 时的极限部分用闭式 ∫_{s0}^∞ (w² − ½)e^{−w²} 积出，剩余部分按 1/s² 衰减。
    """
    if t <= 0:
        raise ValueError("校正子要求 t > 0")
    if z <= 0:
        raise ValueError("∂²φ̄₃/∂z² 只在 z > 0 处计算")
    eps, zb, s0, _ = _phi3_kernel(ce, t, z)
    upper = _upper_limit(zb, ce)
    limit_mode = _trace_mode(traces, t, ce.alpha, math.inf)

    def shape(s):
        w2 = (zb * s / 2) ** 2
        return (w2 - 0.5) * math.exp(-w2)

    def integrand(s):
        tau = t - 1.0 / s ** 2
        return shape(s) * (_trace_mode(traces, tau, ce.alpha, s) - limit_mode)

    closed = limit_mode * s0 / 2 * math.exp(-(zb * s0 / 2) ** 2)
    total = closed + _integrate(integrand, s0, upper, ce)
    return -traces.spatial(x, y) * ce.sqrt_eps / (SQRT_PI * eps) * total


def approx_corrector(eps, t, z):
    """指数近似剖面 (−e^{−z²/4εt}, −e^{−z²/4εt}, 0)"""
    if np.any(np.asarray(t) <= 0):
        raise ValueError("近似校正子要求 t > 0")
    phi = -np.exp(-np.asarray(z, dtype=float) ** 2 / (4 * eps * t))
    return phi, phi, np.zeros_like(phi)


def mirrored_corrector(eps, t, z):
    """顶壁 z=1 的镜像剖面"""
    return approx_corrector(eps, t, 1 - np.asarray(z, dtype=float))


_QUANTITY_FUNCS = {
    Quantity.DPHI3_DT: lambda ce, tr, t, z: normal_corrector_phi3_dt(ce, tr, t, 0.0, 0.0, z),
    Quantity.Z_EPS_D2PHI3: lambda ce, tr, t, z: z * ce.eps * normal_corrector_phi3_dzz(ce, tr, t, 0.0, 0.0, z),
    Quantity.PHI3_OVER_SQRT_EPS: lambda ce, tr, t, z: normal_corrector_phi3(ce, tr, t, 0.0, 0.0, z) / ce.sqrt_eps,
}


def corrector_norm(ce, quantity, t=1.0, traces=None):
    """指定量在 Ω 上的 L² 范数；(x, y) 方向解析积出，z 方向自适应求积"""
    if quantity not in _QUANTITY_FUNCS:
        raise ValueError(f"未知的量：{quantity}")
    traces = traces or SurfaceTraces()
    func = _QUANTITY_FUNCS[quantity]
    d = ce.sqrt_eps
    z_hi = min(1.0, 16 * d)
    points = [k * d for k in (0.25, 1.0, 2.0, 4.0, 8.0) if k * d < z_hi]
    # z ∈ [0, 1] 上 xy 因子在 x=y=0 处取 1，因此直接乘 xy 范数
    result = quad(lambda z: func(ce, traces, t, z) ** 2, 0.0, z_hi,
                  epsabs=0.0, epsrel=1e-8, limit=400, points=points or None,
                  full_output=1)
    value, abserr = result[0], result[1]
    if len(result) > 3 and abserr > 1e-4 * value:
        raise QuadratureError(f"z 方向求积未收敛：{result[3]}", abserr)
    return traces.xy_norm() * math.sqrt(value)


def scaling_study(ce, quantity, eps_list, t=1.0, traces=None):
    """对每个 ε 计算范数并拟合 log‖·‖ 对 log ε 的斜率"""
    eps_list = list(eps_list)
    if len(eps_list) < 2:
        raise ValueError("eps_list 至少需要两个不同的 ε")
    result = ScalingResult(quantity, eps_list)
    for eps in eps_list:
        # 内层求积的绝对容差随量级缩放
        local = replace(ce, eps=eps, quad_tol=ce.quad_tol * min(1.0, eps))
        norm = corrector_norm(local, quantity, t, traces)
        logger.debug("%s eps=%.1e norm=%.6e", quantity, eps, norm)
        result.norms.append(norm)
    slope = np.polyfit(np.log(eps_list), np.log(result.norms), 1)[0]
    result.slope = float(slope)
    return result


def scaling_slope(ce, quantity, eps_list, t=1.0, traces=None):
    return scaling_study(ce, quantity, eps_list, t, traces).slope


def _fd_first(f, x, h):
    return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h)


def _fd_second(f, x, h):
    return (-f(x - 2 * h) + 16 * f(x - h) - 30 * f(x) + 16 * f(x + h) - f(x + 2 * h)) / (12 * h ** 2)


def tangential_residual(ce, g, t, x, y, zb, h=1e-2):
    """拉伸变量下 ∂_t φ − ∂_{z̄z̄} φ + ω×φ 的有限差分残差（两分量取最大）"""
    d = ce.sqrt_eps

    def at(tt, zz):
        return np.array(exact_tangential_corrector(ce, g, tt, x, y, zz * d))

    phi = at(t, zb)
    phi_t = _fd_first(lambda s: at(s, zb), t, h)
    phi_zz = _fd_second(lambda s: at(t, s), zb, h)
    rot = ce.alpha * np.array([-phi[1], phi[0]])
    return float(np.max(np.abs(phi_t - phi_zz + rot)))


def _demo_trace():
    return BoundaryTrace(_demo_g1, _demo_g2)


def _demo_g1(t, x, y):
    return t * math.cos(x)


def _demo_g2(t, x, y):
    return 0.5 * t ** 2 * math.sin(y)


def _unit_g1(t, x, y):
    return 1.0


def _linear_g1(t, x, y):
    return t


def run_corrector_checks(alphas=(0.0, 1.0, 5.0), samples=10, seed=0):
    """校正子性质检查：erfc 解析解、PDE 残差、壁面取值、远场衰减、线性

    返回 CheckResult 列表。
    """
    rng = np.random.default_rng(seed)
    results = []

    # α=0、单位常数迹、ε=1：φ̄₁ = −erfc(z/(2√t))
    ce = CorrectorEval(eps=1.0, alpha=0.0)
    unit = BoundaryTrace(_unit_g1)
    worst = 0.0
    for t in (0.25, 0.5, 1.0):
        for z in (0.05, 0.2, 1.0):
            value = exact_tangential_corrector(ce, unit, t, 0.0, 0.0, z)[0]
            worst = max(worst, abs(value + erfc(z / (2 * math.sqrt(t)))))
    results.append(CheckResult('erfc_oracle', worst < 1e-8, worst, 1e-8))

    trace = _demo_trace()
    for alpha in alphas:
        ce = CorrectorEval(eps=1e-2, alpha=alpha, quad_tol=1e-12)
        worst = 0.0
        for _ in range(samples):
            t = rng.uniform(0.5, 1.0)
            zb = rng.uniform(0.5, 3.0)
            x, y = rng.uniform(0, 2 * math.pi, size=2)
            worst = max(worst, tangential_residual(ce, trace, t, x, y, zb))
        results.append(CheckResult(f'pde_residual_alpha_{alpha:g}', worst < 5e-7, worst, 5e-7))

    # z → 0⁺ 的 Richardson 外推应趋于 −g(t)
    ce = CorrectorEval(eps=1e-3, alpha=1.0, quad_tol=1e-12)
    ramp = BoundaryTrace(_linear_g1)
    z1 = 1e-4 * ce.sqrt_eps
    v1 = exact_tangential_corrector(ce, ramp, 1.0, 0.0, 0.0, z1)[0]
    v2 = exact_tangential_corrector(ce, ramp, 1.0, 0.0, 0.0, 2 * z1)[0]
    limit = 2 * v1 - v2
    err = abs(limit + 1.0)
    results.append(CheckResult('boundary_attainment', err < 1e-6, err, 1e-6))

    ce = CorrectorEval(eps=1e-2, alpha=1.0)
    far = max(abs(c) for t in (0.25, 1.0)
              for c in exact_tangential_corrector(ce, trace, t, 1.0, 1.0, 41 * ce.sqrt_eps))
    results.append(CheckResult('far_field_decay', far < 1e-8, far, 1e-8))

    a, b = 2.0, -0.5
    combo = BoundaryTrace(lambda t, x, y: a * _demo_g1(t, x, y) + b * t,
                          lambda t, x, y: a * _demo_g2(t, x, y))
    lhs = np.array(exact_tangential_corrector(ce, combo, 0.7, 0.3, 0.4, 0.05))
    rhs = (a * np.array(exact_tangential_corrector(ce, trace, 0.7, 0.3, 0.4, 0.05))
           + b * np.array(exact_tangential_corrector(ce, ramp, 0.7, 0.3, 0.4, 0.05)))
    err = float(np.max(np.abs(lhs - rhs)))
    results.append(CheckResult('linearity', err < 10 * ce.quad_tol, err, 10 * ce.quad_tol))

    for r in results:
        logger.info("校正子检查 %s：%s（%.3e / %.1e）", r.name,
                    '通过' if r.passed else '失败', r.value, r.threshold)
    return results
