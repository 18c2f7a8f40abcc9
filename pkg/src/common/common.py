class Scheme:
    CFVM = 'cfvm'   # 经典同位网格有限体积格式
    NFVM = 'nfvm'   # 边界层校正子增强格式
    ALL = (CFVM, NFVM)


class RunStatus:
    OK = 'ok'
    BLOWUP = 'blowup'   # 场出现非有限值或速度范数超过阈值


class Quantity:
    """φ̄₃ 的三种范数量，用于 ε 幂律斜率"""
    DPHI3_DT = 'dphi3_dt_L2'
    Z_EPS_D2PHI3 = 'z_eps_d2phi3_L2'
    PHI3_OVER_SQRT_EPS = 'phi3_over_sqrt_eps_L2'
    ALL = (DPHI3_DT, Z_EPS_D2PHI3, PHI3_OVER_SQRT_EPS)


# 复现配置（所有命令行参数的默认值）
DEFAULTS = {
    'eps': 1e-2,
    'n': 20,
    'dt': 1e-2,
    't_end': 1.0,
    'theta': 1.0,
    'alpha': 1.0,
    'scheme': Scheme.NFVM,
    'lin_tol': 1e-10,
    'lin_maxit': 2000,
    'format': 'csv',
}

# 发散判据：速度 L² 范数超过该值即视为 blow-up
BLOWUP_NORM = 1e30

# 表格扫描的默认网格与 ε
TABLE_GRIDS = (10, 20, 30)
TABLE_EPS = (1e-2, 1e-3, 1e-5, 1e-6, 1e-7)

# 斜率研究的默认 ε
SCALING_EPS = (1e-2, 1e-3, 1e-4, 1e-5)

# 人工解 sin(2πx)、sin(2πy) 的水平周期；人工解算例在该周期的网格上运行
MMS_PERIOD = 1.0
