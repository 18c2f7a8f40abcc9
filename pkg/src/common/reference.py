"""已发表的 t=1 误差表（速度 / 压力 L² 误差）。

键为 (N, eps)，值为 (CFVM, NFVM)。
"""

VELOCITY_TABLE = {
    (10, 1e-2): (0.03206, 0.12836),
    (20, 1e-2): (0.00634, 0.03893),
    (30, 1e-2): (0.00269, 0.02553),
    (10, 1e-3): (0.092294, 0.22647),
    (20, 1e-3): (0.033726, 0.15753),
    (30, 1e-3): (0.01331, 0.08020),
    (10, 1e-5): (1.61660e+03, 0.04487),
    (20, 1e-5): (0.08741, 0.010303),
    (30, 1e-5): (0.11722, 0.00460),
    (10, 1e-6): (1.10612e+10, 0.044901),
    (20, 1e-6): (4.42881e+06, 0.01032),
    (30, 1e-6): (1.12960e+03, 0.00442),
    (10, 1e-7): (5.26218e+62, 0.04490),
    (20, 1e-7): (1.16428e+29, 0.01032),
    (30, 1e-7): (6.72495e+17, 0.00443),
}

PRESSURE_TABLE = {
    (10, 1e-2): (0.02493, 0.03178),
    (20, 1e-2): (0.00511, 0.00920),
    (30, 1e-2): (0.00224, 0.00533),
    (10, 1e-3): (0.02684, 0.02771),
    (20, 1e-3): (0.00553, 0.00907),
    (30, 1e-3): (0.002381, 0.00590),
    (10, 1e-5): (1.48996e+02, 0.02602),
    (20, 1e-5): (0.00774, 0.00539),
    (30, 1e-5): (0.00655, 0.00238),
    (10, 1e-6): (1.01953e+16, 0.026016),
    (20, 1e-6): (2.83861e+05, 0.00539),
    (30, 1e-6): (58.98117, 0.00238),
    (10, 1e-7): (4.85027e+61, 0.02601),
    (20, 1e-7): (7.46273e+27, 0.005394),
    (30, 1e-7): (3.51186e+16, 0.00238),
}

TABLES = {
    'velocity': VELOCITY_TABLE,
    'pressure': PRESSURE_TABLE,
}

# 复现对比策略：稳定格点允许 3 倍偏差；已发表值超过 DIVERGENT_FLOOR 的格点
# 只要求同样发散（误差 ≥ DIVERGENT_FLOOR 或 blow-up）
COMPARISON_POLICY = {
    'stable_factor': 3.0,
    'divergent_floor': 1e3,
}


def reference_value(quantity, n, eps, scheme):
    """查找已发表的参考值，没有则返回 None"""
    table = TABLES[quantity]
    key = (int(n), float(eps))
    if key not in table:
        return None
    cfvm, nfvm = table[key]
    return cfvm if scheme == 'cfvm' else nfvm
