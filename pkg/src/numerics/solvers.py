"""线性求解器封装：统一的残差约定 ‖Ax − b‖ ≤ tol·‖b‖，失败时抛出 LinearSolverError。"""
import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from src.common.errors import LinearSolverError

logger = logging.getLogger(__name__)


@dataclass
class SolveInfo:
    iterations: int
    residual: float   # 相对残差


def relative_residual(A, x, b):
    """多右端项时按列计算并取最大值"""
    bnorm = np.linalg.norm(b, axis=0)
    r = np.linalg.norm(A @ x - b, axis=0)
    rel = np.where(bnorm > 0, r / np.where(bnorm > 0, bnorm, 1.0), r)
    return float(np.max(rel))


def _counter():
    state = {'n': 0}

    def callback(*_):
        state['n'] += 1
    return state, callback


def solve_spd(A, b, tol, maxit, x0=None):
    """对称正定系统：Jacobi 预条件共轭梯度

    scipy 的递推残差可能与真实残差有偏差，因此最多重启两次直到真实残差满足要求。
    """
    if not np.any(b):
        return np.zeros_like(b), SolveInfo(0, 0.0)
    diag = A.diagonal()
    precond = sp.diags(1.0 / diag)
    x = x0
    total = 0
    for _ in range(3):
        state, callback = _counter()
        x, info = spla.cg(A, b, x0=x, rtol=tol, atol=0.0, maxiter=maxit - total,
                          M=precond, callback=callback)
        total += state['n']
        res = relative_residual(A, x, b)
        if not np.isfinite(res):
            raise LinearSolverError("共轭梯度出现非有限值", res, total)
        if res <= tol:
            return x, SolveInfo(total, res)
        if info > 0 or total >= maxit:
            break
    raise LinearSolverError("共轭梯度未在迭代上限内收敛", res, total)


def solve_general(A, b, tol, maxit, method='direct', x0=None):
    """非对称系统（NFVM 增广系统）

    method='direct'：SuperLU 分解 + 一步迭代改进，b 可以是 (n, k) 的多右端项
    method='gmres'：不完全 LU 预条件 GMRES
    """
    if not np.any(b):
        return np.zeros_like(b), SolveInfo(0, 0.0)
    A = A.tocsc()
    if method == 'gmres' and b.ndim == 2:
        columns, infos = [], []
        for j in range(b.shape[1]):
            xj, info = solve_general(A, b[:, j], tol, maxit, method)
            columns.append(xj)
            infos.append(info)
        return (np.column_stack(columns),
                SolveInfo(max(i.iterations for i in infos), max(i.residual for i in infos)))
    if method == 'direct':
        lu = spla.splu(A)
        x = lu.solve(b)
        res = relative_residual(A, x, b)
        iterations = 1
        if res > tol:
            x = x + lu.solve(b - A @ x)
            res = relative_residual(A, x, b)
            iterations = 2
        if not np.isfinite(res) or res > tol:
            raise LinearSolverError("直接求解残差不满足要求", res, iterations)
        return x, SolveInfo(iterations, res)
    if method == 'gmres':
        ilu = spla.spilu(A, drop_tol=1e-6, fill_factor=20)
        precond = spla.LinearOperator(A.shape, ilu.solve)
        state, callback = _counter()
        x, info = spla.gmres(A, b, x0=x0, rtol=tol, atol=0.0, restart=50,
                             maxiter=maxit, M=precond, callback=callback,
                             callback_type='pr_norm')
        res = relative_residual(A, x, b)
        if info != 0 or not np.isfinite(res) or res > tol:
            raise LinearSolverError("GMRES 未在迭代上限内收敛", res, state['n'])
        return x, SolveInfo(state['n'], res)
    raise ValueError(f"未知的求解方法：{method}")
