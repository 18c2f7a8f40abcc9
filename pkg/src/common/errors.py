class LayerFVError(Exception):
    """本项目所有异常的基类"""


class ConfigError(LayerFVError, ValueError):
    """参数不合法，field 为出错的参数名"""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class GridError(LayerFVError, ValueError):
    pass


class QuadratureError(LayerFVError):
    """自适应积分在给定预算内未达到容差"""

    def __init__(self, message, achieved_error):
        super().__init__(f"{message}（误差估计 {achieved_error:.3e}）")
        self.achieved_error = achieved_error


class LinearSolverError(LayerFVError):
    """线性求解器超过迭代上限或残差不满足要求"""

    def __init__(self, message, residual, iterations):
        super().__init__(f"{message}（相对残差 {residual:.3e}，迭代 {iterations} 次）")
        self.residual = residual
        self.iterations = iterations


class StepFailure(LayerFVError):
    """时间推进中某一步的子操作失败"""

    def __init__(self, step, cause):
        super().__init__(f"第 {step} 步失败：{cause}")
        self.step = step
        self.cause = cause


class PoissonCompatibilityWarning(UserWarning):
    """ψ 方程右端均值偏离零（通量散度漂移的诊断）"""
