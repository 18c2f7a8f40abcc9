import pytest

from src.numerics.cfvm import SchemeState
from src.numerics.mms import sample_exact, exact_face_fluxes


def _exact_history(es, g, cfg, t):
    """以精确解填充 t 与 t−Δt 两层历史，step_index ≥ 1 使用 BDF2"""
    u_n, p_n = sample_exact(es, g, t)
    u_nm1, p_nm1 = sample_exact(es, g, t - cfg.dt)
    F = exact_face_fluxes(es, g, t)
    step = int(round(t / cfg.dt))
    return SchemeState(g, u_n, u_n, u_nm1, p_n, p_nm1, F, F, exact_face_fluxes(es, g, t - cfg.dt),
                       step_index=step, time=t)


@pytest.fixture
def exact_history():
    return _exact_history
