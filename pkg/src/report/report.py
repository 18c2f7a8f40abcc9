"""实验扫描、误差表输出（CSV / markdown）、与已发表数值的比较以及结果入库。"""
import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace, asdict
from functools import partial
from itertools import product

from src.common.common import Scheme, RunStatus, Quantity, MMS_PERIOD
from src.common.errors import StepFailure
from src.common.reference import TABLES, COMPARISON_POLICY, reference_value
from src.numerics.cfvm import SimConfig, cfvm_run
from src.numerics.correctors import CorrectorEval, scaling_study
from src.numerics.grid import build_grid
from src.numerics.mms import ExactSolution, sample_forcing
from src.numerics.nfvm import nfvm_run

logger = logging.getLogger(__name__)

CSV_COLUMNS = ['N', 't', 'eps', 'scheme', 'vel_l2', 'p_l2', 'dt', 'theta', 'alpha',
               'status', 'wall_clock_s']
_FLOAT_COLUMNS = ('t', 'eps', 'vel_l2', 'p_l2', 'dt', 'theta', 'alpha', 'wall_clock_s')


@dataclass
class ExperimentRow:
    N: int
    t: float
    eps: float
    scheme: str
    vel_l2: float = None     # blowup 时为最后一个有限步的值，可能为 None
    p_l2: float = None
    dt: float = 1e-2
    theta: float = 1.0
    alpha: float = 1.0
    status: str = RunStatus.OK
    wall_clock_s: float = 0.0
    p_l2_raw: float = None   # 以下三项不写入 CSV
    vel_rel: float = None
    p_rel: float = None

    @property
    def is_blowup(self):
        return self.status == RunStatus.BLOWUP

    def to_dict(self):
        return asdict(self)

    def csv_record(self):
        record = {}
        for name in CSV_COLUMNS:
            value = getattr(self, name)
            if value is None:
                record[name] = ''
            elif isinstance(value, float):
                record[name] = repr(value)
            else:
                record[name] = str(value)
        return record


def run_one(n, eps, scheme, cfg_base, period=MMS_PERIOD):
    """在 n³ 网格（水平周期 period）上运行一次人工解算例，返回误差行

    发散时 t 与各误差取最后一个有限步的诊断值；第一步就失败时误差为 None。
    """
    cfg = replace(cfg_base, eps=eps, scheme=scheme)
    g = build_grid(n, n, n, period, period)
    es = ExactSolution(eps, cfg.alpha)
    run = nfvm_run if scheme == Scheme.NFVM else cfvm_run
    row = ExperimentRow(n, cfg.t_end, eps, scheme, dt=cfg.dt, theta=cfg.theta, alpha=cfg.alpha)
    try:
        result = run(cfg, g, partial(sample_forcing, es), es)
    except StepFailure as exc:
        logger.warning("N=%d eps=%g %s 运行失败，记为 blowup：%s", n, eps, scheme, exc)
        row.status = RunStatus.BLOWUP
        return row
    row.wall_clock_s = result.wall_clock_s
    row.status = result.status
    if result.last is not None:
        row.t = result.last.time
        row.vel_l2, row.p_l2, row.p_l2_raw = result.vel_l2, result.p_l2, result.p_l2_raw
        row.vel_rel, row.p_rel = result.vel_rel, result.p_rel
    logger.info("N=%d eps=%g %s: status=%s vel=%s p=%s (%.1fs)", n, eps, scheme, row.status,
                row.vel_l2, row.p_l2, row.wall_clock_s)
    return row


def _run_case(case, cfg_base):
    n, eps, scheme = case
    return run_one(n, eps, scheme, cfg_base)


def run_table(grid_list, eps_list, schemes, cfg_base, jobs=1):
    """网格 × ε × 格式的全组合扫描，按该顺序返回行；单个运行失败记为 blowup 行"""
    cases = list(product(grid_list, eps_list, schemes))
    worker = partial(_run_case, cfg_base=cfg_base)
    if jobs and jobs > 1 and len(cases) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(worker, cases))
    return [worker(case) for case in cases]


def run_scaling_study(eps_list, quantity, ce=None, t=1.0, traces=None):
    """校正子范数的 ε 幂律研究，返回 ScalingResult（斜率与各 ε 的范数）"""
    eps_list = list(eps_list)
    if not eps_list:
        raise ValueError("eps_list 不能为空")
    if quantity not in Quantity.ALL:
        raise ValueError(f"未知的量：{quantity}")
    ce = ce or CorrectorEval(eps=eps_list[0])
    return scaling_study(ce, quantity, eps_list, t, traces)


def format_csv(rows):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator='\n')
    writer.writeheader()
    for row in rows:
        writer.writerow(row.csv_record())
    return buf.getvalue()


def _cell(value):
    if value is None:
        return 'BLOWUP'
    return f"{value:.5g}"


def format_markdown(rows):
    """与已发表表格相同的布局：N=M=L | t | ε | CFVM | NFVM，速度与压力各一张"""
    lines = []
    cells = {}
    for row in rows:
        cells.setdefault((row.N, row.t, row.eps), {})[row.scheme] = row
    for title, attr in (('速度 L² 误差', 'vel_l2'), ('压力 L² 误差', 'p_l2')):
        lines += [f"### {title}", '', '| N=M=L | t | ε | CFVM | NFVM |', '|---|---|---|---|---|']
        for (n, t, eps), by_scheme in cells.items():
            values = []
            for scheme in Scheme.ALL:
                row = by_scheme.get(scheme)
                values.append('' if row is None else _cell(getattr(row, attr)))
            lines.append(f"| {n} | {t:g} | {eps:g} | {values[0]} | {values[1]} |")
        lines.append('')
    lines += ['### 运行明细', '',
              '| N | ε | 格式 | 状态 | 速度相对误差 | 压力相对误差 | 压力误差（未去均值） | dt | θ | α | 用时(s) |',
              '|---|---|---|---|---|---|---|---|---|---|---|']
    for row in rows:
        extras = ['' if v is None else f"{v:.4g}" for v in (row.vel_rel, row.p_rel, row.p_l2_raw)]
        lines.append(f"| {row.N} | {row.eps:g} | {row.scheme} | {row.status} | "
                     f"{' | '.join(extras)} | {row.dt:g} | {row.theta:g} | {row.alpha:g} | "
                     f"{row.wall_clock_s:.2f} |")
    return '\n'.join(lines) + '\n'


def emit(rows, fmt='csv', path=None):
    """把结果行写成 CSV 或 markdown；path 为 None 时只返回文本"""
    rows = list(rows)
    if not rows:
        raise ValueError("没有可输出的结果行")
    if fmt == 'csv':
        text = format_csv(rows)
    elif fmt == 'markdown':
        text = format_markdown(rows)
    else:
        raise ValueError(f"未知的输出格式：{fmt}")
    if path is not None:
        with open(path, 'w', encoding='utf-8', newline='') as fh:
            fh.write(text)
    return text


def parse_csv(text):
    """emit 的逆过程（只恢复 CSV 中的列）"""
    rows = []
    for record in csv.DictReader(io.StringIO(text)):
        values = {}
        for name in CSV_COLUMNS:
            raw = record[name]
            if name == 'N':
                values[name] = int(raw)
            elif name in _FLOAT_COLUMNS:
                values[name] = float(raw) if raw != '' else None
            else:
                values[name] = raw
        rows.append(ExperimentRow(**values))
    return rows


def compare_with_published(rows, quantity='velocity', policy=COMPARISON_POLICY):
    """逐行与已发表数值比较

    已发表值 ≥ divergent_floor 的格子视为发散格子：本次 blowup 或误差也 ≥ divergent_floor
    判为 blowup-expected；其余格子上 blowup 行一律不匹配，否则要求比值在 stable_factor 倍以内。
    """
    if quantity not in TABLES:
        raise ValueError(f"未知的比较量：{quantity}")
    attr = 'vel_l2' if quantity == 'velocity' else 'p_l2'
    factor, floor = policy['stable_factor'], policy['divergent_floor']
    out = []
    for row in rows:
        value = getattr(row, attr)
        ref = reference_value(quantity, row.N, row.eps, row.scheme)
        entry = {'N': row.N, 'eps': row.eps, 'scheme': row.scheme, 'status': row.status,
                 'value': value, 'reference': ref, 'ratio': None}
        if ref is None:
            entry['verdict'] = 'no-reference'
        elif ref >= floor:
            diverged = row.is_blowup or (value is not None and value >= floor)
            entry['verdict'] = 'blowup-expected' if diverged else 'mismatch'
        elif value is None or row.is_blowup:
            entry['verdict'] = 'mismatch'
        else:
            entry['ratio'] = value / ref
            entry['verdict'] = 'match' if 1 / factor <= entry['ratio'] <= factor else 'mismatch'
        out.append(entry)
    return out


def _clean(value):
    return None if value is None or not math.isfinite(value) else value


def store_rows(rows):
    """把结果行写入数据库（需在应用上下文中调用），返回记录列表"""
    from src.models.models import db, ExperimentRecord

    records = []
    try:
        for row in rows:
            record = ExperimentRecord(
                n=row.N, t=row.t, eps=row.eps, scheme=row.scheme,
                vel_l2=_clean(row.vel_l2), p_l2=_clean(row.p_l2), p_l2_raw=_clean(row.p_l2_raw),
                vel_rel=_clean(row.vel_rel), p_rel=_clean(row.p_rel),
                dt=row.dt, theta=row.theta, alpha=row.alpha,
                status=row.status, wall_clock_s=row.wall_clock_s)
            db.session.add(record)
            records.append(record)
        db.session.commit()
    except Exception:
        db.session.rollback()
        raise
    return records


def store_scaling(result, t=1.0):
    from src.models.models import db, ScalingRecord

    record = ScalingRecord(quantity=result.quantity, slope=result.slope, t=t,
                           eps_list=list(result.eps_list), norms=list(result.norms))
    try:
        db.session.add(record)
        db.session.commit()
    except Exception:
        db.session.rollback()
        raise
    return record
