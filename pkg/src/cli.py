"""命令行入口：run | table | scaling | verify-correctors | serve

退出码：0 成功，1 参数错误，2 数值失败（单次运行发散、求积不收敛、检查未通过）。
参数优先级：内置默认值 < --config 文件（key=value）< 命令行。
"""
import argparse
import logging
import os
import sys

from dotenv import dotenv_values

from src.common.common import (DEFAULTS, Scheme, RunStatus, Quantity, TABLE_GRIDS, TABLE_EPS,
                               SCALING_EPS)
from src.common.errors import ConfigError, GridError, LayerFVError

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2


class UsageError(Exception):
    pass


class CliParser(argparse.ArgumentParser):
    """参数错误时以退出码 1 结束（argparse 默认为 2，与数值失败冲突）"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: 错误：{message}\n")


def _float_list(text):
    try:
        return [float(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"无法解析为数值列表：{text}")


def _int_list(text):
    try:
        return [int(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"无法解析为整数列表：{text}")


def _common_options():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--scheme', choices=Scheme.ALL, default=DEFAULTS['scheme'], help='离散格式')
    common.add_argument('--eps', type=float, default=DEFAULTS['eps'], help='粘性系数 ε')
    common.add_argument('--n', type=int, default=DEFAULTS['n'], help='网格数 N=M=L')
    common.add_argument('--dt', type=float, default=DEFAULTS['dt'], help='时间步长')
    common.add_argument('--t-end', type=float, default=DEFAULTS['t_end'], help='终止时刻')
    common.add_argument('--theta', type=float, default=DEFAULTS['theta'], help='通量松弛系数 θ')
    common.add_argument('--alpha', type=float, default=DEFAULTS['alpha'], help='旋转速率 α')
    common.add_argument('--lin-tol', type=float, default=DEFAULTS['lin_tol'], help='线性求解相对残差')
    common.add_argument('--lin-maxit', type=int, default=DEFAULTS['lin_maxit'], help='线性求解迭代上限')
    common.add_argument('--out', default=None, help='输出文件（缺省时打印到标准输出）')
    common.add_argument('--format', choices=('csv', 'markdown'), default=DEFAULTS['format'], help='输出格式')
    common.add_argument('--jobs', type=int, default=os.cpu_count() or 1, help='table 并行进程数')
    common.add_argument('--config', default=None, help='key=value 配置文件，命令行参数优先')
    common.add_argument('--store', action='store_true', help='同时把结果写入数据库')
    common.add_argument('--verbose', action='store_true', help='输出 DEBUG 日志')
    return common


def build_parser():
    common = _common_options()
    parser = CliParser(prog='layerfv', description='旋转 Stokes 通道流的 CFVM / NFVM 有限体积求解器',
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sub = parser.add_subparsers(dest='command', required=True, parser_class=CliParser)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    sub.add_parser('run', parents=[common], formatter_class=fmt, help='运行一次人工解算例并打印 L² 误差')

    table = sub.add_parser('table', parents=[common], formatter_class=fmt, help='复现速度/压力误差表')
    table.add_argument('--grids', type=_int_list, default=','.join(map(str, TABLE_GRIDS)), help='网格列表')
    table.add_argument('--eps-list', type=_float_list, default=','.join(map(repr, TABLE_EPS)), help='ε 列表')

    scaling = sub.add_parser('scaling', parents=[common], formatter_class=fmt, help='校正子范数的 ε 幂律斜率')
    scaling.add_argument('--quantity', choices=Quantity.ALL + ('all',), default='all', help='研究的量')
    scaling.add_argument('--eps-list', type=_float_list, default=','.join(map(repr, SCALING_EPS)), help='ε 列表')

    sub.add_parser('verify-correctors', parents=[common], formatter_class=fmt, help='校正子性质检查')

    serve = sub.add_parser('serve', parents=[common], formatter_class=fmt, help='启动结果查询 API')
    serve.add_argument('--host', default='127.0.0.1')
    serve.add_argument('--port', type=int, default=5000)
    return parser, sub.choices


def load_config_file(path, subparser):
    """读取 key=value 文件作为子命令的默认值（键名可用 - 或 _）"""
    if not os.path.isfile(path):
        raise UsageError(f"--config 文件不存在：{path}")
    known = {a.dest for a in subparser._actions}
    values = {}
    for key, value in dotenv_values(path).items():
        dest = key.strip().lower().replace('-', '_')
        if dest not in known or dest in ('config', 'help'):
            raise UsageError(f"--config 中的未知参数：{key}")
        values[dest] = value
    return values


def parse_args(argv):
    parser, subparsers = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        subparser = subparsers[args.command]
        # 字符串默认值会经过各参数的 type 转换
        subparser.set_defaults(**load_config_file(args.config, subparser))
        args = parser.parse_args(argv)
    return args


def sim_config(args):
    from src.numerics.cfvm import SimConfig
    return SimConfig(eps=args.eps, alpha=args.alpha, dt=args.dt, t_end=args.t_end,
                     theta=args.theta, scheme=args.scheme, lin_tol=args.lin_tol,
                     lin_maxit=args.lin_maxit)


def _write(text, out):
    if out is None:
        print(text, end='')
        return
    try:
        with open(out, 'w', encoding='utf-8', newline='') as fh:
            fh.write(text)
    except OSError as e:
        raise UsageError(f"--out 无法写入：{e}")
    print(f"结果已写入 {out}")


def _store(callback):
    from src.app import create_app
    app = create_app()
    with app.app_context():
        callback()


def cmd_run(args):
    from src.report.report import run_one, emit
    cfg = sim_config(args)
    if args.n < 3:
        raise ConfigError('n', f"必须是不小于 3 的整数，实际为 {args.n}")
    row = run_one(args.n, cfg.eps, cfg.scheme, cfg)
    if args.store:
        _store(lambda: _store_rows([row]))
    if row.status != RunStatus.OK:
        print(f"{cfg.scheme} 在 N={args.n}, ε={cfg.eps:g} 时发散（blowup）")
        if row.vel_l2 is not None:
            print(f"最后有限步 t={row.t:g}：速度 L² 误差 {row.vel_l2:.6g}，压力 L² 误差 {row.p_l2:.6g}")
        return EXIT_NUMERICAL
    print(f"速度 L² 误差: {row.vel_l2:.6g}")
    print(f"压力 L² 误差: {row.p_l2:.6g}")
    if args.out:
        _write(emit([row], args.format), args.out)
    return EXIT_OK


def _store_rows(rows):
    from src.report.report import store_rows
    store_rows(rows)


def cmd_table(args):
    from src.report.report import run_table, emit
    cfg = sim_config(args)
    if any(n < 3 for n in args.grids):
        raise ConfigError('grids', "每个网格数都必须不小于 3")
    rows = run_table(args.grids, args.eps_list, Scheme.ALL, cfg, jobs=args.jobs)
    if args.store:
        _store(lambda: _store_rows(rows))
    _write(emit(rows, args.format), args.out)
    blowups = sum(r.status == RunStatus.BLOWUP for r in rows)
    if blowups:
        print(f"{blowups} 个算例发散（已记为 blowup）", file=sys.stderr)
    return EXIT_OK


def cmd_scaling(args):
    from src.numerics.correctors import CorrectorEval
    from src.report.report import run_scaling_study, store_scaling
    quantities = Quantity.ALL if args.quantity == 'all' else (args.quantity,)
    if len(args.eps_list) < 2 or any(e <= 0 for e in args.eps_list):
        raise ConfigError('eps_list', "至少需要两个正的 ε")
    ce = CorrectorEval(eps=args.eps_list[0], alpha=args.alpha)
    lines = ['quantity,eps,norm,slope']
    results = []
    for quantity in quantities:
        result = run_scaling_study(args.eps_list, quantity, ce)
        results.append(result)
        print(f"{quantity}: 斜率 {result.slope:.4f}")
        for eps, norm in zip(result.eps_list, result.norms):
            lines.append(f"{quantity},{eps!r},{norm!r},{result.slope!r}")
    if args.out:
        _write('\n'.join(lines) + '\n', args.out)
    if args.store:
        _store(lambda: [store_scaling(r) for r in results])
    return EXIT_OK


def cmd_verify(args):
    from src.numerics.correctors import run_corrector_checks
    results = run_corrector_checks()
    for r in results:
        mark = '通过' if r.passed else '失败'
        print(f"[{mark}] {r.name}: {r.value:.3e}（阈值 {r.threshold:.1e}）")
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERICAL


def cmd_serve(args):
    from src.app import create_app
    create_app().run(host=args.host, port=args.port)
    return EXIT_OK


COMMANDS = {
    'run': cmd_run,
    'table': cmd_table,
    'scaling': cmd_scaling,
    'verify-correctors': cmd_verify,
    'serve': cmd_serve,
}


def main(argv=None):
    try:
        args = parse_args(sys.argv[1:] if argv is None else argv)
    except UsageError as e:
        print(f"错误：{e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    if os.environ.get('LAYERFV_SEED'):
        logger.debug("LAYERFV_SEED 已设置但未使用（计算是确定性的）")

    try:
        return COMMANDS[args.command](args)
    except (ConfigError, GridError) as e:
        flag = '--' + getattr(e, 'field', 'n').replace('_', '-')
        print(f"错误：参数 {flag} 不合法：{e}", file=sys.stderr)
        return EXIT_USAGE
    except UsageError as e:
        print(f"错误：{e}", file=sys.stderr)
        return EXIT_USAGE
    except LayerFVError as e:
        print(f"数值失败：{e}", file=sys.stderr)
        return EXIT_NUMERICAL
