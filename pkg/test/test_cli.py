import pytest

from src.cli import main, parse_args, EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL
from src.common.common import Scheme, RunStatus
from src.report.report import ExperimentRow, parse_csv

FAST = ['--n', '4', '--dt', '0.05', '--t-end', '0.1']


def test_defaults():
    args = parse_args(['run'])
    assert args.scheme == Scheme.NFVM
    assert args.eps == 1e-2 and args.n == 20 and args.t_end == 1.0


def test_config_file_sits_between_defaults_and_flags(tmp_path):
    cfg = tmp_path / 'run.env'
    cfg.write_text('eps=1e-3\nt_end=0.5\nscheme=cfvm\n', encoding='utf-8')
    args = parse_args(['run', '--config', str(cfg), '--eps', '1e-4'])
    assert args.eps == 1e-4
    assert args.t_end == 0.5
    assert args.scheme == Scheme.CFVM


def test_config_file_unknown_key(tmp_path, capsys):
    cfg = tmp_path / 'bad.env'
    cfg.write_text('viscosity=1\n', encoding='utf-8')
    assert main(['run', '--config', str(cfg)]) == EXIT_USAGE
    assert 'viscosity' in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert main(['run', '--config', str(tmp_path / 'none.env')]) == EXIT_USAGE


def test_bad_flag_value_exits_with_usage_code():
    assert main(['run', '--eps', 'abc']) == EXIT_USAGE
    assert main(['nonsense']) == EXIT_USAGE


@pytest.mark.parametrize('flag, value', [('--eps', '-1'), ('--dt', '0'), ('--n', '2'), ('--theta', '-1')])
def test_invalid_parameter_names_flag(flag, value, capsys):
    assert main(['run'] + FAST + [flag, value]) == EXIT_USAGE
    assert flag in capsys.readouterr().err


def test_run_prints_both_errors(capsys, tmp_path):
    out = tmp_path / 'run.csv'
    assert main(['run', '--scheme', 'cfvm', '--out', str(out)] + FAST) == EXIT_OK
    printed = capsys.readouterr().out
    assert '速度 L² 误差' in printed and '压力 L² 误差' in printed
    rows = parse_csv(out.read_text(encoding='utf-8'))
    assert rows[0].scheme == Scheme.CFVM and rows[0].N == 4


def test_run_blowup_exits_numerical(monkeypatch, capsys):
    import src.report.report as report

    def diverged(n, eps, scheme, cfg):
        return ExperimentRow(n, cfg.t_end, eps, scheme, status=RunStatus.BLOWUP)

    monkeypatch.setattr(report, 'run_one', diverged)
    assert main(['run'] + FAST) == EXIT_NUMERICAL
    assert '最后有限步' not in capsys.readouterr().out


def test_run_blowup_prints_last_finite_step(monkeypatch, capsys):
    import src.report.report as report

    def diverged(n, eps, scheme, cfg):
        return ExperimentRow(n, 0.3, eps, scheme, vel_l2=2.5e31, p_l2=4.0, status=RunStatus.BLOWUP)

    monkeypatch.setattr(report, 'run_one', diverged)
    assert main(['run'] + FAST) == EXIT_NUMERICAL
    out = capsys.readouterr().out
    assert '发散' in out
    assert 't=0.3' in out and '2.5e+31' in out


def test_table_with_blowup_rows_succeeds(monkeypatch, capsys):
    import src.report.report as report

    def mixed(grid_list, eps_list, schemes, cfg, jobs=1):
        return [ExperimentRow(4, 0.1, 1e-6, Scheme.CFVM, status=RunStatus.BLOWUP),
                ExperimentRow(4, 0.1, 1e-6, Scheme.NFVM, vel_l2=0.04, p_l2=0.02)]

    monkeypatch.setattr(report, 'run_table', mixed)
    assert main(['table', '--grids', '4', '--eps-list', '1e-6', '--format', 'markdown'] + FAST) == EXIT_OK
    captured = capsys.readouterr()
    assert 'BLOWUP' in captured.out
    assert 'blowup' in captured.err


def test_table_rejects_small_grid():
    assert main(['table', '--grids', '2,4']) == EXIT_USAGE


def test_unwritable_output(tmp_path):
    target = tmp_path / 'missing' / 'out.csv'
    assert main(['run', '--scheme', 'cfvm', '--out', str(target)] + FAST) == EXIT_USAGE


def test_scaling_needs_two_eps():
    assert main(['scaling', '--eps-list', '1e-2']) == EXIT_USAGE


def test_verify_correctors_reports(monkeypatch, capsys):
    import src.numerics.correctors as correctors
    from src.numerics.correctors import CheckResult

    monkeypatch.setattr(correctors, 'run_corrector_checks',
                        lambda: [CheckResult('erfc_oracle', True, 1e-12, 1e-8),
                                 CheckResult('linearity', False, 1e-3, 1e-8)])
    assert main(['verify-correctors']) == EXIT_NUMERICAL
    out = capsys.readouterr().out
    assert '[通过] erfc_oracle' in out and '[失败] linearity' in out


def test_run_store_persists(tmp_path, monkeypatch):
    monkeypatch.setenv('LAYERFV_DB_PATH', str(tmp_path / 'cli.db'))
    assert main(['run', '--scheme', 'cfvm', '--store'] + FAST) == EXIT_OK
    from src.app import create_app
    from src.models.models import ExperimentRecord
    app = create_app()
    with app.app_context():
        assert ExperimentRecord.query.count() == 1
