import pytest
from fractions import Fraction
import json
from pathlib import Path
import sys

from mrstab.common.arguments import ExperimentConfig, get_arguments, load_config, get_config_to_save, \
    set_config_from_load
from mrstab.common.errors import ConfigInvalid, IoFailure, MarginViolation
from mrstab.common.graph_library import cycle_graph
from mrstab.estimators.contraction import ContractionProfile
from mrstab.experiments.cache import GraphCache
from mrstab.experiments.runner import plan_spaces, run_scenario, exit_status, EXIT_OK, EXIT_CONFIG, EXIT_BUDGET, \
    EXIT_VERDICT
from mrstab.experiments.tables import RunReport, emit_tables, load_report, SUMMARY_FILE, REPORT_FILE

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / 'scripts'))
import mrstab_cli  # noqa: E402

RECURRENCE_INI = '''
[experiment]
scenario = recurrence
seed = 0

[group]
spec = family=free k=2

[grid]
C = 2, 3
radii = 3, 4
'''

CONTRACTION_INI = '''
[experiment]
scenario = contraction

[group]
spec = family=free_abelian k=2

[grid]
radii = 4
'''


def write(tmp_path, text, name='config.ini'):
    path = tmp_path / name
    path.write_text(text)
    return path


def run_args(config, tmp_path, *extra):
    return get_arguments(argv=['run', str(config), '--output', str(tmp_path / 'out'), '--no-cache', *extra])


def csv_files(run_dir):
    return {p.name: p.read_bytes() for p in sorted(Path(run_dir).glob('*.csv'))}


def test_load_config(tmp_path):
    cfg = load_config(write(tmp_path, RECURRENCE_INI))
    assert cfg.scenario == 'recurrence'
    assert cfg.C == [Fraction(2), Fraction(3)]
    assert cfg.t == [Fraction(1, 3)]
    assert cfg.radii == [3, 4]
    assert cfg.group == 'family=free k=2'


@pytest.mark.parametrize('old, new', [
    ('scenario = recurrence', 'scenario = flow'),
    ('C = 2, 3', 'C ='),
    ('radii = 3, 4', 'radii = 4, 3'),
    ('spec = family=free k=2', 'spec = family=free k=0'),
    ('[experiment]', '[run]'),
    ('C = 2, 3', 'C = two'),
])
def test_invalid_configs(tmp_path, old, new):
    with pytest.raises(ConfigInvalid):
        load_config(write(tmp_path, RECURRENCE_INI.replace(old, new)))


def test_relhyp_config_needs_peripherals(tmp_path):
    text = RECURRENCE_INI.replace('scenario = recurrence', 'scenario = relhyp_criterion')
    with pytest.raises(ConfigInvalid):
        load_config(write(tmp_path, text))


def test_shipped_configs_load():
    configs = sorted((Path(__file__).resolve().parents[1] / 'configs').glob('*.ini'))
    assert configs
    for path in configs:
        load_config(path)


def test_config_hash(tmp_path):
    a = load_config(write(tmp_path, RECURRENCE_INI, 'a.ini'))
    b = load_config(write(tmp_path, RECURRENCE_INI.replace('seed = 0', 'seed = 0\noutput = elsewhere'), 'b.ini'))
    c = load_config(write(tmp_path, RECURRENCE_INI.replace('seed = 0', 'seed = 1'), 'c.ini'))
    assert a.config_hash == b.config_hash
    assert a.config_hash != c.config_hash


def test_config_save_and_load(tmp_path):
    cfg = load_config(write(tmp_path, RECURRENCE_INI))
    saved = json.loads(json.dumps(get_config_to_save(cfg)))
    restored = set_config_from_load(saved, ExperimentConfig(scenario='recurrence'))
    assert restored.to_dict() == cfg.to_dict()
    assert restored.config_hash == cfg.config_hash


def test_arguments():
    args = get_arguments(argv=['cache', 'ls', '--cache-dir', 'somewhere'])
    assert args.cache_dir == Path('somewhere')
    assert args.threads == 1
    with pytest.raises(ValueError):
        get_arguments(argv=['run', 'x.ini', '--threads', '0'])
    with pytest.raises(ValueError):
        get_arguments(argv=['cache', 'purge'])
    with pytest.raises(ValueError):
        get_arguments(argv=['report'])


def test_plan_spaces(tmp_path):
    cfg = load_config(write(tmp_path, RECURRENCE_INI))
    # default lengths: twice the reach floor(R - R/4)
    assert plan_spaces(cfg) == [('R3_L4', 3, 4), ('R4_L6', 4, 6)]
    cfg.lengths = [4, 20]
    assert plan_spaces(cfg) == [('R3_L4', 3, 4), ('R4_L4', 4, 4)]
    cfg.lengths = [30]
    with pytest.raises(MarginViolation):
        plan_spaces(cfg)


def test_graph_cache(tmp_path, capsys):
    cache = GraphCache(tmp_path / 'cache')
    built = []

    def build():
        built.append(1)
        return cycle_graph(7)

    g = cache.fetch('cycle', {'n': 7, 'version': 1}, build)
    assert cache.fetch('cycle', {'n': 7, 'version': 1}, build) == g
    assert (cache.hits, cache.misses, len(built)) == (1, 1, 1)
    # a construction version bump is a different entry
    cache.fetch('cycle', {'n': 7, 'version': 2}, build)
    assert len(built) == 2
    assert len(cache.ls()) == 2

    path = cache.path_of('cycle', {'n': 7, 'version': 1})
    path.write_text(path.read_text()[:40])
    assert cache.fetch('cycle', {'n': 7, 'version': 1}, build) == g
    assert 'creating it from scratch' in capsys.readouterr().out
    assert len(built) == 3
    assert cache.rm() == 2
    assert cache.ls() == []


def test_run_is_deterministic(tmp_path):
    config = write(tmp_path, RECURRENCE_INI)
    cfg = load_config(config)
    first = run_scenario(cfg, run_args(config, tmp_path))
    second = run_scenario(cfg, run_args(config, tmp_path))
    assert first.verdicts['recurrence'] == 'bounded'
    assert first.verdicts['m_hat_series'] == [0, 0]
    assert exit_status(first) == EXIT_OK
    a = emit_tables(first, tmp_path / 'a')
    b = emit_tables(second, tmp_path / 'b')
    assert a.name == b.name == first.run_name
    assert csv_files(a) == csv_files(b)
    assert {'recurrence_R3_L4.csv', 'recurrence_R4_L6.csv', 'plot_data.csv'} <= set(csv_files(a))


def test_scenarios_get_their_own_run_directories(tmp_path):
    out = tmp_path / 'out'
    dirs = []
    for name, text in [('r.ini', RECURRENCE_INI), ('c.ini', CONTRACTION_INI)]:
        config = write(tmp_path, text, name)
        dirs.append(emit_tables(run_scenario(load_config(config), run_args(config, tmp_path)), out))
    assert dirs[0] != dirs[1]
    assert all(d.parent == out for d in dirs)
    contraction = csv_files(dirs[1])
    rho = [n for n in contraction if n.endswith('_rho.csv')]
    assert len(rho) == 1
    assert contraction[rho[0]].decode().splitlines()[0] == 'r,rho_hat,rho_bar'


def test_empty_tables_are_written_header_only(tmp_path):
    cfg = ExperimentConfig(scenario='contraction', group='family=free k=2', radii=[2])
    empty = ContractionProfile(name='contraction_empty')
    report = RunReport.from_profiles('contraction', cfg, [empty],
                                     extra_tables={'contraction_empty_rho': empty.contraction_frame()})
    run_dir = emit_tables(report, tmp_path)
    assert (run_dir / 'contraction_empty.csv').read_text() == 'quantity,param_1,param_2,value,witness_id\n'
    assert (run_dir / 'contraction_empty_rho.csv').read_text() == 'r,rho_hat,rho_bar\n'
    summary = json.loads((run_dir / SUMMARY_FILE).read_text())
    assert 'contraction_empty.csv' in summary['zero_row_tables']
    assert 'contraction_empty_rho.csv' in summary['zero_row_tables']


def test_report_reemits_identical_tables(tmp_path):
    config = write(tmp_path, RECURRENCE_INI)
    run_dir = emit_tables(run_scenario(load_config(config), run_args(config, tmp_path)), tmp_path / 'a')
    again = emit_tables(load_report(run_dir), tmp_path / 'b')
    assert csv_files(run_dir) == csv_files(again)
    assert (run_dir / 'witnesses.txt').read_text() == (again / 'witnesses.txt').read_text()


def test_report_schema_mismatch(tmp_path):
    cfg = ExperimentConfig(scenario='contraction', group='family=free k=2', radii=[2])
    run_dir = emit_tables(RunReport.from_profiles('contraction', cfg, [ContractionProfile()]), tmp_path)
    payload = json.loads((run_dir / REPORT_FILE).read_text())
    payload['schema_version'] = 99
    (run_dir / REPORT_FILE).write_text(json.dumps(payload))
    with pytest.raises(IoFailure):
        load_report(run_dir)
    with pytest.raises(IoFailure):
        load_report(tmp_path / 'missing')


def test_exit_status():
    cfg = ExperimentConfig(scenario='contraction', group='family=free k=2', radii=[2])
    report = RunReport.from_profiles('contraction', cfg, [ContractionProfile(complete=False)])
    assert exit_status(report) == EXIT_BUDGET
    report.failure = True
    assert exit_status(report) == EXIT_VERDICT


def test_cli(tmp_path):
    cache_dir = tmp_path / 'cache'
    config = write(tmp_path, RECURRENCE_INI)
    out = tmp_path / 'out'
    assert mrstab_cli.main(['run', str(config), '--output', str(out), '--cache-dir', str(cache_dir)]) == EXIT_OK
    run_dir = next(p for p in out.iterdir() if p.name.startswith('recurrence_'))
    assert (run_dir / REPORT_FILE).exists()
    assert mrstab_cli.main(['report', str(run_dir)]) == EXIT_OK
    assert mrstab_cli.main(['cache', 'ls', '--cache-dir', str(cache_dir)]) == EXIT_OK
    assert len(GraphCache(cache_dir).ls()) == 2
    assert mrstab_cli.main(['cache', 'rm', '--cache-dir', str(cache_dir)]) == EXIT_OK
    assert GraphCache(cache_dir).ls() == []


def test_cli_config_errors(tmp_path):
    bad = write(tmp_path, RECURRENCE_INI.replace('scenario = recurrence', 'scenario = flow'))
    assert mrstab_cli.main(['run', str(bad), '--output', str(tmp_path)]) == EXIT_CONFIG
    assert mrstab_cli.main(['run', str(tmp_path / 'missing.ini'), '--output', str(tmp_path)]) == EXIT_CONFIG
    assert mrstab_cli.main(['cache', 'purge']) == EXIT_CONFIG
