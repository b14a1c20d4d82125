import json
import math

import numpy as np
import pytest
from click.testing import CliRunner

from elliptest.cli import cli, main
from elliptest.generators import SettingSpec, generate
from elliptest.simharness import parse_csv


@pytest.fixture
def runner():
    return CliRunner()


def write_csv(path, X, header=None):
    with open(path, 'w') as f:
        if header:
            f.write(','.join(header) + '\n')
        np.savetxt(f, X, delimiter=',', fmt='%.17g')
    return str(path)


def read_json(path):
    with open(path) as f:
        return json.load(f)


@pytest.fixture
def normal_csv(tmp_path):
    X = np.random.default_rng(0).standard_normal((300, 2))
    return write_csv(tmp_path / 'normal.csv', X, header=['a', 'b'])


def test_test_command_reports_everything(runner, normal_csv, tmp_path):
    out = tmp_path / 'report.json'
    result = runner.invoke(cli, ['test', normal_csv, '--B', '3', '--seed', '5', '-o', str(out)])
    assert result.exit_code in (0, 3)
    report = read_json(out)
    assert report['schema_version'] == 1
    assert report['command'] == 'test'
    assert report['columns'] == ['a', 'b']
    assert report['known_moments'] is None
    assert report['config']['seed'] == 5 and report['config']['B'] == 3
    res = report['result']
    assert res['mode'] == 'unknown' and res['n'] == 300 and res['p'] == 2
    assert (result.exit_code == 3) == res['reject']
    assert 'split_permutation' not in res


def test_known_moments_are_echoed(runner, normal_csv, tmp_path):
    out = tmp_path / 'report.json'
    result = runner.invoke(cli, ['test', normal_csv, '--mu', '0,0', '--sigma', '1,0;0,1', '--B', '0',
                                 '--include-split', '-o', str(out)])
    assert result.exit_code == 0
    report = read_json(out)
    assert report['known_moments'] == {'mu': [0.0, 0.0], 'sigma': [[1.0, 0.0], [0.0, 1.0]]}
    assert report['result']['mode'] == 'known'
    assert report['result']['split_permutation'] is None


def test_skewed_data_exits_with_reject_code(runner, tmp_path):
    X = generate(SettingSpec(setting=1, n=1000, p=2, s=2, seed=3))
    path = write_csv(tmp_path / 'skewed.csv', X)
    result = runner.invoke(cli, ['test', path, '--mu', '0,0', '--sigma', '1,0;0,1', '--B', '0',
                                 '-o', str(tmp_path / 'out.json')])
    assert result.exit_code == 3


def test_non_numeric_cell_is_located(runner, tmp_path):
    path = tmp_path / 'bad.csv'
    path.write_text('x,y\n1,2\n3,4\n5,oops\n7,8\n')
    result = runner.invoke(cli, ['test', str(path)])
    assert result.exit_code == 1
    assert "'oops' at line 4, column 2" in result.output


def test_mu_without_sigma_is_a_usage_error(runner, normal_csv):
    result = runner.invoke(cli, ['test', normal_csv, '--mu', '0,0'])
    assert result.exit_code != 0
    assert '--mu and --sigma' in result.output


def test_entropy_of_standard_normal(runner, tmp_path):
    X = np.random.default_rng(1).standard_normal((5000, 1))
    out = tmp_path / 'h.json'
    result = runner.invoke(cli, ['entropy', write_csv(tmp_path / 'z.csv', X), '-o', str(out)])
    assert result.exit_code == 0
    report = read_json(out)
    assert abs(report['h_hat'] - 1.4189) <= 0.05
    assert report['n'] == 5000 and report['d'] == 1
    assert 'xi' not in report


def test_entropy_echoes_tunings(runner, tmp_path):
    X = np.random.default_rng(2).standard_normal((200, 2))
    out = tmp_path / 'h.json'
    result = runner.invoke(cli, ['entropy', write_csv(tmp_path / 'z.csv', X), '--k', '7',
                                 '--weights', 'uniform', '--xi', '-o', str(out)])
    assert result.exit_code == 0
    report = read_json(out)
    assert report['k'] == 7
    assert report['weights'] == 'uniform'
    assert len(report['xi']) == 200


def test_entropy_duplicates_need_jitter(runner, tmp_path):
    X = np.random.default_rng(3).standard_normal((50, 2))
    X[7] = X[2]
    path = write_csv(tmp_path / 'dup.csv', X)
    result = runner.invoke(cli, ['entropy', path])
    assert result.exit_code == 1
    assert 'DuplicatePoints' in result.output

    out = tmp_path / 'h.json'
    result = runner.invoke(cli, ['entropy', path, '--jitter', '1e-6', '--seed', '4', '-o', str(out)])
    assert result.exit_code == 0
    assert read_json(out)['jitter'] == 1e-6


def test_pairwise_counts_pairs(runner, tmp_path):
    X = np.random.default_rng(5).standard_normal((100, 9))
    out = tmp_path / 'pairs.json'
    runner.invoke(cli, ['pairwise', write_csv(tmp_path / 'nine.csv', X), '--B', '0', '-o', str(out)])
    res = read_json(out)['result']
    assert res['n_pairs'] == 36
    assert res['alpha_prime'] == pytest.approx(0.05 / 36)
    assert sum(v is not None for row in res['p_values'] for v in row) == 36


def test_pairwise_independent_normals(runner, tmp_path):
    X = np.random.default_rng(6).standard_normal((300, 3))
    out = tmp_path / 'pairs.json'
    result = runner.invoke(cli, ['pairwise', write_csv(tmp_path / 'three.csv', X), '--B', '0',
                                 '--seed', '11', '-o', str(out)])
    assert result.exit_code == 0
    assert read_json(out)['result']['rejected_pairs'] == []


def test_simulate_preset(runner, tmp_path):
    out = tmp_path / 'table.csv'
    result = runner.invoke(cli, ['simulate', '--preset', 'smoke', '--reps', '2', '--workers', '1',
                                 '-o', str(out)])
    assert result.exit_code == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith('setting,n,p,s,reps')
    assert len(lines) == 5


@pytest.mark.slow
def test_fast_size_table_controls_level(runner, tmp_path):
    out = tmp_path / 'table1.csv'
    result = runner.invoke(cli, ['simulate', '--preset', 'table1', '--fast', '-o', str(out)])
    assert result.exit_code == 0
    table = parse_csv(out.read_text())
    bound = 0.05 + 2 * math.sqrt(0.05 * 0.95 / 200)
    assert len(table) == 8
    for row in table:
        assert row.s == 0 and row.reps == 200 and row.failures == 0
        assert row.reject_rate <= bound, (row.setting, row.p, row.reject_rate)


def test_simulate_markdown(runner, tmp_path):
    out = tmp_path / 'table.md'
    runner.invoke(cli, ['simulate', '--preset', 'smoke', '--reps', '1', '--format', 'markdown',
                        '--workers', '1', '-o', str(out)])
    lines = out.read_text().splitlines()
    assert lines[0].startswith('| setting | n | p | s |')
    assert set(lines[1]) <= set('|-:')


def test_simulate_needs_seed(runner, tmp_path):
    config = tmp_path / 'grid.yaml'
    config.write_text('settings: [1]\nns: [100]\nps: [2]\nreps: 2\n')
    result = runner.invoke(cli, ['simulate', str(config)])
    assert result.exit_code == 1
    assert 'seed' in result.output


def test_simulate_needs_one_source(runner):
    assert runner.invoke(cli, ['simulate']).exit_code != 0


def test_simulate_output_ignores_thread_cap(runner, tmp_path):
    config = tmp_path / 'grid.yaml'
    config.write_text('settings: [1, 4]\nns: [80]\nps: [2]\ns: [0, 1]\nreps: 3\nseed: 99\nB: 2\n')
    outputs = []
    for threads in ('1', '2'):
        out = tmp_path / f'table-{threads}.json'
        result = runner.invoke(cli, ['simulate', str(config), '--format', 'json', '--workers', '2',
                                     '-o', str(out)], env={'ELLIPTEST_THREADS': threads})
        assert result.exit_code == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]


def test_settings_listing(runner, tmp_path):
    out = tmp_path / 'settings.json'
    assert runner.invoke(cli, ['settings', '-o', str(out)]).exit_code == 0
    report = read_json(out)
    assert [s['id'] for s in report['settings']] == [1, 2, 3, 4]
    assert 'smoke' in report['presets']


def test_main_maps_errors_to_exit_one(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(['test', str(tmp_path / 'missing.csv')])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main(['simulate'])
    assert info.value.code == 1


def test_main_returns_decision_code(tmp_path):
    X = generate(SettingSpec(setting=1, n=1000, p=2, s=2, seed=3))
    path = write_csv(tmp_path / 'skewed.csv', X)
    with pytest.raises(SystemExit) as info:
        main(['test', path, '--mu', '0,0', '--sigma', '1,0;0,1', '--B', '0', '-o', str(tmp_path / 'r.json')])
    assert info.value.code == 3
