import csv
import json

import numpy as np
import pytest

from kherd.cli import experiment_command
from kherd.constants import ExitCode, PosteriorDefaults
from kherd.exceptions import ConfigError, DegenerateData


def _read_csv(path):
    with open(path, newline='') as handle:
        return list(csv.reader(handle))


def _manifest(out_dir):
    return json.loads((out_dir / 'manifest.json').read_text())


def _assert_identical(first, second, names):
    for name in names:
        assert (first / name).read_bytes() == (second / name).read_bytes(), name


def _logistic_csv(path, n=80, seed=4):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, 2))
    y = (X @ np.array([1.5, -1.0]) + 0.3 * rng.standard_normal(n) > 0).astype(int)
    path.write_text(''.join(f"{a:.6f},{b:.6f},{label}\n" for (a, b), label in zip(X, y)))
    return path


class TestCommandRegistration:
    """Test cases for the app factory's command wiring."""

    def test_commands_are_registered(self, app):
        assert {'gm-herd', 'empirical-herd', 'compare', 'posterior'} <= set(app.cli.commands)

    def test_help_lists_shared_options(self, runner):
        result = runner.invoke(args=['gm-herd', '--help'])
        assert result.exit_code == ExitCode.OK
        for flag in ('--config', '--out', '--seed', '--T', '--sigma'):
            assert flag in result.output


class TestGmHerdCommand:
    """Test cases for the gm-herd command."""

    ARGS = ('--dim', '2', '--components', '3', '--n-seeds', '5', '--max-iter', '20')

    def test_writes_artifacts_and_manifest(self, run_cli):
        code, out = run_cli('gm-herd', *self.ARGS, '--T', '6', seed=1)
        assert code == ExitCode.OK
        rows = _read_csv(out / 'samples.csv')
        assert rows[0] == ['x0', 'x1']
        assert len(rows) == 7
        trace = _read_csv(out / 'error_trace.csv')
        assert trace[0] == ['T', 'error'] and trace[-1][0] == '6'
        assert len(_read_csv(out / 'iid_samples.csv')) == 7
        manifest = _manifest(out)
        assert manifest['error'] is None
        assert manifest['seed'] == 1
        assert manifest['config']['T'] == 6
        assert set(manifest['artifacts']) >= {'samples.csv', 'error_trace.csv', 'samples.json', 'target.json'}

    def test_zero_samples(self, run_cli):
        code, out = run_cli('gm-herd', *self.ARGS, '--T', '0')
        assert code == ExitCode.OK
        assert _read_csv(out / 'samples.csv') == [['x0', 'x1']]

    def test_runs_are_byte_identical(self, run_cli):
        _, first = run_cli('gm-herd', *self.ARGS, '--T', '5', seed=3)
        _, second = run_cli('gm-herd', *self.ARGS, '--T', '5', seed=3)
        _assert_identical(first, second,
                          ('samples.csv', 'error_trace.csv', 'samples.json', 'iid_samples.csv', 'target.json'))

    def test_invalid_sample_count(self, run_cli):
        code, out = run_cli('gm-herd', *self.ARGS, '--T', '-1')
        assert code == ExitCode.CONFIG_ERROR
        assert 'T' in _manifest(out)['error']

    def test_flag_overrides_config_file(self, run_cli, tmp_path):
        config = tmp_path / 'settings.json'
        config.write_text(json.dumps({'T': 3, 'n-seeds': 5}))
        code, out = run_cli('gm-herd', '--config', str(config), '--components', '2', '--T', '4')
        assert code == ExitCode.OK
        assert len(_read_csv(out / 'samples.csv')) == 5
        assert _manifest(out)['config']['n_seeds'] == 5

    def test_scatter_preset_sets_the_bandwidth(self, run_cli):
        code, out = run_cli('gm-herd', '--preset', 'scatter-2d', '--n-seeds', '5', '--max-iter', '20')
        assert code == ExitCode.OK
        manifest = _manifest(out)
        assert manifest['config']['sigma'] == 0.05
        assert manifest['results']['sigma'] == 0.05
        assert len(_read_csv(out / 'samples.csv')) == 21

    def test_unknown_command(self, run_cli):
        code, _ = run_cli('anneal')
        assert code == ExitCode.CONFIG_ERROR

    def test_bad_flag_value(self, run_cli):
        code, _ = run_cli('gm-herd', '--T', 'many')
        assert code == ExitCode.CONFIG_ERROR


class TestEmpiricalHerdCommand:
    """Test cases for the empirical-herd command."""

    def test_single_row_repeats(self, run_cli, tmp_path):
        data = tmp_path / 'one.csv'
        data.write_text('1.5,2.5\n')
        code, out = run_cli('empirical-herd', '--input', str(data), '--T', '4')
        assert code == ExitCode.OK
        rows = _read_csv(out / 'samples.csv')
        assert rows[0] == ['index', 'x0', 'x1']
        assert [row[0] for row in rows[1:]] == ['0', '0', '0', '0']

    def test_unique_rows(self, run_cli, tmp_path):
        data = tmp_path / 'points.csv'
        data.write_text('0,0\n1,0\n0,1\n1,1\n')
        code, out = run_cli('empirical-herd', '--input', str(data), '--T', '4', '--unique', '--sigma', '1.0')
        assert code == ExitCode.OK
        assert sorted(row[0] for row in _read_csv(out / 'samples.csv')[1:]) == ['0', '1', '2', '3']

    def test_unique_from_config_file(self, run_cli, tmp_path):
        data = tmp_path / 'points.csv'
        data.write_text('0,0\n0,0\n3,3\n')
        config = tmp_path / 'settings.json'
        config.write_text(json.dumps({'unique': True, 'sigma': 1.0}))
        code, out = run_cli('empirical-herd', '--config', str(config), '--input', str(data), '--T', '3')
        assert code == ExitCode.OK
        assert sorted(row[0] for row in _read_csv(out / 'samples.csv')[1:]) == ['0', '1', '2']

    def test_runs_are_byte_identical(self, run_cli, tmp_path):
        data = tmp_path / 'points.csv'
        rows = np.random.default_rng(8).standard_normal((40, 3))
        data.write_text(''.join(','.join(f"{v:.6f}" for v in row) + '\n' for row in rows))
        _, first = run_cli('empirical-herd', '--input', str(data), '--T', '15', seed=2)
        _, second = run_cli('empirical-herd', '--input', str(data), '--T', '15', seed=2)
        _assert_identical(first, second, ('samples.csv', 'error_trace.csv', 'samples.json'))

    def test_missing_input(self, run_cli, tmp_path):
        code, out = run_cli('empirical-herd', '--input', str(tmp_path / 'nope.csv'), '--T', '2')
        assert code == ExitCode.CONFIG_ERROR
        assert _manifest(out)['error'] is not None

    def test_unparseable_input(self, run_cli, tmp_path):
        data = tmp_path / 'bad.csv'
        data.write_text('1.0,2.0\n3.0,abc\n')
        code, out = run_cli('empirical-herd', '--input', str(data), '--T', '2')
        assert code == ExitCode.CONFIG_ERROR
        assert _manifest(out)['error'].startswith('ParseError')


class TestCompareCommand:
    """Test cases for the compare command."""

    SMALL = ('--functions', 'moment1,moment2', '--iid-repeats', '2', '--ground-truth-draws', '1000',
             '--n-seeds', '3', '--max-iter', '10')

    def test_single_grid_point(self, run_cli):
        code, out = run_cli('compare', '--dim', '2', '--components', '3', '--T-grid', '5', *self.SMALL)
        assert code == ExitCode.OK
        rows = _read_csv(out / 'traces.csv')
        assert rows[0] == ['T', 'error', 'estimator', 'function', 'seed', 'std']
        assert len(rows) == 1 + 4
        assert json.loads((out / 'rates.json').read_text()) == []

    def test_rates_schema(self, run_cli):
        code, out = run_cli('compare', '--dim', '2', '--components', '3', '--T', '30', *self.SMALL)
        assert code == ExitCode.OK
        rates = json.loads((out / 'rates.json').read_text())
        assert rates
        for rate in rates:
            assert set(rate) == {'estimator', 'function', 'slope', 'r2'}

    def test_preset(self, run_cli):
        code, out = run_cli('compare', '--preset', 'moments-5d', '--t-grid', '1,2', *self.SMALL)
        assert code == ExitCode.OK
        target = json.loads((out / 'target.json').read_text())
        assert target['dim'] == 5
        assert len(target['weights']) == 100

    def test_runs_are_byte_identical(self, run_cli):
        args = ('--dim', '2', '--components', '3', '--T', '20', '--empirical', '200', *self.SMALL)
        _, first = run_cli('compare', *args, seed=5)
        _, second = run_cli('compare', *args, seed=5)
        _assert_identical(first, second, ('traces.csv', 'rates.json', 'target.json'))


class TestPosteriorCommand:
    """Test cases for the posterior command."""

    SMALL = ('--keep', '30', '--burn-in', '20', '--thin', '1', '--T-grid', '2,5,10', '--subset-repeats', '2')

    def test_single_draw_compresses_exactly(self, run_cli):
        code, out = run_cli('posterior', '--synthetic', '--keep', '1', '--burn-in', '10', '--thin', '1',
                            '--proposal-scale', '0.1', '--T-grid', '1,5', '--subset-repeats', '2')
        assert code == ExitCode.OK
        rows = _read_csv(out / 'rmse_traces.csv')
        herding = [float(r[1]) for r in rows[1:] if r[2] == 'herding']
        assert herding == pytest.approx([0.0, 0.0], abs=1e-12)

    def test_more_super_samples_lower_rmse(self, run_cli):
        code, out = run_cli('posterior', '--synthetic', '--keep', '500', '--burn-in', '200', '--thin', '2',
                            '--T-grid', '10,50', '--subset-repeats', '2')
        assert code == ExitCode.OK
        rows = _read_csv(out / 'rmse_traces.csv')
        herding = {int(r[0]): float(r[1]) for r in rows[1:] if r[2] == 'herding'}
        assert herding[50] < herding[10]
        summary = json.loads((out / 'posterior_summary.json').read_text())
        assert summary['n_train'] == 2000 and summary['n_test'] == 1000
        assert 0.0 <= summary['acceptance_rate'] <= 1.0
        assert set(summary['samples_to_accuracy']) == {'herding', 'random'}
        assert len(_read_csv(out / 'chain.csv')) == 501

    def test_dataset_runs_use_the_fixed_bandwidth(self, run_cli, tmp_path):
        data = _logistic_csv(tmp_path / 'data.csv')
        code, out = run_cli('posterior', '--dataset', str(data), '--n-train', '50', '--proposal-scale', '0.5',
                            *self.SMALL)
        assert code == ExitCode.OK
        summary = json.loads((out / 'posterior_summary.json').read_text())
        assert summary['sigma'] == PosteriorDefaults.DATASET_SIGMA
        assert summary['n_train'] == 50 and summary['n_test'] == 30

    def test_explicit_bandwidth_wins_for_datasets(self, run_cli, tmp_path):
        data = _logistic_csv(tmp_path / 'data.csv')
        code, out = run_cli('posterior', '--dataset', str(data), '--n-train', '50', '--proposal-scale', '0.5',
                            '--sigma', '2.5', *self.SMALL)
        assert code == ExitCode.OK
        assert json.loads((out / 'posterior_summary.json').read_text())['sigma'] == 2.5

    def test_runs_are_byte_identical(self, run_cli):
        _, first = run_cli('posterior', '--synthetic', *self.SMALL, seed=6)
        _, second = run_cli('posterior', '--synthetic', *self.SMALL, seed=6)
        _assert_identical(first, second, ('chain.csv', 'chain.json', 'samples.csv', 'rmse_traces.csv',
                                          'accuracy_traces.csv', 'posterior_summary.json'))

    def test_dataset_and_synthetic_conflict(self, run_cli, tmp_path):
        data = _logistic_csv(tmp_path / 'data.csv')
        code, out = run_cli('posterior', '--dataset', str(data), '--synthetic', *self.SMALL)
        assert code == ExitCode.CONFIG_ERROR
        assert 'dataset' in _manifest(out)['error']

    def test_missing_dataset(self, run_cli, tmp_path):
        code, _ = run_cli('posterior', '--dataset', str(tmp_path / 'absent.csv'), '--keep', '5')
        assert code == ExitCode.CONFIG_ERROR


class TestErrorHandlers:
    """Test cases for exit-code mapping."""

    def _register(self, app, error):
        @experiment_command(app.cli, 'explode')
        def explode(settings, out_dir, manifest):
            raise error

    def test_numerical_error(self, app, run_cli):
        self._register(app, DegenerateData('no variance left'))
        code, out = run_cli('explode')
        assert code == ExitCode.NUMERIC_ERROR
        assert _manifest(out)['error'].startswith('DegenerateData')

    def test_configuration_error(self, app, run_cli):
        self._register(app, ConfigError('bad width', field='width'))
        code, out = run_cli('explode')
        assert code == ExitCode.CONFIG_ERROR
        assert _manifest(out)['error'] == 'ConfigError: bad width'

    def test_plain_value_error_is_unexpected(self, app, run_cli):
        self._register(app, ValueError('not a configuration error'))
        code, out = run_cli('explode')
        assert code == ExitCode.UNEXPECTED
        assert _manifest(out)['error'].startswith('ValueError')

    def test_unexpected_error(self, app, run_cli):
        self._register(app, RuntimeError('boom'))
        code, _ = run_cli('explode')
        assert code == ExitCode.UNEXPECTED
