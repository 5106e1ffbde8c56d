# coding: utf-8

import csv
import json

import numpy as np
import pytest

from bcmlr import cli, draws as draws_io


@pytest.fixture
def series_csv(runner, tmp_path):
    "A small simulated change in mean series."
    out = tmp_path / 'sim'
    result = runner.invoke(args=['simulate', '--scenario', 'cim', '--length', '120', '--seed', '1', '--out', str(out)])
    assert result.exit_code == 0, result.output
    return out / 'data.csv'


def fit_args(data, out, *extra):
    return ['fit', '--data', str(data), '--num-changepoints', '2', '--iters', '100', '--burnin', '50',
            '--min-seg', '10', '--seed', '2', '--out', str(out), *extra]


def test_simulate(runner, tmp_path):
    out = tmp_path / 'nested' / 'sim'
    result = runner.invoke(args=['simulate', '--scenario', 'cic', '--variant', 'high', '--length', '300',
                                 '--out', str(out)])
    assert result.exit_code == 0, result.output

    with open(out / 'data.csv', newline='') as csv_file:
        rows = list(csv.reader(csv_file))
    assert rows[0] == [f'x{d}' for d in range(1, 9)]
    assert len(rows) == 301

    truth = json.loads((out / 'truth.json').read_text())
    assert truth['kappas'] == [50, 250]
    assert truth['scenario'] == 'cic'


def test_fit_outputs(runner, series_csv, tmp_path):
    result = runner.invoke(args=fit_args(series_csv, tmp_path / 'fit', '--standardize'))
    assert result.exit_code == 0, result.output
    assert 'changepoint 1: mode' in result.output

    for name in ('draws.csv', 'summary.json', 'summary.csv'):
        assert (tmp_path / 'fit' / name).exists(), f'{name} should be written'

    with open(tmp_path / 'fit' / 'draws.csv', newline='') as csv_file:
        header = next(csv.reader(csv_file))
    assert header[:3] == ['iteration', 'kappa_1', 'kappa_2']
    assert header[-1] == 'loss'

    summary = json.loads((tmp_path / 'fit' / 'summary.json').read_text())
    assert len(summary['kappa']['changepoints']) == 2
    assert len(summary['trajectories']) == 2


def test_fit_is_deterministic(runner, series_csv, tmp_path):
    for name in ('first', 'second'):
        result = runner.invoke(args=fit_args(series_csv, tmp_path / name))
        assert result.exit_code == 0, result.output
    assert (tmp_path / 'first' / 'draws.csv').read_text() == (tmp_path / 'second' / 'draws.csv').read_text()


def test_fit_tempered(runner, series_csv, tmp_path):
    result = runner.invoke(args=fit_args(series_csv, tmp_path / 'tempered', '--temper', '3'))
    assert result.exit_code == 0, result.output

    lines = (tmp_path / 'tempered' / 'rejection_rates.csv').read_text().splitlines()
    assert lines[0] == 'pair,power_low,power_high,rejection_rate'
    assert len(lines) == 3


def test_binary_draws_and_summarize(runner, series_csv, tmp_path):
    result = runner.invoke(args=fit_args(series_csv, tmp_path / 'fit', '--format', 'binary'))
    assert result.exit_code == 0, result.output
    assert (tmp_path / 'fit' / 'draws.bin').read_bytes()[:6] == b'BCMLR1'

    result = runner.invoke(args=['summarize', '--draws', str(tmp_path / 'fit' / 'draws.bin'),
                                 '--gamma', '0.1', '--out', str(tmp_path / 'again')])
    assert result.exit_code == 0, result.output
    summary = json.loads((tmp_path / 'again' / 'summary.json').read_text())
    assert summary['kappa']['gamma'] == 0.1
    assert summary['trajectories'] == []


def test_summarize_csv_draws(runner, series_csv, tmp_path):
    runner.invoke(args=fit_args(series_csv, tmp_path / 'fit'))
    result = runner.invoke(args=['summarize', '--draws', str(tmp_path / 'fit' / 'draws.csv'),
                                 '--data', str(series_csv), '--out', str(tmp_path / 'again')])
    assert result.exit_code == 0, result.output
    first = json.loads((tmp_path / 'fit' / 'summary.json').read_text())
    again = json.loads((tmp_path / 'again' / 'summary.json').read_text())
    assert first['kappa'] == again['kappa']

    result = runner.invoke(args=['summarize', '--draws', str(tmp_path / 'fit' / 'draws.csv')])
    assert result.exit_code == 2, 'csv draws need the series length'


def test_select(runner, series_csv, tmp_path):
    result = runner.invoke(args=['select', '--data', str(series_csv), '--l-fitted', '2', '--iters', '60',
                                 '--burnin', '30', '--min-seg', '10', '--zeta', '5', '--out', str(tmp_path / 'sel')])
    assert result.exit_code == 0, result.output
    assert 'most probable' in result.output

    report = json.loads((tmp_path / 'sel' / 'selection.json').read_text())
    assert len(report['pmf']) == 3
    assert sum(report['pmf']) == pytest.approx(1.0)
    assert report['config']['l_fitted'] == 2


def test_bench(runner, tmp_path):
    result = runner.invoke(args=['bench', '--scenario', 'cim', '--variant', 'low', '--replicates', '1', '--known-l',
                                 '--iters', '40', '--burnin', '20', '--prior', 'gaussian', '--threads', '1',
                                 '--out', str(tmp_path / 'bench')])
    assert result.exit_code == 0, result.output
    assert 'mean ARI' in result.output

    with open(tmp_path / 'bench' / 'bench.csv', newline='') as csv_file:
        rows = list(csv.DictReader(csv_file))
    assert len(rows) == 1
    assert rows[0]['scenario'] == 'cim' and rows[0]['known_l'] == '1'

    result = runner.invoke(args=['bench', '--replicates', '1'])
    assert result.exit_code == 2, 'a scenario or --all is required'


def test_validation_errors(runner, series_csv, tmp_path):
    result = runner.invoke(args=['fit', '--data', str(series_csv), '--num-changepoints', '1',
                                 '--iters', '100', '--burnin', '200', '--out', str(tmp_path)])
    assert result.exit_code == 2

    result = runner.invoke(args=['select', '--data', str(series_csv), '--zeta', '10', '--min-seg', '5',
                                 '--out', str(tmp_path)])
    assert result.exit_code == 2

    result = runner.invoke(args=['fit', '--data', str(series_csv), '--num-changepoints', '20',
                                 '--min-seg', '10', '--out', str(tmp_path)])
    assert result.exit_code == 2, 'infeasible number of changepoints'


def test_missing_data_file(runner, tmp_path):
    result = runner.invoke(args=['fit', '--data', str(tmp_path / 'nope.csv'), '--num-changepoints', '1',
                                 '--out', str(tmp_path)])
    assert result.exit_code == 4
    assert 'nope.csv' in result.output


def test_config_file(app, runner, series_csv, tmp_path):
    settings = tmp_path / 'settings.py'
    settings.write_text('MIN_SEG = 100\n')
    try:
        result = runner.invoke(args=['fit', '--config', str(settings), '--data', str(series_csv),
                                     '--num-changepoints', '2', '--out', str(tmp_path)])
        assert result.exit_code == 2, 'the config file minimum segment length makes two changepoints infeasible'
    finally:
        app.config['MIN_SEG'] = 10


def test_series_centered_by_default(app, tmp_path):
    path = tmp_path / 'raw.csv'
    path.write_text('a,b\n' + ''.join(f'{50 + i},7\n' for i in range(10)))

    with app.app_context():
        for standardize in (None, False):
            x = cli.load_series(str(path), None, standardize)
            assert np.all(np.abs(x.values.mean(axis=0)) < 1e-10), 'the model has no intercepts'
        assert np.allclose(cli.load_series(str(path), None, False).values[:, 0], np.arange(10) - 4.5)

        embedded = cli.load_series(str(path), 'poly2', None, False)
        assert embedded.p == 5
        assert np.all(np.abs(embedded.values.mean(axis=0)) < 1e-10)


def test_select_with_threads(runner, series_csv, tmp_path):
    result = runner.invoke(args=['select', '--data', str(series_csv), '--l-fitted', '2', '--iters', '60',
                                 '--burnin', '30', '--min-seg', '10', '--zeta', '5', '--threads', '1',
                                 '--no-standardize', '--embed-last', '--out', str(tmp_path / 'sel')])
    assert result.exit_code == 0, result.output
    assert (tmp_path / 'sel' / 'selection.json').exists()


@pytest.mark.slow
def test_select_short_three_column_series(runner, tmp_path):
    "158 observations of 3 series, selected with up to 10 changepoints and refitted at the estimate."
    rng = np.random.default_rng(51)
    shift = np.array([2.5, -2.0, 1.5])
    values = np.vstack([rng.standard_normal((60, 3)), shift + rng.standard_normal((50, 3)),
                        rng.standard_normal((48, 3))])
    data = tmp_path / 'prices.csv'
    data.write_text('a,b,c\n' + ''.join(','.join(f'{v:.6f}' for v in row) + '\n' for row in values))

    out = tmp_path / 'sel'
    result = runner.invoke(args=['select', '--data', str(data), '--l-fitted', '10', '--alpha', '0.1', '--tau', '0.5',
                                 '--min-seg', '10', '--zeta', '5', '--iters', '2000', '--burnin', '1000',
                                 '--seed', '1', '--out', str(out)])
    assert result.exit_code == 0, result.output

    report = json.loads((out / 'selection.json').read_text())
    assert len(report['pmf']) == 11
    assert sum(report['pmf']) == pytest.approx(1.0)
    assert report['l_hat'] == int(np.argmax(report['pmf'])) > 0
    assert report['config']['min_seg'] == 10 and report['config']['zeta'] == 5

    refit = draws_io.load(out / 'draws.csv', n=158, min_seg=10)
    assert refit.num_changepoints == report['l_hat']

    summary = json.loads((out / 'summary.json').read_text())
    assert len(summary['kappa']['changepoints']) == report['l_hat']
    with open(out / 'summary.csv', newline='') as csv_file:
        assert len(list(csv.DictReader(csv_file))) > 0
