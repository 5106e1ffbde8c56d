# coding: utf-8

import numpy as np
import pytest
import scipy.stats as stats

from bcmlr.errors import InvalidInputError
from bcmlr.samplers import pg
from bcmlr.samplers.pg import PgParams


def check_moments(b, c, rng, size):
    draws = pg.draw_pg(PgParams(b, c), rng, size=size)
    assert np.all(draws >= 0)

    mean, variance = pg.pg_mean(b, c), pg.pg_variance(b, c)
    mean_se = np.sqrt(variance / size)
    assert abs(draws.mean() - mean) < 4 * mean_se, f'PG({b}, {c}) mean off'

    # standard error of the sample variance from the fourth central moment
    centered = draws - draws.mean()
    var_se = np.sqrt((np.mean(centered ** 4) - np.var(draws) ** 2) / size)
    assert abs(np.var(draws, ddof=1) - variance) < 4 * var_se, f'PG({b}, {c}) variance off'


def test_analytic_moments():
    assert pg.pg_mean(1, 0) == pytest.approx(0.25)
    assert pg.pg_mean(1, 2) == pytest.approx(np.tanh(1) / 4, abs=1e-6)
    assert pg.pg_mean(1, 2) == pytest.approx(0.190400, abs=1e-6)
    assert pg.pg_mean(0.5, 1) == pytest.approx(0.115497, abs=1e-6)
    assert pg.pg_variance(1, 0) == pytest.approx(1 / 24)

    # series branch joins the closed form
    assert pg.pg_mean(1, 1e-4 * 0.99) == pytest.approx(pg.pg_mean(1, 1.01e-4), rel=1e-6)
    assert pg.pg_variance(1, 1e-4 * 0.99) == pytest.approx(pg.pg_variance(1, 1.01e-4), rel=1e-6)


def test_truncated_sum_mean():
    "The closed form mean agrees with the mean of the infinite gamma sum representation."
    k = np.arange(1, 2001)
    for b, c in ((1, 2), (0.5, 1)):
        series = b / (2 * np.pi ** 2) * np.sum(1 / ((k - 0.5) ** 2 + c ** 2 / (4 * np.pi ** 2)))
        assert series == pytest.approx(pg.pg_mean(b, c), abs=1e-4)


@pytest.mark.parametrize('b, c', [(1, 0), (1, 2), (0.5, 1)])
def test_draw_moments(b, c, rng):
    check_moments(b, c, rng, 50_000)


@pytest.mark.slow
@pytest.mark.parametrize('b', [0.3, 0.5, 1, 2])
@pytest.mark.parametrize('c', [0, 0.5, 1, 2, 5])
def test_draw_moment_grid(b, c, rng):
    check_moments(b, c, rng, 100_000)


def test_symmetry(rng):
    positive = pg.draw_pg(PgParams(1, 1.5), rng, size=10_000)
    negative = pg.draw_pg(PgParams(1, -1.5), rng, size=10_000)
    assert stats.ks_2samp(positive, negative).pvalue > 0.001


def test_determinism():
    first = pg.draw_pg_array(1.0, np.linspace(-3, 3, 50), np.random.default_rng(5))
    second = pg.draw_pg_array(1.0, np.linspace(-3, 3, 50), np.random.default_rng(5))
    assert np.array_equal(first, second)


def test_scalar_draw(rng):
    assert isinstance(pg.draw_pg(PgParams(1, 0.3), rng), float)


def test_invalid_params(rng):
    with pytest.raises(InvalidInputError):
        PgParams(0, 1)

    with pytest.raises(InvalidInputError):
        PgParams(1, np.inf)

    with pytest.raises(InvalidInputError):
        pg.draw_pg_array(-1, np.zeros(3), rng)
