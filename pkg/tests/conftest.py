import os

import numpy as np
import pytest

os.environ.setdefault('FLASK_ENV', 'testing')

import bcmlr.app as bcmlr_app  # noqa: E402
from bcmlr import model  # noqa: E402
from bcmlr.data import SeriesMatrix  # noqa: E402
from bcmlr.samplers.gibbs import GibbsConfig  # noqa: E402


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False,
                     help='run the long statistical checks')


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: long statistical check, needs --runslow')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope='module')
def app():
    assert os.getenv('FLASK_ENV') == 'testing', "not running in testing mode"

    app = bcmlr_app.create_app()
    yield app


@pytest.fixture
def runner(app):
    return app.test_cli_runner()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def mean_shift_series(rng, n=120, kappas=(60,), p=2, shift=3.0):
    "Segments alternating between mean 0 and mean `shift` in every dimension."
    bounds = (0, *kappas, n)
    parts = [(j % 2) * shift + rng.standard_normal((bounds[j + 1] - bounds[j], p))
             for j in range(len(bounds) - 1)]
    return SeriesMatrix(np.vstack(parts))


@pytest.fixture
def shifted_series(rng):
    return mean_shift_series(rng)


def quick_config(**kwargs):
    defaults = dict(iters=300, burn_in=150, min_seg=5, prior=model.GaussianPrior(), seed=3)
    defaults.update(kwargs)
    return GibbsConfig(**defaults)
