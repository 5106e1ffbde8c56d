# coding: utf-8

from gevent import monkey

monkey.patch_all()  # noqa
import logging  # noqa
import os  # noqa

import flask  # noqa: E402


def create_app():
    "Build the application that owns the configuration and the command line."
    app = flask.Flask(__package__)
    load_config(app)
    app.logger.info('Starting app with FLASK_ENV=%s', os.getenv('FLASK_ENV'))

    with app.app_context():
        from . import cli
        cli.register(app)

    return app


def create_worker_app():
    """
    Construct a minimal flask app for the huey tasks, so the config and the app logger
    are available to chains and benchmark replicates running in the worker pool.
    """
    app = flask.Flask(__package__)
    load_config(app)
    return app


def load_config(app, config_file=None):
    """
    Defaults, then the FLASK_ENV overlay, then BCMLR_* environment variables and
    finally the optional config file. Command line flags are applied by each command.
    """
    app.config.from_object('bcmlr.config.default')

    env = os.getenv('FLASK_ENV')
    if env:
        app.config.from_object(f'bcmlr.config.{env}')

    app.config.from_prefixed_env('BCMLR')

    if config_file:
        app.config.from_pyfile(os.path.abspath(config_file))

    # library modules log under the app logger's name
    app.logger.setLevel(getattr(logging, app.config['LOG_LEVEL']))
