from flask.cli import FlaskGroup

from bcmlr.app import create_app

cli = FlaskGroup(create_app=create_app, add_default_commands=False,
                 help='Bayesian multiple changepoint detection.')

if __name__ == '__main__':
    cli()
