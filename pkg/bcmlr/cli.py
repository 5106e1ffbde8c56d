# coding: utf-8
"""
Command line: simulate, fit, select, bench and summarize.

Settings come from the app config (defaults, FLASK_ENV overlay, BCMLR_* environment
variables, then the --config file); any flag given on the command line wins.
"""
import json
import os
from functools import wraps

import click
import flask
from flask.cli import with_appcontext

from bcmlr import bench, draws as draws_io, simulation, summaries, tasks
from bcmlr.app import load_config
from bcmlr.data import EMBED_POLY2, preprocess, read_csv, write_csv
from bcmlr.errors import EXIT_IO, BcmlrError, InfeasibleConfigError, InvalidInputError
from bcmlr.model import Prior
from bcmlr.samplers import gibbs, tempering
from bcmlr.selection import CI_BOOTSTRAP, CI_DELONG, SCORE_ALL, SCORE_HOLDOUT, SelectionConfig, select_num_changepoints

FORMAT_CSV = 'csv'
FORMAT_BINARY = 'binary'


class CommandError(click.ClickException):
    "A failure after the arguments were accepted, with the exit code of its kind."

    def __init__(self, message, exit_code):
        super().__init__(message)
        self.exit_code = exit_code


def handle_errors(f):
    """
    Apply the --config file, then run the command mapping library and file errors
    to exit codes: 2 validation, 3 numerical, 4 I/O.
    """

    @wraps(f)
    def decorator(*args, config_file=None, **kwargs):
        try:
            if config_file:
                load_config(flask.current_app, config_file)
            return f(*args, **kwargs)
        except (InvalidInputError, InfeasibleConfigError) as error:
            raise click.UsageError(str(error))
        except BcmlrError as error:
            raise CommandError(str(error), error.exit_code)
        except OSError as error:
            path = error.filename or ''
            raise CommandError(f'{path}: {error.strerror or error}', EXIT_IO)

    return decorator


def config_option(f):
    return click.option('--config', 'config_file', default=None,
                        help='Flat KEY = value settings file.')(f)


def setting(value, key):
    "The flag value when given, otherwise the configured one."
    return flask.current_app.config[key] if value is None else value


def output_dir(out):
    path = setting(out, 'OUTPUT_DIR')
    os.makedirs(path, exist_ok=True)
    return path


def build_prior(kind):
    kind = setting(kind, 'PRIOR')
    if kind == Prior.KIND_GAUSSIAN:
        return Prior.resolve(kind, variance=flask.current_app.config['GAUSSIAN_PRIOR_VARIANCE'])
    return Prior.resolve(kind)


def build_gibbs_config(iters, burn_in, min_seg, prior, seed, thin=None):
    config = flask.current_app.config
    return gibbs.GibbsConfig(iters=setting(iters, 'ITERS'),
                             burn_in=setting(burn_in, 'BURN_IN'),
                             min_seg=setting(min_seg, 'MIN_SEG'),
                             thin=setting(thin, 'THIN'),
                             prior=build_prior(prior),
                             kappa_prior=config['KAPPA_PRIOR'],
                             fast_threshold=config['FAST_PATH_THRESHOLD'],
                             seed=seed)


def load_series(path, embed, standardize=None, embed_first=None):
    "Read a series csv and preprocess it as configured."
    x = read_csv(path)
    flask.current_app.logger.info('loaded %s observations of dimension %s from %s', x.n, x.p, path)
    return preprocess(x, embed=embed, scale=setting(standardize, 'STANDARDIZE'),
                      embed_first=setting(embed_first, 'EMBED_FIRST'))


def write_draws(draws, out, fmt):
    if fmt == FORMAT_BINARY:
        path = os.path.join(out, 'draws.bin')
        draws_io.save_binary(draws, path)
    else:
        path = os.path.join(out, 'draws.csv')
        draws_io.save_csv(draws, path)
    return path


def write_summaries(draws, x, out, gamma):
    summary = summaries.summarize(draws, x, setting(gamma, 'CREDIBLE_GAMMA'))
    summaries.write_json(summary, os.path.join(out, 'summary.json'))
    summaries.write_csv(summary, os.path.join(out, 'summary.csv'))

    kappa = summary['kappa']
    for l in range(len(kappa.mode)):
        click.echo(f'changepoint {l + 1}: mode {kappa.mode[l]}, mean {kappa.mean[l]:.1f}, '
                   f'interval [{kappa.lower[l]}, {kappa.upper[l]}]')
    return summary


def preprocessing_options(f):
    f = click.option('--embed', type=click.Choice([EMBED_POLY2]), default=None,
                     help='Degree-2 polynomial embedding of every observation.')(f)
    f = click.option('--standardize/--no-standardize', default=None,
                     help='Scale every column to unit standard deviation. Columns are always centered.')(f)
    f = click.option('--embed-first/--embed-last', 'embed_first', default=None,
                     help='Embed the raw series before standardizing it, or embed the standardized one.')(f)
    return f


def series_options(f):
    f = click.option('--data', required=True, help='Series csv, one row per time point.')(f)
    return preprocessing_options(f)


def sampler_options(f):
    f = click.option('--prior', type=click.Choice([Prior.KIND_GAUSSIAN, Prior.KIND_HORSESHOE]), default=None)(f)
    f = click.option('--iters', type=int, default=None)(f)
    f = click.option('--burnin', 'burn_in', type=int, default=None)(f)
    f = click.option('--min-seg', type=int, default=None)(f)
    f = click.option('--seed', type=int, default=0, show_default=True)(f)
    f = click.option('--out', default=None, help='Output directory.')(f)
    return f


@click.command('simulate')
@config_option
@click.option('--scenario', type=click.Choice(simulation.SCENARIOS), required=True)
@click.option('--variant', type=click.Choice(simulation.VARIANTS), default=simulation.VARIANT_LOW,
              show_default=True)
@click.option('--length', 'n', type=int, default=600, show_default=True)
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--out', default=None, help='Output directory.')
@with_appcontext
@handle_errors
def simulate(scenario, variant, n, seed, out):
    "Write a synthetic series (data.csv) and its true changepoints (truth.json)."
    spec = simulation.ScenarioSpec(scenario, variant, n, tuple(round(k * n / 600) for k in (100, 500)), seed)
    x, truth = simulation.generate(spec)

    out = output_dir(out)
    write_csv(x, os.path.join(out, 'data.csv'))
    with open(os.path.join(out, 'truth.json'), 'w', encoding='utf-8') as truth_file:
        json.dump({'scenario': scenario, 'variant': variant, 'seed': seed,
                   'n': truth.n, 'kappas': list(truth.kappas)}, truth_file, indent=2)

    click.echo(f'{x.n} x {x.p} series written to {out}')


@click.command('fit')
@config_option
@series_options
@sampler_options
@click.option('--num-changepoints', 'num_changepoints', type=int, required=True)
@click.option('--thin', type=int, default=None)
@click.option('--temper', type=int, default=None, help='Number of tempering powers.')
@click.option('--gamma', type=float, default=None, help='Credible interval level is 1 - gamma.')
@click.option('--format', 'fmt', type=click.Choice([FORMAT_CSV, FORMAT_BINARY]), default=FORMAT_CSV,
              show_default=True)
@click.option('--threads', type=int, default=None)
@with_appcontext
@handle_errors
def fit(data, embed, standardize, embed_first, prior, iters, burn_in, min_seg, seed, out, num_changepoints,
        thin, temper, gamma, fmt, threads):
    "Sample the posterior with a known number of changepoints and summarize it."
    app = flask.current_app
    config = build_gibbs_config(iters, burn_in, min_seg, prior, seed, thin)
    x = load_series(data, embed, standardize, embed_first)
    gibbs.check_feasible(x.n, num_changepoints, config.min_seg)
    out = output_dir(out)

    tasks.set_threads(threads)
    if temper:
        powers = app.config['TEMPER_POWERS']
        schedule = (tempering.TemperSchedule(tuple(powers)) if powers
                    else tempering.TemperSchedule.geometric(temper, app.config['TEMPER_MIN_POWER']))
        [run] = tasks.map_tasks(tempering.run_tempered, [(x, num_changepoints, config, schedule)])
        draws = run.draws
        write_rejection_rates(run, os.path.join(out, 'rejection_rates.csv'))
    else:
        [draws] = tasks.map_tasks(gibbs.run_chain, [(x, num_changepoints, config)])

    path = write_draws(draws, out, fmt)
    app.logger.info('%s draws written to %s', draws.num_draws, path)
    write_summaries(draws, x, out, gamma)


def write_rejection_rates(run, path):
    with open(path, 'w', encoding='utf-8') as out:
        out.write('pair,power_low,power_high,rejection_rate\n')
        powers = run.draws.meta['powers']
        for k, rate in enumerate(run.rejection_rates):
            out.write(f'{k + 1},{powers[k]:.6f},{powers[k + 1]:.6f},{rate:.6f}\n')


@click.command('select')
@config_option
@series_options
@sampler_options
@click.option('--l-fitted', type=int, default=None, help='Upper bound on the number of changepoints.')
@click.option('--alpha', type=float, default=None)
@click.option('--tau', type=float, default=None, help='AUC threshold.')
@click.option('--zeta', type=int, default=None, help='Hold out every zeta-th observation.')
@click.option('--refit/--no-refit', default=True, show_default=True)
@click.option('--ci', 'ci_method', type=click.Choice([CI_DELONG, CI_BOOTSTRAP]), default=CI_DELONG,
              show_default=True)
@click.option('--score-on', type=click.Choice([SCORE_HOLDOUT, SCORE_ALL]), default=SCORE_HOLDOUT,
              show_default=True)
@click.option('--gamma', type=float, default=None)
@click.option('--threads', type=int, default=None)
@with_appcontext
@handle_errors
def select(data, embed, standardize, embed_first, prior, iters, burn_in, min_seg, seed, out,
           l_fitted, alpha, tau, zeta, refit, ci_method, score_on, gamma, threads):
    "Estimate the number of changepoints with held-out AUC tests."
    gibbs_config = build_gibbs_config(iters, burn_in, min_seg, prior, seed)
    selection_config = SelectionConfig(l_fitted=setting(l_fitted, 'L_FITTED'),
                                       alpha=setting(alpha, 'SELECTION_ALPHA'),
                                       tau=setting(tau, 'SELECTION_TAU'),
                                       zeta=setting(zeta, 'HOLDOUT_STRIDE'),
                                       min_seg=gibbs_config.min_seg,
                                       refit=refit, ci_method=ci_method, score_on=score_on)
    x = load_series(data, embed, standardize, embed_first)
    gibbs.check_feasible(x.n, selection_config.l_fitted, gibbs_config.min_seg)
    out = output_dir(out)

    tasks.set_threads(threads)
    [result] = tasks.map_tasks(select_num_changepoints, [(x, selection_config, gibbs_config)])
    with open(os.path.join(out, 'selection.json'), 'w', encoding='utf-8') as report:
        json.dump(result.report(selection_config, gibbs_config), report, indent=2)

    click.echo('posterior of the number of changepoints:')
    for count, probability in enumerate(result.pmf):
        click.echo(f'  {count}: {probability:.3f}')
    click.echo('most probable: ' + ', '.join(f'{c} ({p:.3f})' for c, p in result.top_counts()))

    if result.refit is not None and result.l_hat > 0:
        write_draws(result.refit, out, FORMAT_CSV)
        write_summaries(result.refit, x, out, gamma)


@click.command('bench')
@config_option
@click.option('--scenario', 'scenarios', type=click.Choice(simulation.SCENARIOS), multiple=True)
@click.option('--variant', 'variants', type=click.Choice(simulation.VARIANTS), multiple=True)
@click.option('--all', 'run_all', is_flag=True, help='Every scenario and variant.')
@click.option('--replicates', type=int, default=20, show_default=True)
@click.option('--known-l', is_flag=True, help='Only the known number of changepoints pipeline.')
@click.option('--unknown-l', is_flag=True, help='Only the selection pipeline.')
@click.option('--prior', type=click.Choice([Prior.KIND_GAUSSIAN, Prior.KIND_HORSESHOE]), default=None)
@click.option('--iters', type=int, default=None)
@click.option('--burnin', 'burn_in', type=int, default=None)
@click.option('--min-seg', type=int, default=None)
@click.option('--l-fitted', type=int, default=None)
@click.option('--alpha', type=float, default=None)
@click.option('--tau', type=float, default=None)
@click.option('--zeta', type=int, default=None)
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--threads', type=int, default=None)
@click.option('--out', default=None, help='Output directory.')
@with_appcontext
@handle_errors
def bench_command(scenarios, variants, run_all, replicates, known_l, unknown_l, prior, iters, burn_in,
                  min_seg, l_fitted, alpha, tau, zeta, seed, threads, out):
    "Mean adjusted Rand index of the pipelines over simulated replicates."
    if run_all:
        scenarios, variants = simulation.SCENARIOS, simulation.VARIANTS
    elif not scenarios:
        raise click.UsageError('pass --scenario or --all')
    if known_l and unknown_l:
        raise click.UsageError('--known-l and --unknown-l are exclusive')
    if replicates < 1:
        raise click.UsageError('--replicates must be positive')

    modes = (True,) if known_l else (False,) if unknown_l else (True, False)
    config = bench.BenchConfig(iters=setting(iters, 'BENCH_ITERS'),
                               burn_in=setting(burn_in, 'BENCH_BURN_IN'),
                               min_seg=setting(min_seg, 'BENCH_MIN_SEG'),
                               l_fitted=setting(l_fitted, 'BENCH_L_FITTED'),
                               alpha=setting(alpha, 'BENCH_ALPHA'),
                               tau=setting(tau, 'SELECTION_TAU'),
                               zeta=setting(zeta, 'HOLDOUT_STRIDE'),
                               prior=setting(prior, 'BENCH_PRIOR'),
                               seed=seed)
    # settings errors surface before any replicate runs
    config.gibbs_config(seed)
    if False in modes:
        config.selection_config()

    cases = bench.bench_cases(scenarios, variants or simulation.VARIANTS, modes)
    out = output_dir(out)

    rows = bench.run_benchmark(cases, replicates, config, threads)
    bench.write_csv(rows, os.path.join(out, 'bench.csv'))
    click.echo(bench.format_table(bench.summarize_rows(rows)))


@click.command('summarize')
@config_option
@click.option('--draws', 'draws_path', required=True, help='Draws file written by fit or select.')
@click.option('--data', default=None, help='The fitted series, for the discriminant trajectories.')
@preprocessing_options
@click.option('--length', 'n', type=int, default=None, help='Series length, needed for csv draws without --data.')
@click.option('--min-seg', type=int, default=None)
@click.option('--gamma', type=float, default=None)
@click.option('--out', default=None, help='Output directory.')
@with_appcontext
@handle_errors
def summarize(draws_path, data, embed, standardize, embed_first, n, min_seg, gamma, out):
    "Rebuild the posterior summaries from a saved draws file."
    x = load_series(data, embed, standardize, embed_first) if data else None
    if n is None and x is not None:
        n = x.n
    draws = draws_io.load(draws_path, n=n, min_seg=min_seg or 1)
    write_summaries(draws, x, output_dir(out), gamma)


COMMANDS = [simulate, fit, select, bench_command, summarize]


def register(app):
    for command in COMMANDS:
        app.cli.add_command(command)
