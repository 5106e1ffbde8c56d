# coding: utf-8
"""
Posterior summaries: changepoint modes and credible intervals, differences of class
coefficients and the discriminant x_i'(beta_{l+1} - beta_l) along the series.

Changepoints and classes are numbered from 1 in everything this module returns and
writes, class J being the zero reference class.
"""
import csv
import dataclasses
import json
import logging

import numpy as np

from bcmlr.data import project_kappa
from bcmlr.draws import PosteriorDraws
from bcmlr.errors import InvalidInputError

logger = logging.getLogger(__name__)

DEFAULT_GAMMA = 0.05
MIN_DRAWS = 10


@dataclasses.dataclass
class ChangepointSummary:
    mode: np.ndarray
    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    gamma: float = DEFAULT_GAMMA

    def to_dict(self):
        return {
            'gamma': self.gamma,
            'changepoints': [{'changepoint': l + 1,
                              'mode': int(self.mode[l]),
                              'mean': float(self.mean[l]),
                              'lower': int(self.lower[l]),
                              'upper': int(self.upper[l])}
                             for l in range(len(self.mode))],
        }

    def rows(self):
        for l in range(len(self.mode)):
            for statistic in ('mode', 'mean', 'lower', 'upper'):
                yield ('kappa', l + 1, '', statistic, getattr(self, statistic)[l])


@dataclasses.dataclass
class CoefficientDiffSummary:
    "mean, lower and upper are (num pairs) x p arrays."
    pairs: list
    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    gamma: float = DEFAULT_GAMMA

    @property
    def credibly_changed(self):
        "Dimensions whose interval excludes zero."
        return (self.lower > 0) | (self.upper < 0)

    def to_dict(self):
        changed = self.credibly_changed
        return {
            'gamma': self.gamma,
            'differences': [{'pair': list(pair),
                             'mean': self.mean[k].tolist(),
                             'lower': self.lower[k].tolist(),
                             'upper': self.upper[k].tolist(),
                             'credibly_changed': (np.flatnonzero(changed[k]) + 1).tolist()}
                            for k, pair in enumerate(self.pairs)],
        }

    def rows(self):
        for k, (a, b) in enumerate(self.pairs):
            for d in range(self.mean.shape[1]):
                for statistic in ('mean', 'lower', 'upper'):
                    yield ('beta_diff', f'{a}-{b}', d + 1, statistic, getattr(self, statistic)[k, d])


@dataclasses.dataclass
class Trajectory:
    "Pointwise posterior of the discriminant over the times in `times`."
    changepoint: int
    times: np.ndarray
    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def to_dict(self):
        return {'changepoint': self.changepoint,
                'times': self.times.tolist(),
                'mean': self.mean.tolist(),
                'lower': self.lower.tolist(),
                'upper': self.upper.tolist()}

    def rows(self):
        for i, t in enumerate(self.times):
            for statistic in ('mean', 'lower', 'upper'):
                yield ('trajectory', self.changepoint, int(t), statistic, getattr(self, statistic)[i])


def _check_gamma(gamma):
    if not 0 < gamma < 1:
        raise InvalidInputError(f'gamma must be in (0, 1), got {gamma}')


def marginal_mode(values):
    "Most frequent value; ties go to the smallest."
    uniques, counts = np.unique(values, return_counts=True)
    # np.unique sorts, so argmax returns the smallest of the tied values
    return uniques[np.argmax(counts)]


def summarize_kappa(draws: PosteriorDraws, gamma=DEFAULT_GAMMA):
    _check_gamma(gamma)
    if draws.num_draws < MIN_DRAWS:
        logger.warning('summarizing only %s draws', draws.num_draws)

    kappas = draws.kappa_draws
    bounds = np.quantile(kappas, [gamma / 2, 1 - gamma / 2], axis=0, method='inverted_cdf')
    return ChangepointSummary(
        mode=np.array([marginal_mode(kappas[:, l]) for l in range(draws.num_changepoints)], dtype=np.int64),
        mean=kappas.mean(axis=0),
        lower=bounds[0].astype(np.int64),
        upper=bounds[1].astype(np.int64),
        gamma=gamma,
    )


def adjacent_pairs(num_classes):
    return [(l + 1, l) for l in range(1, num_classes)]


def summarize_beta_diffs(draws: PosteriorDraws, pairs=None, gamma=DEFAULT_GAMMA):
    """
    Posterior of beta_a - beta_b for each pair (a, b), by default (l+1, l) for every
    changepoint l.
    """
    _check_gamma(gamma)
    num_classes = draws.num_classes
    pairs = [tuple(int(c) for c in pair) for pair in (pairs or adjacent_pairs(num_classes))]
    for pair in pairs:
        if len(pair) != 2 or not all(1 <= c <= num_classes for c in pair):
            raise InvalidInputError(f'class pair {pair} out of range 1..{num_classes}')

    betas = draws.full_betas()
    diffs = np.stack([betas[:, a - 1] - betas[:, b - 1] for a, b in pairs], axis=1)
    bounds = np.quantile(diffs, [gamma / 2, 1 - gamma / 2], axis=0)
    return CoefficientDiffSummary(pairs=pairs, mean=diffs.mean(axis=0),
                                  lower=bounds[0], upper=bounds[1], gamma=gamma)


def discriminant_trajectory(draws: PosteriorDraws, l, x, gamma=DEFAULT_GAMMA, kappa_summary=None):
    """
    x_i'(beta_{l+1} - beta_l) for changepoint l (1-based) over the union of the two
    segments around it. Segment ends are the posterior modes, projected onto a valid
    configuration since marginal modes can come out of order.
    """
    _check_gamma(gamma)
    if not 1 <= l <= draws.num_changepoints:
        raise InvalidInputError(f'changepoint {l} out of range 1..{draws.num_changepoints}')

    values = x.values if hasattr(x, 'values') else np.asarray(x, dtype=float)
    modes = (kappa_summary or summarize_kappa(draws, gamma)).mode
    bounds = project_kappa(modes, draws.n, draws.min_seg).boundaries
    times = np.arange(bounds[l - 1], bounds[l + 1])

    betas = draws.full_betas()
    diffs = betas[:, l] - betas[:, l - 1]
    scores = diffs @ values[times].T
    band = np.quantile(scores, [gamma / 2, 1 - gamma / 2], axis=0)
    return Trajectory(changepoint=l, times=times, mean=scores.mean(axis=0), lower=band[0], upper=band[1])


def summarize(draws: PosteriorDraws, x=None, gamma=DEFAULT_GAMMA, pairs=None):
    "Every summary of a fit; the trajectories need the series."
    kappa_summary = summarize_kappa(draws, gamma)
    summary = {'kappa': kappa_summary,
               'beta_diffs': summarize_beta_diffs(draws, pairs, gamma),
               'trajectories': []}
    if x is not None:
        summary['trajectories'] = [discriminant_trajectory(draws, l, x, gamma, kappa_summary)
                                   for l in range(1, draws.num_changepoints + 1)]
    return summary


def write_json(summary, path):
    document = {'kappa': summary['kappa'].to_dict(),
                'beta_diffs': summary['beta_diffs'].to_dict(),
                'trajectories': [t.to_dict() for t in summary['trajectories']]}
    with open(path, 'w', encoding='utf-8') as out:
        json.dump(document, out, indent=2)


def write_csv(summary, path):
    "Long format: quantity, index, dimension, statistic, value."
    with open(path, 'w', newline='', encoding='utf-8') as csv_file:
        writer = csv.writer(csv_file)
        writer.writerow(['quantity', 'index', 'dimension', 'statistic', 'value'])
        writer.writerows(summary['kappa'].rows())
        writer.writerows(summary['beta_diffs'].rows())
        for trajectory in summary['trajectories']:
            writer.writerows(trajectory.rows())
