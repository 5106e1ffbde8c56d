# coding: utf-8
"""
Selection of the number of changepoints. A chain is fitted with a generous number of
changepoints on the series minus every zeta-th observation; then, for every stored
draw, each fitted changepoint is kept only if a classifier built from the draw's
coefficients tells its two neighboring segments apart on the held-out observations
(lower confidence bound of the AUC above tau). The count of kept changepoints per
draw approximates the posterior of the number of changepoints.
"""
import dataclasses
import logging
from collections import namedtuple
from typing import Optional

import numpy as np
import scipy.special as special
import scipy.stats as stats

from bcmlr.data import holdout_mask
from bcmlr.draws import PosteriorDraws
from bcmlr.errors import InvalidInputError, UndefinedAucError
from bcmlr.samplers import gibbs

logger = logging.getLogger(__name__)

CI_DELONG = 'delong'
CI_BOOTSTRAP = 'bootstrap'

SCORE_HOLDOUT = 'holdout'
SCORE_ALL = 'all'

AucInterval = namedtuple('AucInterval', ['auc', 'lower', 'upper', 'degenerate'])
ChangepointScore = namedtuple('ChangepointScore', ['auc_lower', 'accepted', 'diagnostic'])


@dataclasses.dataclass(frozen=True)
class SelectionConfig:
    l_fitted: int = 5
    alpha: float = 0.05
    tau: float = 0.5
    zeta: int = 5
    min_seg: int = 30
    refit: bool = True
    ci_method: str = CI_DELONG
    score_on: str = SCORE_HOLDOUT
    bootstrap_resamples: int = 2000

    def __post_init__(self):
        if self.l_fitted < 1:
            raise InvalidInputError(f'number of fitted changepoints must be positive, got {self.l_fitted}')
        if not 0 < self.alpha < 1:
            raise InvalidInputError(f'alpha must be in (0, 1), got {self.alpha}')
        if not 0.5 <= self.tau < 1:
            raise InvalidInputError(f'AUC threshold must be in [0.5, 1), got {self.tau}')
        if self.zeta < 2:
            raise InvalidInputError(f'holdout stride must be at least 2, got {self.zeta}')
        if self.min_seg <= self.zeta:
            raise InvalidInputError(
                f'minimum segment length {self.min_seg} must be greater than the holdout stride {self.zeta}')
        if self.ci_method not in (CI_DELONG, CI_BOOTSTRAP):
            raise InvalidInputError(f'unknown confidence interval method {self.ci_method}')
        if self.score_on not in (SCORE_HOLDOUT, SCORE_ALL):
            raise InvalidInputError(f'unknown scoring set {self.score_on}')


@dataclasses.dataclass
class SelectionResult:
    l_true_draws: np.ndarray
    pmf: np.ndarray
    l_hat: int
    acceptance_rates: np.ndarray
    fitted: PosteriorDraws
    refit: Optional[PosteriorDraws] = None

    def top_counts(self, k=3):
        "The k most probable numbers of changepoints with their probabilities."
        order = np.argsort(-self.pmf, kind='stable')[:k]
        return [(int(count), float(self.pmf[count])) for count in order if self.pmf[count] > 0]

    def report(self, config: SelectionConfig, gibbs_config: gibbs.GibbsConfig):
        return {
            'pmf': self.pmf.tolist(),
            'l_hat': self.l_hat,
            'top_counts': [{'count': c, 'probability': p} for c, p in self.top_counts()],
            'acceptance_rates': self.acceptance_rates.tolist(),
            'config': {
                **dataclasses.asdict(config),
                'iters': gibbs_config.iters,
                'burn_in': gibbs_config.burn_in,
                'prior': gibbs_config.prior.kind,
                'seed': gibbs_config.seed,
            },
        }


def _check_labels(labels, scores):
    labels = np.asarray(labels).astype(int)
    scores = np.asarray(scores, dtype=float)
    if labels.shape != scores.shape:
        raise InvalidInputError('labels and scores must have the same length')
    positives, negatives = scores[labels == 1], scores[labels == 0]
    if len(positives) == 0 or len(negatives) == 0:
        raise UndefinedAucError('AUC needs both classes')
    return positives, negatives


def auc(labels, scores):
    """
    Mann-Whitney AUC: the fraction of (positive, negative) pairs where the positive
    scores higher, ties counting 1/2.
    """
    positives, negatives = _check_labels(labels, scores)
    u = stats.mannwhitneyu(positives, negatives, alternative='two-sided').statistic
    return float(u / (len(positives) * len(negatives)))


def delong_interval(labels, scores, alpha=0.05):
    """
    Two sided (1 - alpha) interval around the AUC using DeLong's variance estimate
    (Sun & Xu fast form), clamped to [0, 1].
    """
    positives, negatives = _check_labels(labels, scores)
    m, n = len(positives), len(negatives)
    if m < 2 or n < 2:
        raise InvalidInputError('AUC interval needs at least two observations per class')

    pooled = stats.rankdata(np.concatenate([positives, negatives]))
    within_pos = stats.rankdata(positives)
    within_neg = stats.rankdata(negatives)

    point = (pooled[:m].sum() / m - (m + 1) / 2) / n
    v01 = (pooled[:m] - within_pos) / n
    v10 = 1 - (pooled[m:] - within_neg) / m
    variance = np.var(v01, ddof=1) / m + np.var(v10, ddof=1) / n

    if not variance > 0:
        logger.debug('degenerate AUC variance at AUC %.3f', point)
        return AucInterval(point, point, point, True)

    half_width = stats.norm.ppf(1 - alpha / 2) * np.sqrt(variance)
    return AucInterval(point, max(point - half_width, 0.0), min(point + half_width, 1.0), False)


def bootstrap_interval(labels, scores, alpha=0.05, resamples=2000, rng=None):
    "Percentile interval from resampling each class separately."
    positives, negatives = _check_labels(labels, scores)
    point = auc(labels, scores)

    def statistic(pos, neg):
        return stats.mannwhitneyu(pos, neg, alternative='two-sided').statistic / (len(pos) * len(neg))

    result = stats.bootstrap((positives, negatives), statistic, n_resamples=resamples,
                             confidence_level=1 - alpha, method='percentile',
                             vectorized=False, random_state=rng)
    low, high = result.confidence_interval
    if not np.isfinite(low):
        return AucInterval(point, point, point, True)
    return AucInterval(point, float(low), float(high), False)


def auc_ci_lower(labels, scores, alpha=0.05, method=CI_DELONG, rng=None):
    if method == CI_BOOTSTRAP:
        return bootstrap_interval(labels, scores, alpha, rng=rng).lower
    return delong_interval(labels, scores, alpha).lower


def neighbor_probability(x_rows, betas, l):
    "q~_{i,l+1} = q_{i,l+1} / (q_{i,l} + q_{i,l+1}), for changepoint l (0-based)."
    return special.expit(x_rows @ (betas[l + 1] - betas[l]))


def score_changepoint(l, kappas, betas, x, rows, config: SelectionConfig, rng=None):
    """
    Score fitted changepoint l (0-based) of one draw on the observations in `rows`
    (a boolean mask over the series). Observations of the segment before the
    changepoint are labeled 0, those of the segment after it 1.
    """
    n = len(x)
    bounds = np.concatenate([[0], kappas, [n]])
    times = np.arange(n)
    before = rows & (times >= bounds[l]) & (times < bounds[l + 1])
    after = rows & (times >= bounds[l + 1]) & (times < bounds[l + 2])

    if before.sum() < 2 or after.sum() < 2:
        return ChangepointScore(np.nan, 0, 'not enough held-out observations on both sides')

    selected = before | after
    labels = after[selected].astype(int)
    scores = neighbor_probability(x[selected], betas, l)

    try:
        if config.ci_method == CI_BOOTSTRAP:
            interval = bootstrap_interval(labels, scores, config.alpha, config.bootstrap_resamples, rng)
        else:
            interval = delong_interval(labels, scores, config.alpha)
    except InvalidInputError as error:
        return ChangepointScore(np.nan, 0, str(error))

    diagnostic = 'degenerate interval' if interval.degenerate else ''
    return ChangepointScore(interval.lower, int(interval.lower > config.tau), diagnostic)


def count_changepoints(draws: PosteriorDraws, x, rows, config: SelectionConfig, rng=None):
    "Per draw acceptance indicators R_l, as an S x L_fitted array."
    values = x.values if hasattr(x, 'values') else np.asarray(x, dtype=float)
    betas = draws.full_betas()
    accepted = np.zeros((draws.num_draws, draws.num_changepoints), dtype=int)
    missing = 0

    for s in range(draws.num_draws):
        for l in range(draws.num_changepoints):
            score = score_changepoint(l, draws.kappa_draws[s], betas[s], values, rows, config, rng)
            accepted[s, l] = score.accepted
            missing += np.isnan(score.auc_lower)

    if missing:
        logger.warning('%s changepoint scores lacked held-out observations and were rejected', missing)
    return accepted


def select_num_changepoints(x, config: SelectionConfig, gibbs_config: gibbs.GibbsConfig, chain_id=0):
    """
    Fit `l_fitted` changepoints without the held-out observations, count the
    confirmed ones per draw and take the posterior mode. With `refit`, run the
    sampler again on the whole series with that many changepoints.
    """
    if gibbs_config.min_seg != config.min_seg:
        gibbs_config = dataclasses.replace(gibbs_config, min_seg=config.min_seg)

    n = len(x.values) if hasattr(x, 'values') else len(x)
    fit_mask = holdout_mask(n, config.zeta)
    fitted = gibbs.run_chain(x, config.l_fitted, gibbs_config, fit_mask=fit_mask, chain_id=chain_id)

    rows = ~fit_mask if config.score_on == SCORE_HOLDOUT else np.ones(n, dtype=bool)
    rng = gibbs.chain_rng(gibbs_config.seed, chain_id + 1)
    accepted = count_changepoints(fitted, x, rows, config, rng)

    l_true = accepted.sum(axis=1)
    pmf = np.bincount(l_true, minlength=config.l_fitted + 1) / len(l_true)
    l_hat = int(np.argmax(pmf))
    logger.info('posterior of the number of changepoints %s, mode %s', pmf.round(3).tolist(), l_hat)

    refit = None
    if config.refit:
        refit = gibbs.run_chain(x, l_hat, gibbs_config, chain_id=chain_id)

    return SelectionResult(l_true_draws=l_true, pmf=pmf, l_hat=l_hat,
                           acceptance_rates=accepted.mean(axis=0), fitted=fitted, refit=refit)
