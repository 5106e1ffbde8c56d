"""
Single changepoint sampler with a binary logistic loss. Observations up to the
changepoint are labeled 0 and the rest 1, and the log odds of label 1 are x_i'beta,
so here beta describes the post-change class against the pre-change baseline
(the opposite sign of beta_1 in the two class multinomial model).
"""
import logging

import numpy as np
import scipy.special as special

from bcmlr import model
from bcmlr.samplers import pg
from bcmlr.samplers.gibbs import (KAPPA_PRIOR_SEGMENT, ChainData, ChainState, DrawRecorder, GibbsConfig,
                                  chain_rng, check_feasible, draw_coefficients, initial_state,
                                  sample_discrete, update_horseshoe)

logger = logging.getLogger(__name__)


def log_odds(data: ChainData, beta):
    return data.values @ beta


def bclr_loss(state: ChainState, data: ChainData):
    etas = log_odds(data, state.betas[0])
    post = np.arange(data.n) >= state.bounds[1]
    # -log sigmoid(eta) after the change, -log sigmoid(-eta) before it
    terms = np.logaddexp(0, np.where(post, -etas, etas))
    return float(terms[data.mask].sum())


def kappa_log_weights(state: ChainState, data: ChainData, config: GibbsConfig):
    n = data.n
    etas = log_odds(data, state.betas[0])
    log_pre = np.where(data.mask, -np.logaddexp(0, etas), 0.0)
    log_post = np.where(data.mask, -np.logaddexp(0, -etas), 0.0)

    support = np.arange(config.min_seg, n - config.min_seg + 1)
    pre = np.cumsum(log_pre)[support - 1]
    post = np.cumsum(log_post[::-1])[::-1]
    # observations support..n-1 are post-change; index n (nothing after) contributes 0
    post = np.append(post, 0.0)[support]

    weights = pre + post
    if config.kappa_prior == KAPPA_PRIOR_SEGMENT:
        weights = weights + model.segment_log_prior(np.stack([support, n - support], axis=-1))
    return support, weights


def kappa_full_conditional(state: ChainState, data: ChainData, config: GibbsConfig):
    support, weights = kappa_log_weights(state, data, config)
    return support, special.softmax(weights)


def sweep(state: ChainState, data: ChainData, config: GibbsConfig, rng):
    "changepoint, then omega ~ PG(1, x'beta), then beta, then the horseshoe scales."
    if config.update_kappa:
        support, weights = kappa_log_weights(state, data, config)
        state.bounds[1] = sample_discrete(support, weights, rng)

    x_fit = data.fit_values
    post = (np.arange(data.n) >= state.bounds[1])[data.mask]
    omega = pg.draw_pg_array(1.0, x_fit @ state.betas[0], rng)
    state.omega[:, 0] = omega
    state.betas[0] = draw_coefficients(x_fit, omega, post - 0.5, config.prior, 0, state.hs, config, rng)

    if state.hs is not None:
        update_horseshoe(state, rng)

    state.loss = bclr_loss(state, data)
    return state


def run_bclr(x, config: GibbsConfig, fit_mask=None, chain_id=0):
    """
    Run the single changepoint sampler. The changepoint prior is the segment length
    prior by default, or uniform with `kappa_prior='uniform'`.
    """
    data = ChainData.build(x, fit_mask)
    check_feasible(data.n, 1, config.min_seg)

    rng = chain_rng(config.seed, chain_id)
    state = initial_state(data, 1, config)
    state.loss = bclr_loss(state, data)
    recorder = DrawRecorder(data, 1, config, state.hs is not None)

    for iteration in range(config.iters):
        sweep(state, data, config, rng)
        recorder.record(iteration, state)

    logger.debug('bclr chain %s finished at changepoint %s', chain_id, int(state.bounds[1]))
    return recorder.draws(chain_id=chain_id, model='bclr')
