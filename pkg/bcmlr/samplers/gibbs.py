# coding: utf-8
"""
Polya-Gamma augmented Gibbs sampler for the multiple changepoint model, under
Gaussian or horseshoe priors on the coefficients.

A sweep updates, in this order: every changepoint k_1 ... k_L from its discrete full
conditional, then for each non reference class j the PG auxiliaries omega_j followed
by the coefficients beta_j, and finally (horseshoe only) the local and global scales.
"""
import dataclasses
import logging
import time
from collections import namedtuple
from typing import Optional

import numpy as np
import scipy.special as special
import scipy.stats as stats

from bcmlr import model
from bcmlr.data import ChangepointVector, SeriesMatrix, even_kappa, project_kappa
from bcmlr.draws import PosteriorDraws
from bcmlr.errors import InfeasibleConfigError, InvalidInputError
from bcmlr.samplers import mvn, pg

logger = logging.getLogger(__name__)

KAPPA_PRIOR_SEGMENT = 'segment'
KAPPA_PRIOR_UNIFORM = 'uniform'

KappaConditional = namedtuple('KappaConditional', ['support', 'probs'])


def chain_rng(seed, key=0):
    "Independent generator for stream `key` (chain, replica, swap decisions...) of a seed."
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(key,)))


@dataclasses.dataclass(frozen=True)
class GibbsConfig:
    """
    Sampler settings. `burn_in` defaults to half the iterations and `init` to evenly
    spaced changepoints. The fast coefficient update is used when the prior covariance
    is diagonal and p > fast_threshold * N. `update_kappa=False` keeps the initial
    changepoints fixed, which reduces the sampler to Bayesian multinomial logistic regression.
    """
    iters: int = 5000
    burn_in: Optional[int] = None
    min_seg: int = 1
    init: Optional[tuple] = None
    prior: model.Prior = dataclasses.field(default_factory=model.GaussianPrior)
    seed: int = 0
    thin: int = 1
    kappa_prior: str = KAPPA_PRIOR_SEGMENT
    fast_threshold: float = 1.0
    update_kappa: bool = True

    def __post_init__(self):
        if self.iters < 1:
            raise InvalidInputError(f'iterations must be positive, got {self.iters}')
        if self.burn_in is None:
            object.__setattr__(self, 'burn_in', self.iters // 2)
        if not 0 <= self.burn_in < self.iters:
            raise InvalidInputError(f'burn-in {self.burn_in} must be in [0, {self.iters})')
        if self.thin < 1:
            raise InvalidInputError(f'thinning must be positive, got {self.thin}')
        if self.min_seg < 1:
            raise InvalidInputError(f'minimum segment length must be positive, got {self.min_seg}')
        if self.kappa_prior not in (KAPPA_PRIOR_SEGMENT, KAPPA_PRIOR_UNIFORM):
            raise InvalidInputError(f'unknown changepoint prior {self.kappa_prior}')

    @property
    def num_stored(self):
        return len(range(self.burn_in, self.iters, self.thin))

    def stores(self, iteration):
        return iteration >= self.burn_in and (iteration - self.burn_in) % self.thin == 0


@dataclasses.dataclass
class ChainData:
    """
    The series as seen by a chain. Rows outside `mask` are kept for time indexing
    but don't enter the loss or the coefficient updates.
    """
    values: np.ndarray
    mask: np.ndarray

    @classmethod
    def build(cls, x, fit_mask=None):
        values = x.values if isinstance(x, SeriesMatrix) else np.asarray(x, dtype=float)
        mask = np.ones(len(values), dtype=bool) if fit_mask is None else np.asarray(fit_mask, dtype=bool)
        if mask.shape != (len(values),):
            raise InvalidInputError('fit mask must have one entry per observation')
        return cls(values, mask)

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def p(self):
        return self.values.shape[1]

    @property
    def fit_values(self):
        return self.values[self.mask]


@dataclasses.dataclass
class ChainState:
    """
    Current values of a chain. `bounds` holds the changepoints with both sentinels
    (0, k_1, ..., k_L, N). `omega` has one column per non reference class and one row
    per fitted observation.
    """
    bounds: np.ndarray
    betas: np.ndarray
    omega: np.ndarray
    hs: Optional[model.HorseshoeState] = None
    loss: float = np.nan

    @property
    def num_classes(self):
        return len(self.bounds) - 1

    @property
    def kappas(self):
        return self.bounds[1:-1]

    def classes(self):
        return np.repeat(np.arange(self.num_classes), np.diff(self.bounds))

    def copy(self):
        return ChainState(self.bounds.copy(), self.betas.copy(), self.omega.copy(),
                          self.hs.copy() if self.hs else None, self.loss)


def initial_state(data: ChainData, num_changepoints, config: GibbsConfig):
    "Even (or user given, projected to feasibility) changepoints, zero coefficients, unit scales."
    if config.init is None:
        kappa = even_kappa(data.n, num_changepoints, config.min_seg)
    else:
        if len(config.init) != num_changepoints:
            raise InvalidInputError(
                f'initial changepoints {config.init} do not match {num_changepoints} changepoints')
        kappa = project_kappa(config.init, data.n, config.min_seg)
        if kappa.kappas != tuple(sorted(config.init)):
            logger.warning('initial changepoints %s projected to %s', config.init, kappa.kappas)

    num_classes = num_changepoints + 1
    hs = None
    if config.prior.kind == model.Prior.KIND_HORSESHOE:
        hs = config.prior.initial_state(num_classes - 1, data.p)

    state = ChainState(bounds=kappa.boundaries,
                       betas=model.zero_coefficients(num_classes, data.p),
                       omega=np.ones((int(data.mask.sum()), num_classes - 1)),
                       hs=hs)
    state.loss = state_loss(state, data)
    return state


def state_loss(state: ChainState, data: ChainData):
    log_q = model.log_class_probs(data.values, state.betas)
    own = log_q[np.arange(data.n), state.classes()]
    return -float(own[data.mask].sum())


def kappa_log_weights(l, bounds, log_q, min_seg, power=1.0, kappa_prior=KAPPA_PRIOR_SEGMENT):
    """
    Unnormalized log full conditional of changepoint l (0-based) over its support
    {k_{l-1} + m, ..., k_{l+1} - m}, given per observation log probabilities `log_q`
    (rows outside the fit already zeroed). The likelihood part is raised to `power`,
    the prior is not.
    """
    lower, upper = int(bounds[l]), int(bounds[l + 2])
    support = np.arange(lower + min_seg, upper - min_seg + 1)
    if support.size == 0:
        raise InfeasibleConfigError(
            f'changepoint {l + 1} has empty support between {lower} and {upper} '
            f'with minimum segment length {min_seg}')

    left = np.cumsum(log_q[lower:upper, l])
    right = np.cumsum(log_q[lower:upper, l + 1])
    offset = support - lower - 1
    log_lik = left[offset] + (right[-1] - right[offset])

    weights = power * log_lik
    if kappa_prior == KAPPA_PRIOR_SEGMENT:
        # only the two segments next to k_l change with it
        weights = weights + model.segment_log_prior(np.stack([support - lower, upper - support], axis=-1))
    return support, weights


def kappa_full_conditional(l, kappa: ChangepointVector, betas, x, min_seg=None, power=1.0,
                           kappa_prior=KAPPA_PRIOR_SEGMENT, mask=None):
    "Normalized full conditional of changepoint l (0-based) as (support, probabilities)."
    data = ChainData.build(x, mask)
    min_seg = kappa.min_seg if min_seg is None else min_seg
    log_q = masked_log_probs(data, betas)
    support, weights = kappa_log_weights(l, kappa.boundaries, log_q, min_seg, power, kappa_prior)
    return KappaConditional(support, special.softmax(weights))


def masked_log_probs(data: ChainData, betas):
    log_q = model.log_class_probs(data.values, betas)
    log_q[~data.mask] = 0.0
    return log_q


def sample_discrete(values, log_weights, rng):
    "Draw one of `values` with probabilities proportional to exp(log_weights), by inverse cdf."
    cdf = np.cumsum(special.softmax(log_weights))
    return values[min(np.searchsorted(cdf, rng.random() * cdf[-1], side='right'), len(values) - 1)]


def draw_inverse_gamma(shape, scale, rng):
    "IG(shape, scale) draws, floored away from zero."
    draws = stats.invgamma.rvs(shape, scale=scale, random_state=rng)
    return np.maximum(draws, model.SCALE_FLOOR)


def update_kappas(state: ChainState, data: ChainData, config: GibbsConfig, rng, power=1.0):
    log_q = masked_log_probs(data, state.betas)
    for l in range(state.num_classes - 1):
        support, weights = kappa_log_weights(l, state.bounds, log_q, config.min_seg, power, config.kappa_prior)
        state.bounds[l + 1] = sample_discrete(support, weights, rng)


def draw_coefficients(x_fit, omega, rhs, prior, j, hs, config: GibbsConfig, rng):
    "Draw beta_j from its Gaussian full conditional, picking the direct or the fast path."
    p = x_fit.shape[1]
    if prior.kind == model.Prior.KIND_HORSESHOE:
        prior_var = hs.prior_variances(j)
    elif prior.covariance is None and prior.mean is None:
        prior_var = np.full(p, prior.variance)
    else:
        prior_var = None

    if prior_var is not None and p > config.fast_threshold * x_fit.shape[0]:
        return mvn.draw_gaussian_fast(x_fit, omega, rhs, prior_var, rng)

    if prior_var is not None:
        spec = mvn.GaussianPosteriorSpec.from_regression(x_fit, omega, rhs, np.diag(1 / prior_var))
    else:
        spec = mvn.GaussianPosteriorSpec.from_regression(
            x_fit, omega, rhs, prior.precision(j, p), prior.mean_vector(j, p))
    return mvn.draw_gaussian(spec, rng)


def update_coefficients(state: ChainState, data: ChainData, config: GibbsConfig, rng, power=1.0):
    """
    For each non reference class j: omega_j ~ PG(power, eta_j) at the current
    coefficients, then beta_j ~ N(m_j, V_j) with delta_j = power * (y_j - 1/2).
    """
    x_fit = data.fit_values
    classes = state.classes()[data.mask]
    class_logits = x_fit @ state.betas.T

    for j in range(state.num_classes - 1):
        offsets = model.offsets_from_logits(class_logits, j)
        etas = class_logits[:, j] - offsets
        omega = pg.draw_pg_array(power, etas, rng)
        state.omega[:, j] = omega

        delta = power * ((classes == j) - 0.5)
        beta = draw_coefficients(x_fit, omega, omega * offsets + delta, config.prior, j, state.hs, config, rng)
        state.betas[j] = beta
        class_logits[:, j] = x_fit @ beta


def update_horseshoe(state: ChainState, rng):
    "Inverse gamma updates of lambda^2, nu, tau^2 and xi, in that order."
    hs = state.hs
    free = state.betas[:-1]
    squares = free ** 2

    hs.lambda2 = draw_inverse_gamma(1.0, 1 / hs.nu + squares / (2 * hs.tau2), rng)
    hs.nu = draw_inverse_gamma(1.0, 1 + 1 / hs.lambda2, rng)
    hs.tau2 = float(draw_inverse_gamma(tau2_shape(*free.shape), 1 / hs.xi + np.sum(squares / (2 * hs.lambda2)), rng))
    hs.xi = float(draw_inverse_gamma(1.0, 1 + 1 / hs.tau2, rng))


def tau2_shape(num_free, p):
    "Shape of the global scale conditional; tau is shared by all non reference classes."
    return (num_free * p + 1) / 2


def sweep(state: ChainState, data: ChainData, config: GibbsConfig, rng, power=1.0):
    "One full Gibbs sweep targeting the posterior with the loss multiplied by `power`."
    if state.num_classes == 1:
        state.loss = 0.0
        return state

    if config.update_kappa:
        update_kappas(state, data, config, rng, power)
    update_coefficients(state, data, config, rng, power)
    if state.hs is not None:
        update_horseshoe(state, rng)

    state.loss = state_loss(state, data)
    return state


def gibbs_step_gaussian(state: ChainState, x, config: GibbsConfig, rng, fit_mask=None):
    if config.prior.kind != model.Prior.KIND_GAUSSIAN:
        raise InvalidInputError(f'gaussian step with {config.prior}')
    return sweep(state, ChainData.build(x, fit_mask), config, rng)


def gibbs_step_horseshoe(state: ChainState, x, config: GibbsConfig, rng, fit_mask=None):
    if config.prior.kind != model.Prior.KIND_HORSESHOE or state.hs is None:
        raise InvalidInputError(f'horseshoe step with {config.prior}')
    return sweep(state, ChainData.build(x, fit_mask), config, rng)


class DrawRecorder:
    "Accumulates the stored iterations of a chain into a `PosteriorDraws`."

    def __init__(self, data: ChainData, num_changepoints, config: GibbsConfig, horseshoe):
        size = config.num_stored
        num_free = num_changepoints
        self.data = data
        self.config = config
        self.kappas = np.empty((size, num_changepoints), dtype=np.int64)
        self.betas = np.empty((size, num_free, data.p))
        self.loss = np.empty(size)
        self.iterations = np.empty(size, dtype=np.int64)
        self.lambda2 = np.empty((size, num_free, data.p)) if horseshoe else None
        self.tau2 = np.empty(size) if horseshoe else None
        self.count = 0

    def record(self, iteration, state: ChainState):
        if not self.config.stores(iteration):
            return
        s = self.count
        self.kappas[s] = state.kappas
        self.betas[s] = state.betas[:-1]
        self.loss[s] = state.loss
        self.iterations[s] = iteration
        if self.lambda2 is not None:
            self.lambda2[s] = state.hs.lambda2
            self.tau2[s] = state.hs.tau2
        self.count += 1

    def draws(self, **meta):
        return PosteriorDraws(n=self.data.n, p=self.data.p,
                              kappa_draws=self.kappas, beta_draws=self.betas,
                              loss_trace=self.loss, iterations=self.iterations,
                              min_seg=self.config.min_seg,
                              lambda2_draws=self.lambda2, tau2_draws=self.tau2,
                              meta=dict(prior=self.config.prior.kind, seed=self.config.seed, **meta))


def check_feasible(n, num_changepoints, min_seg):
    if num_changepoints < 0:
        raise InvalidInputError(f'number of changepoints must be non negative, got {num_changepoints}')
    if n < (num_changepoints + 1) * min_seg:
        raise InfeasibleConfigError(
            f'N={n} is smaller than (L+1)*m = {(num_changepoints + 1) * min_seg} '
            f'for L={num_changepoints}, m={min_seg}')


def sample_kappa_prior(n, num_changepoints, min_seg, rng, kappa_prior=KAPPA_PRIOR_SEGMENT):
    """
    Exact draw from the changepoint prior over every configuration whose segments are
    at least `min_seg` long: backward sums of the segment weights, then the changepoints
    are sampled one after the other.
    """
    check_feasible(n, num_changepoints, min_seg)
    lengths = np.arange(n + 1)
    log_f = -special.xlogy(lengths, lengths) if kappa_prior == KAPPA_PRIOR_SEGMENT else np.zeros(n + 1)
    log_f[:min_seg] = -np.inf

    # back[l, k]: log total weight of the segments after changepoint l when it sits at k
    back = np.full((num_changepoints + 1, n + 1), -np.inf)
    back[num_changepoints] = log_f[n - lengths]
    for l in range(num_changepoints - 1, -1, -1):
        for k in range(n):
            following = np.arange(k + 1, n + 1)
            back[l, k] = special.logsumexp(log_f[following - k] + back[l + 1, following])

    kappas = []
    k = 0
    for l in range(num_changepoints):
        following = np.arange(k + 1, n)
        k = int(sample_discrete(following, log_f[following - k] + back[l + 1, following], rng))
        kappas.append(k)
    return ChangepointVector(tuple(kappas), n, min_seg)


def sample_prior(n, p, num_changepoints, config: GibbsConfig, rng):
    "Forward draw of (changepoints, coefficients) from the priors; the reference row is zero."
    kappa = sample_kappa_prior(n, num_changepoints, config.min_seg, rng, config.kappa_prior)
    free = config.prior.sample(num_changepoints, p, rng)
    return kappa, np.vstack([free, np.zeros((1, p))])


def run_chain(x, num_changepoints, config: GibbsConfig, fit_mask=None, chain_id=0):
    """
    Run a chain with `num_changepoints` changepoints and return the draws kept after
    burn-in and thinning. With `fit_mask`, only the selected rows inform the posterior
    while changepoints keep referring to the original time indexes.
    """
    data = ChainData.build(x, fit_mask)
    check_feasible(data.n, num_changepoints, config.min_seg)

    rng = chain_rng(config.seed, chain_id)
    state = initial_state(data, num_changepoints, config)
    recorder = DrawRecorder(data, num_changepoints, config, state.hs is not None)

    start = time.monotonic()
    for iteration in range(config.iters):
        sweep(state, data, config, rng)
        recorder.record(iteration, state)

    logger.debug('chain %s: %s iterations in %.1fs, final changepoints %s',
                 chain_id, config.iters, time.monotonic() - start, state.kappas.tolist())
    return recorder.draws(chain_id=chain_id)
