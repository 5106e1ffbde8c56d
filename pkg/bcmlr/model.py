# coding: utf-8
"""
The loss, class probabilities, logits and priors evaluated by the samplers.

Coefficients are held as a J x p array whose last row is the reference class and
stays at zero. Class indexes are 0-based throughout: class j holds the observations
of segment j + 1.
"""
import dataclasses
import logging

import numpy as np
import scipy.special as special

from bcmlr.data import ChangepointVector, SeriesMatrix
from bcmlr.errors import InvalidInputError

logger = logging.getLogger(__name__)

DEFAULT_PRIOR_VARIANCE = 3.0

# smallest value a sampled horseshoe scale is allowed to take
SCALE_FLOOR = 1e-12


def _values(x):
    return x.values if isinstance(x, SeriesMatrix) else np.asarray(x, dtype=float)


def zero_coefficients(num_classes, p):
    return np.zeros((num_classes, p))


def logits(x, betas):
    "x_i'beta_j for every observation and class, as an N x J array (or a J vector for a single row)."
    return _values(x) @ np.asarray(betas).T


def log_class_probs(x, betas):
    return special.log_softmax(logits(x, betas), axis=-1)


def class_probs(x_i, betas):
    "Multinomial probabilities q_ij = exp(x_i'beta_j) / sum_k exp(x_i'beta_k), overflow safe."
    return special.softmax(logits(x_i, betas), axis=-1)


def loss(kappa: ChangepointVector, betas, x, mask=None):
    """
    Negative log of the product of the probabilities each observation gets for its own
    segment's class. Observations outside `mask` don't contribute.
    """
    log_q = log_class_probs(x, betas)
    own = log_q[np.arange(kappa.n), kappa.classes()]
    if mask is not None:
        own = own[mask]
    return -float(own.sum())


def offsets_from_logits(class_logits, j):
    "c_ij = log sum_{k != j} exp(x_i'beta_k) for every row of an N x J (or J) logit array."
    if class_logits.shape[-1] < 2:
        raise InvalidInputError('offsets need at least two classes')
    others = np.delete(class_logits, j, axis=-1)
    return special.logsumexp(others, axis=-1)


def c_offset(x_i, betas, j):
    return offsets_from_logits(logits(x_i, betas), j)


def eta(x_i, betas, j):
    "Binary log odds of class j against all the others, eta_ij = x_i'beta_j - c_ij."
    class_logits = logits(x_i, betas)
    return class_logits[..., j] - offsets_from_logits(class_logits, j)


def binary_loss(kappa: ChangepointVector, betas, x, j, mask=None):
    """
    -sum_i [eta_ij y_ij - log(1 + exp(eta_ij))]: the loss seen as a function of beta_j alone.
    It differs from `loss` by a term that doesn't depend on beta_j.
    """
    etas = eta(x, betas, j)
    y = kappa.classes() == j
    terms = etas * y - np.logaddexp(0, etas)
    if mask is not None:
        terms = terms[mask]
    return -float(terms.sum())


def eta_form_loss(kappa: ChangepointVector, betas, x, mask=None):
    "Binary re-expression of the loss summed over the non reference classes. Equals `loss` for J = 2."
    return sum(binary_loss(kappa, betas, x, j, mask) for j in range(kappa.num_classes - 1))


def segment_log_prior(lengths):
    "log prod_j (1 / n_j)^n_j for segment lengths n_j."
    lengths = np.asarray(lengths, dtype=float)
    return -special.xlogy(lengths, lengths).sum(axis=-1)


def kappa_log_prior(kappa: ChangepointVector):
    "Unnormalized log prior that favors even segments and penalizes short ones."
    return float(segment_log_prior(kappa.segment_lengths))


def bclr_kappa_log_prior(kappa, n):
    if not 1 <= kappa <= n - 1:
        raise InvalidInputError(f'changepoint {kappa} out of range 1..{n - 1}')
    return float(segment_log_prior([kappa, n - kappa]))


class Prior:
    """
    Prior on the non reference coefficient vectors beta_1 ... beta_{J-1}.
    """
    KIND_GAUSSIAN = 'gaussian'
    KIND_HORSESHOE = 'horseshoe'

    kind = None

    @classmethod
    def resolve(cls, kind, **kwargs):
        "Return a prior instance of the given kind."
        subclasses = {
            cls.KIND_GAUSSIAN: GaussianPrior,
            cls.KIND_HORSESHOE: HorseshoePrior,
        }

        subcls = subclasses.get(kind)
        if not subcls:
            raise InvalidInputError(f'unknown prior {kind}')
        return subcls(**kwargs)

    def __repr__(self):
        return f'<{self.__class__.__name__}>'


class GaussianPrior(Prior):
    """
    Independent N(m_0j, V_0j) priors. The mean and covariance are either shared by
    every class (p vector and p x p matrix) or given per class with a leading J-1 axis.
    Without a covariance, V_0j = variance * I.
    """
    kind = Prior.KIND_GAUSSIAN

    def __init__(self, mean=None, covariance=None, variance=DEFAULT_PRIOR_VARIANCE):
        if variance <= 0:
            raise InvalidInputError(f'prior variance must be positive, got {variance}')
        self.mean = None if mean is None else np.asarray(mean, dtype=float)
        self.covariance = None if covariance is None else np.asarray(covariance, dtype=float)
        self.variance = variance

        if self.covariance is not None:
            for cov in np.reshape(self.covariance, (-1,) + self.covariance.shape[-2:]):
                if not np.allclose(cov, cov.T) or np.any(np.linalg.eigvalsh(cov) <= 0):
                    raise InvalidInputError('prior covariance must be symmetric positive definite')

    def __repr__(self):
        return f'<GaussianPrior variance={self.variance}>' if self.covariance is None else '<GaussianPrior>'

    def mean_vector(self, j, p):
        if self.mean is None:
            return np.zeros(p)
        return self.mean[j] if self.mean.ndim == 2 else self.mean

    def precision(self, j, p):
        if self.covariance is None:
            return np.eye(p) / self.variance
        cov = self.covariance[j] if self.covariance.ndim == 3 else self.covariance
        return np.linalg.inv(cov)

    def sample(self, num_free, p, rng):
        "Draw beta_1 ... beta_{J-1} from the prior."
        betas = np.empty((num_free, p))
        for j in range(num_free):
            cov = np.linalg.inv(self.precision(j, p))
            betas[j] = rng.multivariate_normal(self.mean_vector(j, p), cov)
        return betas


class HorseshoePrior(Prior):
    """
    beta_dj ~ N(0, lambda_dj^2 tau^2) with half-Cauchy local and global scales, sampled
    through the inverse gamma auxiliary representation. There are no fixed hyperparameters.
    """
    kind = Prior.KIND_HORSESHOE

    def initial_state(self, num_free, p):
        return HorseshoeState(lambda2=np.ones((num_free, p)), nu=np.ones((num_free, p)), tau2=1.0, xi=1.0)

    def sample(self, num_free, p, rng):
        state = self.sample_state(num_free, p, rng)
        return rng.standard_normal((num_free, p)) * np.sqrt(state.lambda2 * state.tau2)

    def sample_state(self, num_free, p, rng):
        "Forward draw of the scales from their half-Cauchy priors."
        lambda2 = np.maximum(rng.standard_cauchy((num_free, p)) ** 2, SCALE_FLOOR)
        tau2 = max(rng.standard_cauchy() ** 2, SCALE_FLOOR)
        return HorseshoeState(lambda2=lambda2, nu=np.ones((num_free, p)), tau2=tau2, xi=1.0)


@dataclasses.dataclass
class HorseshoeState:
    "Local scales lambda^2, their auxiliaries nu, the global scale tau^2 and its auxiliary xi."
    lambda2: np.ndarray
    nu: np.ndarray
    tau2: float
    xi: float

    def __post_init__(self):
        for name in ('lambda2', 'nu', 'tau2', 'xi'):
            value = np.asarray(getattr(self, name))
            if not np.all(np.isfinite(value)) or np.any(value <= 0):
                raise InvalidInputError(f'horseshoe {name} must be positive and finite')

    def prior_variances(self, j):
        return self.lambda2[j] * self.tau2

    def copy(self):
        return HorseshoeState(self.lambda2.copy(), self.nu.copy(), self.tau2, self.xi)
