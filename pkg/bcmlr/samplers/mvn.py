"""
Draws from the Gaussian full conditionals of the regression coefficients.
"""
import dataclasses
import logging

import numpy as np
import scipy.linalg as linalg

from bcmlr.errors import InvalidInputError, NumericalError

logger = logging.getLogger(__name__)

JITTER = 1e-10


@dataclasses.dataclass(frozen=True)
class GaussianPosteriorSpec:
    """
    A Gaussian in precision form: N(P^-1 b, P^-1) for precision P and linear term b.
    """
    precision: np.ndarray
    linear_term: np.ndarray

    def __post_init__(self):
        precision = np.atleast_2d(np.asarray(self.precision, dtype=float))
        linear_term = np.atleast_1d(np.asarray(self.linear_term, dtype=float))
        if precision.shape != (linear_term.size, linear_term.size):
            raise InvalidInputError(
                f'precision {precision.shape} does not match linear term of size {linear_term.size}')
        if np.max(np.abs(precision - precision.T)) >= 1e-10:
            raise InvalidInputError('precision matrix is not symmetric')
        object.__setattr__(self, 'precision', precision)
        object.__setattr__(self, 'linear_term', linear_term)

    @classmethod
    def from_regression(cls, x, omega, rhs, prior_precision, prior_mean=None):
        """
        The conditional of coefficients with Gaussian prior N(prior_mean, prior_precision^-1)
        under a PG-augmented logistic term: precision X'WX + P0, linear term X'rhs + P0 m0.
        """
        x = np.asarray(x, dtype=float)
        precision = x.T @ (omega[:, None] * x) + prior_precision
        # cancel rounding asymmetry of the matrix product
        precision = (precision + precision.T) / 2
        linear_term = x.T @ rhs
        if prior_mean is not None:
            linear_term = linear_term + prior_precision @ prior_mean
        return cls(precision, linear_term)

    def mean(self):
        return linalg.cho_solve((cholesky(self.precision), True), self.linear_term)


def cholesky(precision):
    """
    Lower Cholesky factor of a positive definite matrix. A failed factorization is
    retried once with a small diagonal jitter before giving up.
    """
    try:
        return linalg.cholesky(precision, lower=True)
    except linalg.LinAlgError:
        p = precision.shape[0]
        jitter = JITTER * np.trace(precision) / p
        logger.warning('cholesky failed, retrying with diagonal jitter %.3g', jitter)

    try:
        return linalg.cholesky(precision + jitter * np.eye(p), lower=True)
    except linalg.LinAlgError:
        raise NumericalError('precision matrix is not positive definite',
                             condition=np.linalg.cond(precision)) from None


def draw_gaussian(spec: GaussianPosteriorSpec, rng: np.random.Generator):
    chol = cholesky(spec.precision)
    mean = linalg.cho_solve((chol, True), spec.linear_term)
    noise = rng.standard_normal(mean.size)
    return mean + linalg.solve_triangular(chol, noise, lower=True, trans='T')


def draw_gaussian_fast(x, omega, rhs, prior_var_diag, rng: np.random.Generator):
    """
    Draw from N(V X'rhs, V), V = (X'WX + D^-1)^-1, W = diag(omega), D = diag(prior_var_diag)
    by solving an N x N system instead of a p x p one, which pays off when p exceeds N
    (Bhattacharya, Chakraborty & Mallick 2016).
    """
    x = np.asarray(x, dtype=float)
    omega = np.asarray(omega, dtype=float)
    prior_var_diag = np.asarray(prior_var_diag, dtype=float)
    if np.any(omega <= 0):
        raise InvalidInputError('fast gaussian draw needs strictly positive weights')
    if np.any(prior_var_diag <= 0):
        raise InvalidInputError('fast gaussian draw needs strictly positive prior variances')

    root_omega = np.sqrt(omega)
    phi = root_omega[:, None] * x
    alpha = np.asarray(rhs, dtype=float) / root_omega

    u = np.sqrt(prior_var_diag) * rng.standard_normal(x.shape[1])
    delta = rng.standard_normal(x.shape[0])
    v = phi @ u + delta

    phi_d = phi * prior_var_diag
    system = phi_d @ phi.T + np.eye(x.shape[0])
    w = linalg.cho_solve((cholesky(system), True), alpha - v)
    return u + phi_d.T @ w
