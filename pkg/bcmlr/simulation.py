# coding: utf-8
"""
Synthetic series with known changepoints and the adjusted Rand index used to score
estimates against them.

Three scenarios, each in a low and a high dimensional variant, with two changepoints
and three Gaussian segments:

- cim: change in mean, N(0, I) / N(mu, I) / N(0, I), mu = (2, 2, 0, ..., 0, -2, -2)
- cic: change in covariance, N(0, S1) / N(0, S2) / N(0, S1)
- cimc: change in mean and covariance, N(0, S) / N(mu, S) / N(mu, I)
"""
import dataclasses
import logging

import numpy as np
from sklearn.metrics import adjusted_rand_score

from bcmlr.data import ChangepointVector, SeriesMatrix
from bcmlr.errors import InvalidInputError

logger = logging.getLogger(__name__)

SCENARIO_CIM = 'cim'
SCENARIO_CIC = 'cic'
SCENARIO_CIMC = 'cimc'
SCENARIOS = (SCENARIO_CIM, SCENARIO_CIC, SCENARIO_CIMC)

VARIANT_LOW = 'low'
VARIANT_HIGH = 'high'
VARIANTS = (VARIANT_LOW, VARIANT_HIGH)

# changes in covariance are only visible to the classifier after the degree-2 embedding
EMBEDDED_SCENARIOS = (SCENARIO_CIC, SCENARIO_CIMC)

EIGENVALUE_FLOOR = 1e-3

DIMENSIONS = {
    (SCENARIO_CIM, VARIANT_LOW): 14,
    (SCENARIO_CIM, VARIANT_HIGH): 40,
    (SCENARIO_CIC, VARIANT_LOW): 4,
    (SCENARIO_CIC, VARIANT_HIGH): 8,
    (SCENARIO_CIMC, VARIANT_LOW): 4,
    (SCENARIO_CIMC, VARIANT_HIGH): 8,
}


@dataclasses.dataclass(frozen=True)
class ScenarioSpec:
    kind: str = SCENARIO_CIM
    variant: str = VARIANT_LOW
    n: int = 600
    kappas: tuple = (100, 500)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in SCENARIOS:
            raise InvalidInputError(f'unknown scenario {self.kind}, expected one of {", ".join(SCENARIOS)}')
        if self.variant not in VARIANTS:
            raise InvalidInputError(f'unknown variant {self.variant}, expected one of {", ".join(VARIANTS)}')
        if len(self.kappas) != 2:
            raise InvalidInputError(f'scenarios have exactly two changepoints, got {self.kappas}')
        # validates ordering and range
        self.truth()

    @property
    def p(self):
        return DIMENSIONS[(self.kind, self.variant)]

    @property
    def name(self):
        return f'{self.kind}_{self.variant}'

    def truth(self):
        return ChangepointVector(tuple(self.kappas), self.n)


def _correlated(p, entries):
    """
    Identity with the given symmetric off-diagonal entries, 1-based (row, col) -> value.
    Entries that don't form a valid correlation matrix are repaired to a nearby one.
    """
    sigma = np.eye(p)
    for (a, b), value in entries.items():
        sigma[a - 1, b - 1] = sigma[b - 1, a - 1] = value
    return nearest_correlation(sigma)


def nearest_correlation(sigma, floor=EIGENVALUE_FLOOR):
    "Clip the eigenvalues at `floor` and rescale to a unit diagonal; SPD input is returned unchanged."
    eigenvalues, vectors = np.linalg.eigh(sigma)
    if eigenvalues.min() >= floor:
        return sigma
    logger.debug('covariance with eigenvalue %.3f repaired', eigenvalues.min())
    repaired = (vectors * np.maximum(eigenvalues, floor)) @ vectors.T
    scale = np.sqrt(np.diag(repaired))
    return repaired / np.outer(scale, scale)


def segment_laws(kind, variant):
    "(mean, covariance) of each of the three segments."
    p = DIMENSIONS[(kind, variant)]
    zero, identity = np.zeros(p), np.eye(p)

    if kind == SCENARIO_CIM:
        mu = np.zeros(p)
        mu[:2], mu[-2:] = 2.0, -2.0
        return [(zero, identity), (mu, identity), (zero, identity)]

    if kind == SCENARIO_CIC:
        if variant == VARIANT_LOW:
            sigma1 = _correlated(p, {(1, 2): 0.8})
            sigma2 = _correlated(p, {(1, 3): 0.8})
        else:
            sigma1 = _correlated(p, {(1, 2): 0.9})
            sigma2 = _correlated(p, {(1, 3): 0.9, (2, 3): 0.9})
        return [(zero, sigma1), (zero, sigma2), (zero, sigma1)]

    if variant == VARIANT_LOW:
        mu = np.ones(p)
        sigma = _correlated(p, {(1, 2): 0.7, (1, 4): 0.7})
    else:
        mu = np.r_[np.ones(4), np.zeros(4)]
        sigma = _correlated(p, {(1, 2): 0.9, (3, 4): 0.9})
    return [(zero, sigma), (mu, sigma), (mu, identity)]


def generate(spec: ScenarioSpec, rng=None):
    "Draw one series of the scenario; returns the series and its true changepoints."
    rng = rng if rng is not None else np.random.default_rng(spec.seed)
    truth = spec.truth()
    segments = [rng.multivariate_normal(mean, cov, size=length)
                for (mean, cov), length in zip(segment_laws(spec.kind, spec.variant), truth.segment_lengths)]
    values = np.vstack(segments)
    logger.debug('generated %s series of shape %s', spec.name, values.shape)
    return SeriesMatrix(values, [f'x{d + 1}' for d in range(spec.p)]), truth


def bimodal_instance(segment_length=40, p=2, shift=2.0, rng=None):
    """
    A series whose middle third is shifted: fitted with a single changepoint, a change
    after the first third and one after the second explain it about equally well.
    Returns the series and both changepoint candidates.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    means = [np.zeros(p), np.full(p, shift), np.zeros(p)]
    values = np.vstack([mean + rng.standard_normal((segment_length, p)) for mean in means])
    n = 3 * segment_length
    return SeriesMatrix(values), (ChangepointVector((segment_length,), n),
                                  ChangepointVector((2 * segment_length,), n))


def adjusted_rand_index(kappa_true: ChangepointVector, kappa_est: ChangepointVector):
    if kappa_true.n != kappa_est.n:
        raise InvalidInputError(f'partitions of different series lengths {kappa_true.n} and {kappa_est.n}')
    return float(adjusted_rand_score(kappa_true.classes(), kappa_est.classes()))
