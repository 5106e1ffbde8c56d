"""
Polya-Gamma PG(b, c) variates. Draws come from the `polyagamma` package, which picks
an exact sampler for the requested shape (Devroye for b = 1, alternate/saddle
approximation for general b), so non integer shapes used by tempered chains are supported.
"""
import dataclasses
import logging

import numpy as np
from polyagamma import random_polyagamma

from bcmlr.errors import InvalidInputError

logger = logging.getLogger(__name__)

# below this tilt the moment formulas are replaced by their series expansion
SMALL_TILT = 1e-4


@dataclasses.dataclass(frozen=True)
class PgParams:
    b: float
    c: float = 0.0

    def __post_init__(self):
        if not np.all(np.asarray(self.b) > 0):
            raise InvalidInputError(f'PG shape must be positive, got {self.b}')
        if not np.all(np.isfinite(self.c)):
            raise InvalidInputError(f'PG tilt must be finite, got {self.c}')


def draw_pg(params: PgParams, rng: np.random.Generator, size=None):
    "A single PG(b, c) draw, or an array of them if `size` or an array valued tilt is given."
    draws = random_polyagamma(params.b, params.c, size=size, random_state=rng)
    return float(draws) if np.ndim(draws) == 0 else draws


def draw_pg_array(b, c, rng: np.random.Generator):
    """
    One draw per entry of the tilt array `c`, all with shape `b`. This is the form used by
    the samplers to refresh a whole column of auxiliary variables at once.
    """
    c = np.asarray(c, dtype=float)
    if b <= 0:
        raise InvalidInputError(f'PG shape must be positive, got {b}')
    out = np.empty_like(c)
    random_polyagamma(float(b), c, out=out, random_state=rng)
    return out


def pg_mean(b, c):
    "Analytic mean b / (2c) tanh(c / 2), with the b / 4 limit at c = 0."
    c = np.abs(np.asarray(c, dtype=float))
    small = c < SMALL_TILT
    safe = np.where(small, 1.0, c)
    return np.where(small, b / 4 * (1 - c ** 2 / 12), b / (2 * safe) * np.tanh(safe / 2))


def pg_variance(b, c):
    "Analytic variance b / (4c^3) (sinh c - c) sech^2(c / 2), with the b / 24 limit at c = 0."
    c = np.abs(np.asarray(c, dtype=float))
    small = c < SMALL_TILT
    safe = np.where(small, 1.0, c)
    exact = b / (4 * safe ** 3) * (np.sinh(safe) - safe) / np.cosh(safe / 2) ** 2
    return np.where(small, b / 24 * (1 - c ** 2 / 5), exact)
