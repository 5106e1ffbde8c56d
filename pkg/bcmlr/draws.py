# coding: utf-8
"""
Stored posterior draws and their csv and binary file forms.

Binary layout: the magic bytes b'BCMLR1', then N, p, L and S as little endian 64-bit
integers, then S fixed size records of (iteration: int64, kappa: L x int64,
beta: (J-1)*p x float64 class-major, loss: float64), all little endian.
"""
import csv
import dataclasses
import logging
from typing import Optional

import numpy as np

from bcmlr.errors import InvalidInputError

logger = logging.getLogger(__name__)

MAGIC = b'BCMLR1'
HEADER_DTYPE = np.dtype('<i8')


@dataclasses.dataclass
class PosteriorDraws:
    """
    Draws kept after burn-in and thinning: changepoints (S x L), the non reference
    coefficients (S x (J-1) x p), the loss at every stored iteration and, for horseshoe
    chains, the local and global scales.
    """
    n: int
    p: int
    kappa_draws: np.ndarray
    beta_draws: np.ndarray
    loss_trace: np.ndarray
    iterations: np.ndarray
    min_seg: int = 1
    lambda2_draws: Optional[np.ndarray] = None
    tau2_draws: Optional[np.ndarray] = None
    meta: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        num_draws = len(self.loss_trace)
        kappas = np.asarray(self.kappa_draws, dtype=np.int64)
        if kappas.ndim == 2:
            num_changepoints = kappas.shape[1]
        else:
            num_changepoints = kappas.size // num_draws if num_draws else 0
        self.kappa_draws = kappas.reshape(num_draws, num_changepoints)
        self.beta_draws = np.asarray(self.beta_draws, dtype=float).reshape(num_draws, num_changepoints, self.p)
        self.loss_trace = np.asarray(self.loss_trace, dtype=float)
        self.iterations = np.asarray(self.iterations, dtype=np.int64)

        sentinels = np.hstack([np.zeros((self.num_draws, 1), dtype=np.int64),
                               self.kappa_draws,
                               np.full((self.num_draws, 1), self.n, dtype=np.int64)])
        if np.any(np.diff(sentinels, axis=1) < self.min_seg):
            raise InvalidInputError(
                f'stored changepoints violate ordering or minimum segment length {self.min_seg}')
        if not np.all(np.isfinite(self.loss_trace)):
            raise InvalidInputError('loss trace has non finite values')

    @property
    def num_draws(self):
        return len(self.loss_trace)

    @property
    def num_changepoints(self):
        return self.kappa_draws.shape[1]

    @property
    def num_classes(self):
        return self.num_changepoints + 1

    def full_betas(self):
        "S x J x p coefficients including the zero reference class."
        zeros = np.zeros((self.num_draws, 1, self.p))
        return np.concatenate([self.beta_draws, zeros], axis=1)

    def columns(self):
        return (['iteration']
                + [f'kappa_{l + 1}' for l in range(self.num_changepoints)]
                + [f'beta_{j + 1}_{d + 1}' for j in range(self.num_classes - 1) for d in range(self.p)]
                + ['loss'])

    def records(self):
        "One row per stored iteration, in `columns` order."
        for s in range(self.num_draws):
            yield ([int(self.iterations[s])]
                   + self.kappa_draws[s].tolist()
                   + self.beta_draws[s].ravel().tolist()
                   + [float(self.loss_trace[s])])


def _record_dtype(num_changepoints, p):
    return np.dtype([('iteration', '<i8'),
                     ('kappa', '<i8', (num_changepoints,)),
                     ('beta', '<f8', (num_changepoints * p,)),
                     ('loss', '<f8')])


def save_csv(draws: PosteriorDraws, path):
    with open(path, 'w', newline='', encoding='utf-8') as csv_file:
        writer = csv.writer(csv_file)
        writer.writerow(draws.columns())
        writer.writerows(draws.records())
    logger.debug('wrote %s draws to %s', draws.num_draws, path)


def save_binary(draws: PosteriorDraws, path):
    records = np.empty(draws.num_draws, dtype=_record_dtype(draws.num_changepoints, draws.p))
    records['iteration'] = draws.iterations
    records['kappa'] = draws.kappa_draws
    records['beta'] = draws.beta_draws.reshape(draws.num_draws, -1)
    records['loss'] = draws.loss_trace

    header = np.array([draws.n, draws.p, draws.num_changepoints, draws.num_draws], dtype=HEADER_DTYPE)
    with open(path, 'wb') as out:
        out.write(MAGIC)
        out.write(header.tobytes())
        out.write(records.tobytes())
    logger.debug('wrote %s draws to %s', draws.num_draws, path)


def load(path, n=None, min_seg=1):
    """
    Read draws written by `save_csv` or `save_binary`. The csv form doesn't record the
    series length, so `n` must be given for it.
    """
    with open(path, 'rb') as f:
        head = f.read(len(MAGIC))

    if head == MAGIC:
        return _load_binary(path, min_seg)
    if n is None:
        raise InvalidInputError(f'{path}: series length needed to read csv draws')
    return _load_csv(path, n, min_seg)


def _load_binary(path, min_seg):
    with open(path, 'rb') as f:
        f.read(len(MAGIC))
        n, p, num_changepoints, num_draws = np.frombuffer(f.read(4 * HEADER_DTYPE.itemsize),
                                                         dtype=HEADER_DTYPE)
        body = f.read()

    dtype = _record_dtype(int(num_changepoints), int(p))
    if len(body) != num_draws * dtype.itemsize:
        raise InvalidInputError(f'{path}: expected {num_draws} records of {dtype.itemsize} bytes, '
                                f'found {len(body)} bytes')
    records = np.frombuffer(body, dtype=dtype)

    return PosteriorDraws(n=int(n), p=int(p),
                          kappa_draws=records['kappa'].copy(),
                          beta_draws=records['beta'].copy(),
                          loss_trace=records['loss'].copy(),
                          iterations=records['iteration'].copy(),
                          min_seg=min_seg)


def _load_csv(path, n, min_seg):
    with open(path, newline='', encoding='utf-8') as csv_file:
        reader = csv.reader(csv_file)
        columns = next(reader)
        rows = np.array([[float(v) for v in row] for row in reader if row]).reshape(-1, len(columns))

    kappa_cols = [i for i, c in enumerate(columns) if c.startswith('kappa_')]
    beta_cols = [i for i, c in enumerate(columns) if c.startswith('beta_')]
    num_free = len(kappa_cols)
    p = len(beta_cols) // num_free if num_free else 0
    if num_free == 0:
        raise InvalidInputError(f'{path}: csv draws without changepoints carry no dimension information')

    return PosteriorDraws(n=n, p=p,
                          kappa_draws=rows[:, kappa_cols].astype(np.int64),
                          beta_draws=rows[:, beta_cols],
                          loss_trace=rows[:, columns.index('loss')],
                          iterations=rows[:, 0].astype(np.int64),
                          min_seg=min_seg)
