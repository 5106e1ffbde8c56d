# coding: utf-8
"""
Observation matrices, changepoint vectors and the preprocessing applied to a series
before it's handed to the samplers.
"""
import csv
import dataclasses
import logging
from typing import Optional, Sequence

import numpy as np

from bcmlr.errors import InfeasibleConfigError, InvalidInputError

logger = logging.getLogger(__name__)

EMBED_POLY2 = 'poly2'


@dataclasses.dataclass(frozen=True)
class SeriesMatrix:
    """
    An N x p matrix of time ordered observations, one row per time point.
    `constant_columns` holds the indexes of the columns that `standardize` could only center.
    """
    values: np.ndarray
    column_names: Optional[tuple] = None
    constant_columns: tuple = ()

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.size == 0:
            raise InvalidInputError('expected a non empty N x p matrix')
        if values.shape[0] < 2:
            raise InvalidInputError(f'a series needs at least 2 observations, got {values.shape[0]}')
        if not np.all(np.isfinite(values)):
            raise InvalidInputError('series contains non finite values')
        if self.column_names is not None and len(self.column_names) != values.shape[1]:
            raise InvalidInputError(
                f'{len(self.column_names)} column names for {values.shape[1]} columns')

        values.setflags(write=False)
        object.__setattr__(self, 'values', values)
        if self.column_names is not None:
            object.__setattr__(self, 'column_names', tuple(self.column_names))

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def p(self):
        return self.values.shape[1]


@dataclasses.dataclass(frozen=True)
class ChangepointVector:
    """
    Ordered changepoints k_1 < ... < k_L of a series of length n. Changepoint k means
    observation k (1-based) is the last one of its segment, so with the sentinels
    k_0 = 0 and k_{L+1} = n segment j holds observations k_{j-1}+1 ... k_j.
    """
    kappas: tuple
    n: int
    min_seg: int = 1

    def __post_init__(self):
        kappas = tuple(int(k) for k in self.kappas)
        object.__setattr__(self, 'kappas', kappas)

        if self.min_seg < 1:
            raise InvalidInputError(f'minimum segment length must be positive, got {self.min_seg}')

        lengths = np.diff(self.boundaries)
        if np.any(lengths < 1):
            raise InvalidInputError(f'changepoints {kappas} are not strictly increasing within 1..{self.n - 1}')
        if np.any(lengths < self.min_seg):
            raise InfeasibleConfigError(
                f'changepoints {kappas} leave a segment shorter than {self.min_seg}')

    @property
    def num_changepoints(self):
        return len(self.kappas)

    @property
    def num_classes(self):
        return len(self.kappas) + 1

    @property
    def boundaries(self):
        "The changepoints with both sentinels, as an int array of length L+2."
        return np.array((0, *self.kappas, self.n), dtype=int)

    @property
    def segment_lengths(self):
        return np.diff(self.boundaries)

    def classes(self):
        "0-based segment index of every observation."
        return np.repeat(np.arange(self.num_classes), self.segment_lengths)

    @classmethod
    def from_classes(cls, classes, min_seg=1):
        "Invert `classes`: recover the changepoints from a monotone label vector."
        classes = np.asarray(classes)
        if np.any(np.diff(classes) < 0):
            raise InvalidInputError('class labels must be non decreasing in time')
        kappas = np.flatnonzero(np.diff(classes)) + 1
        return cls(tuple(kappas), len(classes), min_seg)


@dataclasses.dataclass(frozen=True)
class SegmentLabels:
    "N x J binary matrix, y[i, j] = 1 iff observation i belongs to segment j."
    y: np.ndarray

    @property
    def classes(self):
        return self.y.argmax(axis=1)


def center(x: SeriesMatrix) -> SeriesMatrix:
    "Subtract the column means. The model has no intercepts, so every fitted series is centered."
    return SeriesMatrix(x.values - x.values.mean(axis=0), x.column_names)


def standardize(x: SeriesMatrix) -> SeriesMatrix:
    """
    Center every column and scale it to unit sample standard deviation (divisor N-1).
    Constant columns are centered only and reported in `constant_columns`.
    """
    values = center(x).values
    sd = values.std(axis=0, ddof=1)

    constant = sd < 1e-12
    if np.any(constant):
        names = [x.column_names[i] if x.column_names else i for i in np.flatnonzero(constant)]
        logger.warning('constant columns left unscaled: %s', names)

    scaled = values / np.where(constant, 1.0, sd)
    # exact zeros for constant columns, instead of rounding noise
    scaled[:, constant] = 0.0
    return SeriesMatrix(scaled, x.column_names, tuple(int(i) for i in np.flatnonzero(constant)))


def poly2_embed(x: SeriesMatrix) -> SeriesMatrix:
    """
    Map every observation to its degree-2 polynomial features, in the order
    (x_1..x_p, x_1^2..x_p^2, x_1x_2, ..., x_1x_p, x_2x_3, ..., x_{p-1}x_p).
    """
    values = x.values
    first, second = np.triu_indices(x.p, k=1)
    embedded = np.hstack([values, values ** 2, values[:, first] * values[:, second]])

    names = None
    if x.column_names:
        cols = x.column_names
        names = (list(cols)
                 + [f'{c}^2' for c in cols]
                 + [f'{cols[a]}*{cols[b]}' for a, b in zip(first, second)])

    return SeriesMatrix(embedded, names)


def embedded_width(p):
    return 2 * p + p * (p - 1) // 2


def labels_from_kappa(kappa: ChangepointVector) -> SegmentLabels:
    y = np.zeros((kappa.n, kappa.num_classes), dtype=np.int8)
    y[np.arange(kappa.n), kappa.classes()] = 1
    return SegmentLabels(y)


def preprocess(x: SeriesMatrix, embed=None, scale=True, embed_first=True):
    """
    Apply the optional embedding and center the columns, also scaling them to unit
    standard deviation when `scale` is set. By default the embedding is computed on the
    raw series and the embedded columns are then standardized. With `embed_first` off
    the raw series is standardized, embedded, and the embedded columns are re-centered.
    """
    if embed not in (None, EMBED_POLY2):
        raise InvalidInputError(f'unknown embedding {embed}')

    if embed and embed_first:
        x = poly2_embed(x)
    x = standardize(x) if scale else center(x)
    if embed and not embed_first:
        x = center(poly2_embed(x))
    return x


def holdout_mask(n, stride):
    """
    Boolean mask of the observations used for fitting when every `stride`-th
    observation (1-based: stride, 2*stride, ...) is held out.
    """
    if stride < 2:
        raise InvalidInputError(f'holdout stride must be at least 2, got {stride}')
    mask = np.ones(n, dtype=bool)
    mask[stride - 1::stride] = False
    return mask


def even_kappa(n, num_changepoints, min_seg=1):
    """
    Evenly spaced changepoints round(l * n / (L + 1)), projected onto the
    configurations that respect the minimum segment length.
    """
    if n < (num_changepoints + 1) * min_seg:
        raise InfeasibleConfigError(
            f'{num_changepoints} changepoints with minimum segment length {min_seg} '
            f'need at least {(num_changepoints + 1) * min_seg} observations, got {n}')

    kappas = [int(round(l * n / (num_changepoints + 1))) for l in range(1, num_changepoints + 1)]
    return project_kappa(kappas, n, min_seg)


def project_kappa(kappas: Sequence[int], n, min_seg=1):
    "Move the given changepoints the least possible so every segment has at least `min_seg` observations."
    num = len(kappas)
    if n < (num + 1) * min_seg:
        raise InfeasibleConfigError(
            f'{num} changepoints with minimum segment length {min_seg} do not fit in {n} observations')

    kappas = sorted(int(k) for k in kappas)
    projected = []
    for l, k in enumerate(kappas, start=1):
        lowest = (projected[-1] if projected else 0) + min_seg
        highest = n - (num - l + 1) * min_seg
        projected.append(min(max(k, lowest), highest))
    return ChangepointVector(tuple(projected), n, min_seg)


def read_csv(path):
    """
    Load a series from a csv file with one row per time point and one column per
    dimension. A first row that doesn't parse as numbers is taken as the header.
    """
    with open(path, newline='', encoding='utf-8') as csv_file:
        rows = [row for row in csv.reader(csv_file) if row]

    if not rows:
        raise InvalidInputError(f'{path} is empty')

    header = None
    try:
        [float(value) for value in rows[0]]
    except ValueError:
        header, rows = rows[0], rows[1:]

    try:
        values = np.array([[float(value) for value in row] for row in rows])
    except ValueError as error:
        raise InvalidInputError(f'{path}: {error}') from error

    logger.debug('read %s rows from %s', len(rows), path)
    return SeriesMatrix(values, header)


def write_csv(x: SeriesMatrix, path):
    with open(path, 'w', newline='', encoding='utf-8') as csv_file:
        writer = csv.writer(csv_file)
        writer.writerow(x.column_names or [f'x{d + 1}' for d in range(x.p)])
        writer.writerows(x.values.tolist())
