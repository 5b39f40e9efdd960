# -*- coding: utf-8 -*-

"""The timeseries module provides the data model for sparse multivariate time
series of several individuals on a shared integer time grid, together with the
standardization, the history/horizon split and the plausibility filters of the
evaluation protocol.
"""

import enum

import numpy as np

from mtsclust.core.debugging import get_logger
from mtsclust.core.py import (
    float_cast,
    issequence,
    positive_int_cast
)
from mtsclust.core.random import make_rss


logger = get_logger(__name__)


class ZeroVarianceError(ValueError):
    """Raised when the observed values of a dimension are constant.
    """
    pass


class EmptyDimensionError(ValueError):
    """Raised when a dimension has no observed value.
    """
    pass


class DimensionMismatchError(ValueError):
    """Raised when the number of dimensions of a data set does not match the
    expected number of dimensions.
    """
    pass


class SplitTooLongError(ValueError):
    """Raised when a history/horizon split does not fit into the time grid.
    """
    pass


class DimKind(enum.Enum):
    """The kinds of measurements for which plausibility bounds are known.
    """
    BMI = 'BMI'
    SleepDurationMinutes = 'SleepDurationMinutes'

    @staticmethod
    def from_name(name):
        """Maps a dimension name of a data file to a DimKind. Returns None if
        the name is not a known kind.
        """
        key = str(name).strip().lower()
        if(key == 'bmi'):
            return DimKind.BMI
        if(key in ('sleep', 'sleepduration', 'sleepdurationminutes',
                   'sleep_duration_minutes')):
            return DimKind.SleepDurationMinutes
        return None


# Closed plausibility intervals of the record values.
_RECORD_BOUNDS = {
    DimKind.BMI: (10., 65.),
    DimKind.SleepDurationMinutes: (45., 1200.)
}


def validate_record(dim_kind, value):
    """Checks if the given record value is plausible for its kind of
    measurement. A BMI must lie within [10, 65], a sleep duration within
    [45, 1200] minutes.

    Parameters
    ----------
    dim_kind : DimKind | str
        The kind of measurement.
    value : float
        The record value.

    Returns
    -------
    check : bool
        True if the value lies within the closed interval, False otherwise.
    """
    if(not isinstance(dim_kind, DimKind)):
        dim_kind = DimKind(dim_kind)
    value = float_cast(value, 'The value argument must be castable to float!')
    if(not np.isfinite(value)):
        return False
    (vmin, vmax) = _RECORD_BOUNDS[dim_kind]
    return bool(vmin <= value <= vmax)


class TimeGrid(object):
    """The TimeGrid class holds a strictly increasing, non-empty sequence of
    integer time indices.
    """
    def __init__(self, points):
        """Creates a new TimeGrid.

        Parameters
        ----------
        points : sequence of int
            The time indices. They must be strictly increasing.
        """
        super().__init__()

        arr = np.asarray(points)
        if(arr.ndim != 1):
            raise ValueError('The time grid points must be one-dimensional!')
        if(len(arr) == 0):
            raise ValueError('A time grid must not be empty!')
        if(not np.issubdtype(arr.dtype, np.integer)):
            if(not np.all(np.mod(arr, 1) == 0)):
                raise TypeError('The time grid points must be integers!')
        arr = arr.astype(np.int64)
        if(np.any(np.diff(arr) <= 0)):
            raise ValueError(
                'The time grid points must be strictly increasing!')
        arr.flags.writeable = False
        self._points = arr

    @staticmethod
    def range(T, start=1):
        """Creates the grid ``start, start+1, ..., start+T-1``.
        """
        T = positive_int_cast(T, 'The grid length must be a positive int!')
        return TimeGrid(np.arange(start, start+T))

    @property
    def points(self):
        """(read-only) The int64 ndarray of the time indices.
        """
        return self._points

    def as_float(self):
        """Returns the grid points as a float64 ndarray.
        """
        return self._points.astype(np.float64)

    def restrict(self, start, stop):
        """Returns the sub-grid of the grid positions ``start`` (inclusive) to
        ``stop`` (exclusive).
        """
        return TimeGrid(self._points[start:stop])

    def concatenate(self, other):
        """Concatenates this grid with a later grid.
        """
        return TimeGrid(np.concatenate((self._points, other.points)))

    def __len__(self):
        return len(self._points)

    def __eq__(self, other):
        if(not isinstance(other, TimeGrid)):
            return False
        return np.array_equal(self._points, other.points)

    def __hash__(self):
        return hash(self._points.tobytes())

    def __repr__(self):
        return f'TimeGrid({self._points.tolist()})'


class TimeSeriesSet(object):
    """The TimeSeriesSet class holds the (M, d, T)-shaped measurements of M
    individuals in d dimensions on a shared time grid of length T, together
    with a boolean observation mask. Unobserved entries are stored as NaN.

    Instances are immutable. Derived sets are created via the ``subset``,
    ``with_values`` and ``restrict_time`` methods.
    """
    def __init__(self, values, grid=None, mask=None):
        """Creates a new TimeSeriesSet.

        Parameters
        ----------
        values : (M, d, T)-shaped array_like
            The measurements.
        grid : TimeGrid | sequence of int | None
            The time grid. If None, the grid 1..T is used.
        mask : (M, d, T)-shaped bool array_like | None
            The observation mask. If None, all finite values are considered as
            observed.
        """
        super().__init__()

        values = np.array(values, dtype=np.float64)
        if(values.ndim != 3):
            raise ValueError(
                'The values of a TimeSeriesSet must have the shape (M, d, T)! '
                f'Got the shape {values.shape}.')
        if(grid is None):
            grid = TimeGrid.range(values.shape[2])
        elif(not isinstance(grid, TimeGrid)):
            grid = TimeGrid(grid)
        if(len(grid) != values.shape[2]):
            raise ValueError(
                f'The time grid length {len(grid)} does not match the number '
                f'of time points {values.shape[2]}!')

        if(mask is None):
            mask = np.isfinite(values)
        else:
            mask = np.array(mask, dtype=bool)
            if(mask.shape != values.shape):
                raise ValueError(
                    f'The mask shape {mask.shape} does not match the values '
                    f'shape {values.shape}!')
            if(not np.all(np.isfinite(values[mask]))):
                raise ValueError(
                    'The values must be finite wherever the mask is true!')
        values[~mask] = np.nan

        values.flags.writeable = False
        mask.flags.writeable = False

        self._values = values
        self._mask = mask
        self._grid = grid

    @property
    def values(self):
        """(read-only) The (M, d, T)-shaped float64 ndarray of measurements.
        """
        return self._values

    @property
    def mask(self):
        """(read-only) The (M, d, T)-shaped bool ndarray, true if observed.
        """
        return self._mask

    @property
    def grid(self):
        """(read-only) The TimeGrid of the data set.
        """
        return self._grid

    @property
    def n_individuals(self):
        return self._values.shape[0]

    @property
    def n_dims(self):
        return self._values.shape[1]

    @property
    def n_times(self):
        return self._values.shape[2]

    @property
    def shape(self):
        return self._values.shape

    @property
    def is_complete(self):
        """(read-only) True if every entry is observed.
        """
        return bool(np.all(self._mask))

    def observed(self, i, j=0):
        """Returns the observed time points and values of individual ``i`` in
        dimension ``j``.

        Returns
        -------
        times : 1d int64 ndarray
        values : 1d float64 ndarray
        """
        m = self._mask[i, j]
        return (self._grid.points[m], self._values[i, j, m])

    def subset(self, indices):
        """Creates a new TimeSeriesSet holding only the individuals with the
        given indices.
        """
        indices = np.atleast_1d(np.asarray(indices, dtype=np.int64))
        return TimeSeriesSet(
            self._values[indices], self._grid, self._mask[indices])

    def select_dims(self, dims):
        """Creates a new TimeSeriesSet holding only the given dimensions.
        """
        dims = np.atleast_1d(np.asarray(dims, dtype=np.int64))
        return TimeSeriesSet(
            self._values[:, dims], self._grid, self._mask[:, dims])

    def restrict_time(self, start, stop):
        """Creates a new TimeSeriesSet holding the grid positions ``start``
        (inclusive) to ``stop`` (exclusive).
        """
        return TimeSeriesSet(
            self._values[:, :, start:stop],
            self._grid.restrict(start, stop),
            self._mask[:, :, start:stop])

    def with_values(self, values):
        """Creates a copy of this TimeSeriesSet with new values but the same
        grid and mask.
        """
        values = np.array(values, dtype=np.float64)
        values[~self._mask] = np.nan
        return TimeSeriesSet(values, self._grid, self._mask)

    def __repr__(self):
        (M, d, T) = self.shape
        return (f'TimeSeriesSet(M={M}, d={d}, T={T}, '
                f'observed={int(self._mask.sum())})')


class StandardizationParams(object):
    """Per-dimension mean and (strictly positive) standard deviation.
    """
    def __init__(self, mean, std):
        super().__init__()

        mean = np.array(mean, dtype=np.float64, ndmin=1)
        std = np.array(std, dtype=np.float64, ndmin=1)
        if(mean.shape != std.shape or mean.ndim != 1):
            raise ValueError(
                'The mean and std arrays must be 1d and of the same length!')
        if(np.any(~(std > 0))):
            raise ValueError(
                'The standard deviation must be strictly positive for every '
                'dimension!')
        mean.flags.writeable = False
        std.flags.writeable = False
        self._mean = mean
        self._std = std

    @property
    def mean(self):
        return self._mean

    @property
    def std(self):
        return self._std

    @property
    def n_dims(self):
        return len(self._mean)

    def to_dict(self):
        return {'mean': self._mean.tolist(), 'std': self._std.tolist()}

    def __repr__(self):
        return (f'StandardizationParams(mean={self._mean.tolist()}, '
                f'std={self._std.tolist()})')


class SplitSpec(object):
    """The numbers of consecutive history and horizon time points.
    """
    def __init__(self, history_len, horizon_len):
        super().__init__()

        self._history_len = positive_int_cast(
            history_len, 'The history_len must be an int >= 1!')
        self._horizon_len = positive_int_cast(
            horizon_len, 'The horizon_len must be an int >= 1!')

    @property
    def history_len(self):
        return self._history_len

    @property
    def horizon_len(self):
        return self._horizon_len

    @property
    def total_len(self):
        return self._history_len + self._horizon_len

    def check(self, T):
        """Raises SplitTooLongError if the split does not fit into a grid of
        length ``T``.
        """
        if(self.total_len > T):
            raise SplitTooLongError(
                f'The split (history={self._history_len}, '
                f'horizon={self._horizon_len}) does not fit into a time grid '
                f'of length {T}!')

    def __repr__(self):
        return (f'SplitSpec(history_len={self._history_len}, '
                f'horizon_len={self._horizon_len})')


def fit_standardizer(train):
    """Computes the per-dimension mean and unbiased standard deviation over the
    observed entries of the training set.

    Parameters
    ----------
    train : TimeSeriesSet
        The training data.

    Returns
    -------
    params : StandardizationParams

    Raises
    ------
    EmptyDimensionError
        If a dimension has no observed value.
    ZeroVarianceError
        If the observed values of a dimension are constant.
    """
    mean = np.empty((train.n_dims,), dtype=np.float64)
    std = np.empty((train.n_dims,), dtype=np.float64)
    for j in range(train.n_dims):
        x = train.values[:, j][train.mask[:, j]]
        if(len(x) == 0):
            raise EmptyDimensionError(
                f'The dimension {j} has no observed values!')
        if(len(x) < 2 or np.all(x == x[0])):
            raise ZeroVarianceError(
                f'The observed values of dimension {j} have zero variance!')
        mean[j] = np.mean(x)
        std[j] = np.std(x, ddof=1)
    return StandardizationParams(mean, std)


def _check_dims(data, params):
    if(data.n_dims != params.n_dims):
        raise DimensionMismatchError(
            f'The data set has {data.n_dims} dimensions, but the '
            f'standardization parameters have {params.n_dims}!')


def standardize(data, params):
    """Replaces each observed value ``x`` by ``(x - mean) / std`` of its
    dimension. The mask is unchanged.
    """
    _check_dims(data, params)
    values = (data.values - params.mean[None, :, None]) / \
        params.std[None, :, None]
    return data.with_values(values)


def destandardize(data, params):
    """The inverse of ``standardize``.
    """
    _check_dims(data, params)
    values = data.values * params.std[None, :, None] + \
        params.mean[None, :, None]
    return data.with_values(values)


def destandardize_array(arr, params, dim_axis=1, scale_only=False):
    """Destandardizes a plain ndarray whose axis ``dim_axis`` runs over the
    dimensions. With ``scale_only`` the mean is not added, which is what
    variances and standard deviations need (after squaring the scale).
    """
    arr = np.asarray(arr, dtype=np.float64)
    shape = [1]*arr.ndim
    shape[dim_axis] = params.n_dims
    out = arr * params.std.reshape(shape)
    if(not scale_only):
        out = out + params.mean.reshape(shape)
    return out


def split_history_horizon(data, spec):
    """Splits the data set into the first ``spec.history_len`` grid points and
    the following ``spec.horizon_len`` grid points.

    Returns
    -------
    history : TimeSeriesSet
    horizon : TimeSeriesSet

    Raises
    ------
    SplitTooLongError
        If the split does not fit into the time grid.
    """
    spec.check(data.n_times)
    h = spec.history_len
    return (data.restrict_time(0, h),
            data.restrict_time(h, h + spec.horizon_len))


def select_test_individuals(M, fraction, cap=None, rss=None):
    """Selects a fixed random subset of individuals as the test set.

    Parameters
    ----------
    M : int
        The number of individuals.
    fraction : float
        The fraction of individuals held out for testing.
    cap : int | None
        The optional maximal number of test individuals. It must be >= 1, a
        ValueError is raised otherwise.
    rss : RandomStateService | int | None
        The random state service or seed.

    Returns
    -------
    test_idxs : 1d int64 ndarray
        The sorted indices of the test individuals.
    train_idxs : 1d int64 ndarray
        The sorted indices of the remaining individuals.
    """
    M = positive_int_cast(M, 'The number of individuals must be >= 1!')
    if(not (0 < fraction < 1)):
        raise ValueError('The test fraction must lie within (0, 1)!')
    n_test = int(np.round(fraction * M))
    if(cap is not None):
        n_test = min(n_test, positive_int_cast(
            cap, 'The cap on the test individuals must be an int >= 1!'))
    n_test = max(1, min(n_test, M-1)) if M > 1 else 0

    rss = make_rss(rss)
    perm = rss.random.permutation(M)
    test_idxs = np.sort(perm[:n_test])
    train_idxs = np.sort(perm[n_test:])
    return (test_idxs, train_idxs)


def make_univariate(values, grid=None):
    """Creates a univariate TimeSeriesSet from an (M, T)-shaped array or from a
    list of per-individual sequences of equal length.
    """
    values = np.asarray(values, dtype=np.float64)
    if(values.ndim == 1):
        values = values[None, :]
    return TimeSeriesSet(values[:, None, :], grid)


def check_dim_names(dim_names, n_dims):
    """Returns a list of dimension names of length ``n_dims``.
    """
    if(dim_names is None):
        return [f'dim{j}' for j in range(n_dims)]
    if(not issequence(dim_names) or len(dim_names) != n_dims):
        raise DimensionMismatchError(
            f'Expected {n_dims} dimension names, got {dim_names}!')
    return [str(n) for n in dim_names]
