# -*- coding: utf-8 -*-

"""The naive predictors of the evaluation protocol. Each predicts a constant
value over the whole horizon: the last observed value, the mean or the median
of the observed history.
"""

import enum

import numpy as np

from mtsclust.core.forecast import ForecastResult
from mtsclust.core.py import int_cast


class EmptyHistoryError(ValueError):
    """Raised when a naive prediction is requested for an empty history.
    """
    pass


class NaivePredictorKind(enum.Enum):
    LastValue = 'LastValue'
    Mean = 'Mean'
    Median = 'Median'


def naive_predict(kind, history, horizon):
    """Predicts a constant value over the horizon.

    Parameters
    ----------
    kind : NaivePredictorKind | str
        The kind of naive predictor.
    history : 1d array_like
        The observed history, in time order.
    horizon : int
        The number of predicted time points >= 0.

    Returns
    -------
    pred : (horizon,)-shaped ndarray

    Raises
    ------
    EmptyHistoryError
        If the history is empty.
    """
    kind = NaivePredictorKind(kind)
    history = np.atleast_1d(np.asarray(history, dtype=np.float64))
    horizon = int_cast(horizon, 'The horizon must be castable to int!')
    if(horizon < 0):
        raise ValueError('The horizon must be >= 0!')
    if(len(history) == 0):
        raise EmptyHistoryError('The history must not be empty!')

    if(kind is NaivePredictorKind.LastValue):
        value = history[-1]
    elif(kind is NaivePredictorKind.Mean):
        value = np.mean(history)
    else:
        # numpy takes the midpoint of the central pair for even lengths.
        value = np.median(history)

    return np.full((horizon,), value, dtype=np.float64)


def naive_forecast(kind, history, horizon_grid):
    """Applies a naive predictor to every individual and dimension of a data
    set. Unobserved history entries are ignored.

    Parameters
    ----------
    kind : NaivePredictorKind | str
    history : TimeSeriesSet
        The history data.
    horizon_grid : TimeGrid
        The forecast time points.

    Returns
    -------
    result : ForecastResult
        The forecast with zero predictive variance.
    """
    (M, d, _) = history.shape
    H = len(horizon_grid)
    mean = np.empty((M, d, H), dtype=np.float64)
    for i in range(M):
        for j in range(d):
            (_, y) = history.observed(i, j)
            mean[i, j] = naive_predict(kind, y, H)
    return ForecastResult(horizon_grid, mean, np.zeros_like(mean))
