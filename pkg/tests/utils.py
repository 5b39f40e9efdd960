# -*- coding: utf-8 -*-

import numpy as np

from mtsclust.core.timeseries import TimeSeriesSet


def make_set(values, grid=None):
    """Creates a TimeSeriesSet from a nested list of shape (M, d, T), where
    None marks an unobserved entry.
    """
    values = np.array(
        [[[np.nan if v is None else v for v in row] for row in indiv]
         for indiv in values], dtype=np.float64)
    return TimeSeriesSet(values, grid)
