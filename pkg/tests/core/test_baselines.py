# -*- coding: utf-8 -*-

import os.path
import sys
import unittest

import numpy as np

sys.path.append(os.path.join(os.path.split(__file__)[0], '..'))
from utils import make_set  # noqa: E402

from mtsclust.core.baselines import (  # noqa: E402
    EmptyHistoryError,
    NaivePredictorKind,
    naive_forecast,
    naive_predict
)
from mtsclust.core.timeseries import TimeGrid  # noqa: E402


class naive_predict_TestCase(unittest.TestCase):
    def test_last_value(self):
        np.testing.assert_array_equal(
            naive_predict(NaivePredictorKind.LastValue, [1., 2., 3.], 2),
            [3., 3.])

    def test_mean(self):
        np.testing.assert_array_equal(
            naive_predict('Mean', [1., 2., 3.], 1), [2.])

    def test_median_even_length(self):
        np.testing.assert_array_equal(
            naive_predict('Median', [1., 2., 9., 10.], 1), [5.5])

    def test_zero_horizon(self):
        self.assertEqual(len(naive_predict('Mean', [1.], 0)), 0)

    def test_empty_history(self):
        with self.assertRaises(EmptyHistoryError):
            naive_predict('LastValue', [], 2)

    def test_unknown_kind(self):
        with self.assertRaises(ValueError):
            naive_predict('Mode', [1.], 1)


class naive_forecast_TestCase(unittest.TestCase):
    def test_skips_unobserved(self):
        history = make_set([
            [[1., 4., None], [2., None, 6.]],
            [[None, 3., 5.], [1., 1., 1.]]
        ])
        result = naive_forecast('LastValue', history, TimeGrid([4, 5]))
        self.assertEqual(result.mean.shape, (2, 2, 2))
        np.testing.assert_array_equal(result.mean[0, 0], [4., 4.])
        np.testing.assert_array_equal(result.mean[0, 1], [6., 6.])
        np.testing.assert_array_equal(result.mean[1, 0], [5., 5.])
        np.testing.assert_array_equal(result.variance, 0.)
        np.testing.assert_array_equal(result.lower, result.mean)

    def test_constant_series(self):
        history = make_set([[[7., 7., 7.]]])
        for kind in NaivePredictorKind:
            result = naive_forecast(kind, history, TimeGrid([4, 5]))
            np.testing.assert_array_equal(result.mean[0, 0], [7., 7.])


if(__name__ == '__main__'):
    unittest.main()
