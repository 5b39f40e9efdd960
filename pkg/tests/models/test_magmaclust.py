# -*- coding: utf-8 -*-

import os.path
import shutil
import tempfile
import unittest

import numpy as np

from mtsclust.core.gp import (
    GaussianState,
    Kernel
)
from mtsclust.core.metrics import ari
from mtsclust.core.timeseries import (
    TimeGrid,
    TimeSeriesSet,
    make_univariate
)
from mtsclust.models.magmaclust import (
    EmptyIndividualError,
    IndexOutOfRangeError,
    MagmaClustModel,
    UnsupportedMultivariateError,
    VemConfig,
    assign_cluster,
    load_model,
    predict,
    save_model,
    vem_fit
)


def make_two_cluster_data(seed=1):
    """Twelve individuals, six per cluster, around two mean curves that are
    far apart compared to the noise.
    """
    rs = np.random.RandomState(seed)
    t = np.arange(1, 9, dtype=np.float64)
    labels = np.repeat([1, 2], 6)
    offsets = np.array([-3., 3.])
    values = np.empty((12, 8))
    for i in range(12):
        k = labels[i] - 1
        values[i] = offsets[k] + 0.5*np.sin(0.5*t + k) + \
            0.1*np.sin(0.3*t + rs.uniform(0, 2*np.pi)) + \
            0.05*rs.standard_normal(8)
    return (make_univariate(values), labels)


def make_fixed_model(K=2, grid=(1, 2, 3, 4), noise_var=0.1,
                     memberships=None):
    kernel = Kernel(1., 1.5)
    grid = TimeGrid(list(grid))
    posteriors = [
        GaussianState(grid, np.full((len(grid),), 2.*k - 1.),
                      0.1*kernel(grid, grid))
        for k in range(K)]
    if(memberships is None):
        memberships = np.full((3, K), 1./K)
    return MagmaClustModel(
        mean_kernels=[kernel]*K,
        indiv_kernel=Kernel(0.5, 1.),
        noise_var=noise_var,
        mixing=np.full((K,), 1./K),
        mean_posteriors=posteriors,
        memberships=memberships,
        train_grid=grid)


class vem_fit_TestCase(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        (cls.data, cls.labels) = make_two_cluster_data()
        cls.config = VemConfig(max_iter=8, n_mstep_iter=20, seed=0)
        (cls.model, cls.report) = vem_fit(cls.data, 2, cls.config)

    def test_recovers_clusters(self):
        tau = self.model.memberships
        self.assertEqual(tau.shape, (12, 2))
        np.testing.assert_allclose(tau.sum(axis=1), 1.)
        onehot = np.eye(2)[np.argmax(tau, axis=1)]
        self.assertLess(np.max(np.abs(tau - onehot)), 1e-3)
        fitted = np.argmax(tau, axis=1) + 1
        self.assertEqual(ari(fitted, self.labels), 1.)

    def test_elbo_trace(self):
        trace = np.array(self.report.elbo_trace)
        self.assertTrue(np.all(np.isfinite(trace)))
        self.assertEqual(self.report.n_iters, len(trace))
        self.assertLessEqual(self.report.n_iters, 8)
        tol = 1e-6*np.abs(trace[:-1]) + 1e-8
        self.assertTrue(np.all(np.diff(trace) >= -tol))

    def test_model_elbo(self):
        value = self.model.elbo(self.data)
        self.assertAlmostEqual(
            value, self.report.elbo_trace[-1],
            delta=1e-6*abs(value))

    def test_model_invariants(self):
        self.assertEqual(self.model.K, 2)
        self.assertAlmostEqual(np.sum(self.model.mixing), 1.)
        self.assertGreater(self.model.noise_var, 0)
        for post in self.model.mean_posteriors:
            self.assertEqual(post.grid, self.model.train_grid)
            np.testing.assert_allclose(
                post.covariance, post.covariance.T, atol=1e-12)
            self.assertTrue(np.all(np.linalg.eigvalsh(post.covariance) > 0))

    def test_predict(self):
        history = self.data.restrict_time(0, 6)
        result = predict(self.model, history, TimeGrid([7, 8]))
        self.assertEqual(result.mean.shape, (12, 1, 2))
        self.assertTrue(np.all(result.variance >= 0))
        np.testing.assert_allclose(result.memberships.sum(axis=1), 1.)
        self.assertEqual(ari(result.labels, self.labels), 1.)
        truth = self.data.values[:, :, 6:]
        self.assertLess(np.sqrt(np.mean((result.mean - truth)**2)), 1.)


class vem_fit_label_permutation_TestCase(unittest.TestCase):
    def test_permuted_initial_memberships(self):
        (data, _) = make_two_cluster_data(seed=2)
        tau = np.random.RandomState(0).dirichlet(np.ones(2), size=12)
        perm = [1, 0]
        (a, _) = vem_fit(data, 2, VemConfig(
            max_iter=3, n_mstep_iter=10, init_memberships=tau))
        (b, _) = vem_fit(data, 2, VemConfig(
            max_iter=3, n_mstep_iter=10, init_memberships=tau[:, perm]))

        np.testing.assert_allclose(b.mixing, a.mixing[perm], atol=1e-8)
        np.testing.assert_allclose(
            b.memberships, a.memberships[:, perm], atol=1e-8)
        for k in range(2):
            np.testing.assert_allclose(
                b.mean_posteriors[k].mean, a.mean_posteriors[perm[k]].mean,
                atol=1e-8)

        history = data.restrict_time(0, 6)
        np.testing.assert_allclose(
            predict(b, history, TimeGrid([7, 8])).mean,
            predict(a, history, TimeGrid([7, 8])).mean, atol=1e-8)


class vem_fit_edge_cases_TestCase(unittest.TestCase):
    def test_single_cluster(self):
        (data, _) = make_two_cluster_data(seed=2)
        (model, report) = vem_fit(
            data, 1, VemConfig(max_iter=3, n_mstep_iter=10))
        np.testing.assert_array_equal(model.memberships, 1.)
        np.testing.assert_array_equal(model.mixing, [1.])

    def test_sparse_observations(self):
        values = np.array([
            [0., 1., np.nan, 3.],
            [np.nan, 1.2, 2.1, np.nan],
            [0.1, np.nan, 2., 2.9],
            [0.2, 0.9, np.nan, np.nan]])
        data = make_univariate(values)
        (model, report) = vem_fit(
            data, 1, VemConfig(max_iter=3, n_mstep_iter=10))
        self.assertEqual(len(model.train_grid), 4)
        self.assertTrue(np.all(np.isfinite(report.elbo_trace)))

    def test_multivariate(self):
        data = TimeSeriesSet(np.ones((2, 2, 3)))
        with self.assertRaises(UnsupportedMultivariateError):
            vem_fit(data, 1)

    def test_empty_individual(self):
        data = make_univariate([[1., 2.], [np.nan, np.nan]])
        with self.assertRaises(EmptyIndividualError):
            vem_fit(data, 1)

    def test_too_many_clusters(self):
        data = make_univariate([[1., 2.], [2., 3.]])
        with self.assertRaises(ValueError):
            vem_fit(data, 3)

    def test_invalid_config(self):
        with self.assertRaises(ValueError):
            VemConfig(minimizer='newton')
        with self.assertRaises(ValueError):
            VemConfig(max_iter=0)


class predict_TestCase(unittest.TestCase):
    def test_empty_history(self):
        model = make_fixed_model()
        history = TimeSeriesSet(np.full((1, 1, 2), np.nan))
        result = predict(model, history, TimeGrid([3, 4]))
        np.testing.assert_allclose(result.memberships[0], model.mixing)
        expected = sum(
            model.mixing[k]*model.mean_posteriors[k].mean[2:]
            for k in range(model.K))
        np.testing.assert_allclose(result.mean[0, 0], expected, atol=1e-12)

    def test_interpolation(self):
        kernel = Kernel(1., 1.)
        grid = TimeGrid.range(3)
        model = MagmaClustModel(
            mean_kernels=[kernel], indiv_kernel=Kernel(1., 1.),
            noise_var=0., mixing=[1.],
            mean_posteriors=[GaussianState(grid, np.zeros(3),
                                           kernel(grid, grid))],
            memberships=[[1.]], train_grid=grid)
        history = TimeSeriesSet(np.array([[[np.nan, 1.5, np.nan]]]))
        result = predict(model, history, TimeGrid([2]))
        self.assertAlmostEqual(result.mean[0, 0, 0], 1.5, delta=1e-6)

    def test_extrapolation_beyond_training_grid(self):
        model = make_fixed_model()
        history = TimeSeriesSet(np.array([[[1., 1.1]]]))
        result = predict(model, history, TimeGrid([5, 6, 9]))
        self.assertEqual(result.mean.shape, (1, 1, 3))
        self.assertTrue(np.all(np.isfinite(result.mean)))
        self.assertEqual(result.labels[0], 2)

    def test_cluster_curves(self):
        model = make_fixed_model()
        history = TimeSeriesSet(np.array([[[-1., -0.9]]]))
        result = predict(model, history, TimeGrid([3, 4]))
        (m, lo, up) = result.cluster_curves(0, 0)
        self.assertTrue(np.all(lo < m) and np.all(m < up))
        self.assertEqual(result.labels[0], 1)

    def test_multivariate(self):
        with self.assertRaises(UnsupportedMultivariateError):
            predict(make_fixed_model(), TimeSeriesSet(np.ones((1, 2, 2))),
                    TimeGrid([3]))


class assign_cluster_TestCase(unittest.TestCase):
    def test_argmax(self):
        model = make_fixed_model(K=3, memberships=np.array([
            [0.1, 0.7, 0.2], [0.5, 0.5, 0.], [0., 0., 1.]]))
        self.assertEqual(assign_cluster(model, 0)[0], 2)
        self.assertEqual(assign_cluster(model, 1)[0], 1)
        self.assertEqual(assign_cluster(model, 2)[0], 3)
        np.testing.assert_array_equal(
            assign_cluster(model, 0)[1], [0.1, 0.7, 0.2])

    def test_single_cluster(self):
        model = make_fixed_model(K=1, memberships=np.ones((3, 1)))
        for i in range(3):
            self.assertEqual(assign_cluster(model, i)[0], 1)

    def test_out_of_range(self):
        model = make_fixed_model()
        with self.assertRaises(IndexOutOfRangeError):
            assign_cluster(model, 3)
        with self.assertRaises(IndexOutOfRangeError):
            assign_cluster(model, -1)


class save_model_TestCase(unittest.TestCase):
    def setUp(self):
        self.tmpdir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmpdir)

    def test_save_load(self):
        model = make_fixed_model()
        path = os.path.join(self.tmpdir, 'model.json')
        save_model(model, path)
        back = load_model(path)
        self.assertEqual(back.K, model.K)
        self.assertEqual(back.noise_var, model.noise_var)
        self.assertEqual(back.train_grid, model.train_grid)
        np.testing.assert_array_equal(back.memberships, model.memberships)
        for (a, b) in zip(back.mean_posteriors, model.mean_posteriors):
            np.testing.assert_array_equal(a.mean, b.mean)
            np.testing.assert_array_equal(a.covariance, b.covariance)

        history = TimeSeriesSet(np.array([[[0.5, 0.2]]]))
        np.testing.assert_array_equal(
            predict(back, history, TimeGrid([3])).mean,
            predict(model, history, TimeGrid([3])).mean)

    def test_wrong_format(self):
        d = make_fixed_model().to_dict()
        d['format'] = 'other'
        with self.assertRaises(ValueError):
            MagmaClustModel.from_dict(d)


if(__name__ == '__main__'):
    unittest.main()
