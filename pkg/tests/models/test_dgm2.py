# -*- coding: utf-8 -*-

import math
import os.path
import shutil
import tempfile
import unittest

import numpy as np
import torch

from mtsclust.core.random import RandomStateService
from mtsclust.core.synthgen import (
    Dgm2SynthSpec,
    generate_dgm2_data
)
from mtsclust.core.timeseries import TimeSeriesSet
from mtsclust.models.dgm2 import (
    DGM2Config,
    DGM2Model,
    IncompleteGridError,
    InvalidGammaError,
    _batch_elbo,
    batch_cluster_trajectories,
    cluster_trajectory,
    dynamic_mixture_adjust,
    elbo,
    emission_params,
    forecast,
    inference_step,
    load_model,
    save_model,
    train,
    transition_step
)


def make_model(K=2, d=1, hidden_dim=2, readout_dim=2, gamma=0.3, seed=0,
               scale=0.5):
    model = DGM2Model(K, d, gamma=gamma, hidden_dim=hidden_dim,
                      readout_dim=readout_dim)
    model.init_weights(RandomStateService(seed), scale)
    with torch.no_grad():
        model.mixture.mu.copy_(torch.linspace(-1., 1., K, dtype=torch.float64)
                               [:, None].repeat(1, d))
        model.mixture.log_var.fill_(np.log(0.5))
        model.mixture.base_logits.copy_(
            torch.arange(K, dtype=torch.float64)*0.2)
    return model


def _sigmoid(v):
    return 1./(1. + math.exp(-v))


def _softmax(v):
    m = max(v)
    e = [math.exp(x - m) for x in v]
    s = sum(e)
    return [x/s for x in e]


def scalar_cell(cell, x, h, c):
    """Evaluates the LSTM cell equations element by element.
    """
    W_x = cell.W_x.detach().numpy().tolist()
    W_h = cell.W_h.detach().numpy().tolist()
    b = cell.b.detach().numpy().tolist()
    H = len(h)
    gates = []
    for j in range(4*H):
        v = b[j]
        for i in range(len(x)):
            v += x[i]*W_x[i][j]
        for m in range(H):
            v += h[m]*W_h[m][j]
        gates.append(v)
    c_next = []
    h_next = []
    for m in range(H):
        i_g = _sigmoid(gates[m])
        f_g = _sigmoid(gates[H + m])
        g_g = math.tanh(gates[2*H + m])
        o_g = _sigmoid(gates[3*H + m])
        c_next.append(f_g*c[m] + i_g*g_g)
        h_next.append(o_g*math.tanh(c_next[m]))
    return (h_next, c_next)


def scalar_readout(readout, h):
    W1 = readout.W1.detach().numpy().tolist()
    b1 = readout.b1.detach().numpy().tolist()
    W2 = readout.W2.detach().numpy().tolist()
    b2 = readout.b2.detach().numpy().tolist()
    a = [math.tanh(b1[r] + sum(h[m]*W1[m][r] for m in range(len(h))))
         for r in range(len(b1))]
    logits = [b2[k] + sum(a[r]*W2[r][k] for r in range(len(a)))
              for k in range(len(b2))]
    return _softmax(logits)


class dynamic_mixture_adjust_TestCase(unittest.TestCase):
    def test_endpoints(self):
        p = np.array([0.2, 0.8])
        base = np.array([0.6, 0.4])
        np.testing.assert_array_equal(dynamic_mixture_adjust(p, base, 0.), p)
        np.testing.assert_array_equal(
            dynamic_mixture_adjust(p, base, 1.), base)

    def test_arithmetic(self):
        np.testing.assert_allclose(
            dynamic_mixture_adjust([1., 0.], [0.5, 0.5], 0.5), [0.75, 0.25])

    def test_simplex(self):
        rs = np.random.RandomState(0)
        p = rs.dirichlet(np.ones(4), size=5)
        base = rs.dirichlet(np.ones(4))
        psi = dynamic_mixture_adjust(p, base, 0.37)
        np.testing.assert_allclose(psi.sum(axis=1), 1.)
        self.assertTrue(np.all(psi >= 0))

    def test_torch(self):
        psi = dynamic_mixture_adjust(
            torch.tensor([1., 0.], dtype=torch.float64),
            torch.tensor([0.5, 0.5], dtype=torch.float64), 0.5)
        self.assertIsInstance(psi, torch.Tensor)
        np.testing.assert_allclose(psi.numpy(), [0.75, 0.25])

    def test_invalid_gamma(self):
        with self.assertRaises(InvalidGammaError):
            dynamic_mixture_adjust([1., 0.], [0.5, 0.5], 1.5)
        with self.assertRaises(InvalidGammaError):
            DGM2Model(2, 1, gamma=-0.1)


class step_TestCase(unittest.TestCase):
    def test_zero_readout_is_uniform(self):
        model = DGM2Model(3, 2, hidden_dim=4, readout_dim=4)
        (p, h) = transition_step(model, [0.2, 0.3, 0.5])
        np.testing.assert_allclose(p, 1./3, rtol=1e-15)
        self.assertEqual(h[0].shape, (4,))
        (q, _) = inference_step(model, [1.5, -2.])
        np.testing.assert_allclose(q, 1./3, rtol=1e-15)

    def test_simplex(self):
        model = make_model(K=4, d=2, hidden_dim=3, readout_dim=5, scale=2.)
        rs = np.random.RandomState(1)
        (p, _) = transition_step(model, rs.dirichlet(np.ones(4), size=6))
        self.assertEqual(p.shape, (6, 4))
        self.assertTrue(np.all(p > 0))
        np.testing.assert_allclose(p.sum(axis=1), 1.)

    def test_inference_scalar_oracle(self):
        model = make_model()
        xs = [[0.7], [-1.3]]
        h = [0., 0.]
        c = [0., 0.]
        state = None
        for x in xs:
            (q, state) = inference_step(model, x, state)
            (h, c) = scalar_cell(model.inference_cell, x, h, c)
            q_ref = scalar_readout(model.inference_readout, h)
            np.testing.assert_allclose(q, q_ref, rtol=0, atol=1e-12)
            np.testing.assert_allclose(state[0], h, rtol=0, atol=1e-12)
            np.testing.assert_allclose(state[1], c, rtol=0, atol=1e-12)

    def test_transition_scalar_oracle(self):
        model = make_model(seed=5)
        z = [0.3, 0.7]
        (p, state) = transition_step(model, z)
        (h, c) = scalar_cell(model.transition_cell, z, [0., 0.], [0., 0.])
        p_ref = scalar_readout(model.transition_readout, h)
        np.testing.assert_allclose(p, p_ref, rtol=0, atol=1e-12)

        (p2, _) = transition_step(model, p, state)
        (h, c) = scalar_cell(model.transition_cell, p_ref, h, c)
        np.testing.assert_allclose(
            p2, scalar_readout(model.transition_readout, h),
            rtol=0, atol=1e-12)

    def test_logit_shift_invariance(self):
        model = make_model(K=3, hidden_dim=3, readout_dim=3, scale=2.)
        series = np.array([[0.4, -1.2, 0.9, 1.7, -0.3]])
        history = TimeSeriesSet(series[None])
        before = cluster_trajectory(model, series)
        fc_before = forecast(model, history, 3)

        with torch.no_grad():
            model.inference_readout.b2.add_(5.)
            model.transition_readout.b2.add_(-3.)
        after = cluster_trajectory(model, series)
        fc_after = forecast(model, history, 3)

        np.testing.assert_allclose(after.probs, before.probs, rtol=1e-12)
        np.testing.assert_array_equal(after.labels, before.labels)
        np.testing.assert_allclose(
            fc_after.trajectories[0].probs, fc_before.trajectories[0].probs,
            rtol=1e-12)
        np.testing.assert_array_equal(
            fc_after.trajectories[0].labels, fc_before.trajectories[0].labels)
        np.testing.assert_allclose(
            fc_after.mean, fc_before.mean, rtol=0, atol=1e-12)

    def test_non_finite_observation(self):
        with self.assertRaises(ValueError):
            inference_step(make_model(), [np.nan])


class emission_params_TestCase(unittest.TestCase):
    def setUp(self):
        self.model = DGM2Model(2, 1, hidden_dim=2, readout_dim=2)
        with torch.no_grad():
            self.model.mixture.mu.copy_(
                torch.tensor([[0.], [2.]], dtype=torch.float64))

    def test_one_hot(self):
        (mean, var) = emission_params(self.model, [0., 1.])
        np.testing.assert_array_equal(mean, [2.])
        np.testing.assert_array_equal(var, [1.])

    def test_soft_average(self):
        (mean, _) = emission_params(self.model, [0.5, 0.5], mode='soft')
        np.testing.assert_allclose(mean, [1.])

    def test_hard(self):
        (mean, _) = emission_params(self.model, [0.4, 0.6], mode='hard')
        np.testing.assert_array_equal(mean, [2.])
        (mean, _) = emission_params(self.model, [0.5, 0.5], mode='hard')
        np.testing.assert_array_equal(mean, [0.])

    def test_unknown_mode(self):
        with self.assertRaises(ValueError):
            emission_params(self.model, [0.5, 0.5], mode='median')


class elbo_TestCase(unittest.TestCase):
    def setUp(self):
        self.series = np.array([[0.3, -0.8, 1.1, 0.9, -0.2]])

    def test_single_component(self):
        model = make_model(K=1)
        var = 0.5
        mu = -1.
        expected = np.sum(
            -0.5*((self.series - mu)**2/var + np.log(var) + np.log(2*np.pi)))
        self.assertAlmostEqual(elbo(model, self.series), expected, places=10)

    def test_finite(self):
        model = make_model(K=3, d=2, hidden_dim=3, readout_dim=3)
        series = np.vstack((self.series, -self.series))
        self.assertTrue(np.isfinite(elbo(model, series)))

    def test_incomplete(self):
        series = self.series.copy()
        series[0, 2] = np.nan
        with self.assertRaises(IncompleteGridError):
            elbo(make_model(), series)

    def test_gradient(self):
        model = make_model(K=2, hidden_dim=3, readout_dim=2, seed=2)
        X = torch.as_tensor(self.series.T[None])
        model.zero_grad()
        torch.sum(_batch_elbo(model, X)).backward()

        params = dict(model.named_parameters())
        entries = [
            ('mixture.mu', (0, 0)),
            ('mixture.log_var', (0,)),
            ('mixture.base_logits', (1,)),
            ('transition_readout.b2', (0,)),
            ('transition_cell.W_h', (1, 5)),
            ('inference_cell.W_x', (0, 2)),
            ('inference_readout.W1', (2, 1))
        ]
        eps = 1e-6
        for (name, idx) in entries:
            p = params[name]
            grad = float(p.grad[idx])
            with torch.no_grad():
                orig = float(p[idx])
                p[idx] = orig + eps
                f_plus = elbo(model, self.series)
                p[idx] = orig - eps
                f_minus = elbo(model, self.series)
                p[idx] = orig
            num = (f_plus - f_minus)/(2*eps)
            self.assertAlmostEqual(
                grad, num, delta=1e-6*max(1., abs(num)), msg=name)


class train_TestCase(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        spec = Dgm2SynthSpec.from_separation(
            M=16, K=2, T=6, separation_sd=6., rho=0.9, gamma=0.1, seed=1)
        (cls.data, cls.truth) = generate_dgm2_data(spec)
        cls.config = DGM2Config(
            hidden_dim=4, readout_dim=4, gamma=0.2, learning_rate=0.02,
            batch_size=8, n_epochs=40, seed=3)
        (cls.model, cls.report) = train(cls.data, 2, cls.config)

    def test_report(self):
        report = self.report
        self.assertEqual(len(report.loss_trace), 40)
        self.assertTrue(np.all(np.isfinite(report.loss_trace)))
        self.assertGreaterEqual(report.wall_clock_seconds, 0)
        self.assertGreater(report.elbo_final, report.elbo_initial)
        first = np.mean(report.loss_trace[:8])
        last = np.mean(report.loss_trace[-8:])
        self.assertLessEqual(last, first)

    def test_deterministic(self):
        (model, report) = train(self.data, 2, self.config)
        np.testing.assert_allclose(
            report.loss_trace, self.report.loss_trace, rtol=1e-10)
        for (a, b) in zip(model.parameters(), self.model.parameters()):
            np.testing.assert_allclose(
                a.detach().numpy(), b.detach().numpy(), rtol=1e-10,
                atol=1e-12)

    def test_cluster_trajectories(self):
        trajs = batch_cluster_trajectories(self.model, self.data)
        self.assertEqual(len(trajs), 16)
        for tr in trajs:
            self.assertEqual(tr.probs.shape, (6, 2))
            np.testing.assert_allclose(tr.probs.sum(axis=1), 1.)
            self.assertTrue(np.all((tr.labels >= 1) & (tr.labels <= 2)))
        single = cluster_trajectory(self.model, self.data.values[3])
        np.testing.assert_allclose(single.probs, trajs[3].probs, atol=1e-12)

    def test_incomplete_data(self):
        values = self.data.values.copy()
        values[0, 0, 0] = np.nan
        with self.assertRaises(IncompleteGridError):
            train(TimeSeriesSet(values), 2, self.config)

    def test_save_load(self):
        tmpdir = tempfile.mkdtemp()
        try:
            path = os.path.join(tmpdir, 'dgm2.json')
            save_model(self.model, path)
            back = load_model(path)
        finally:
            shutil.rmtree(tmpdir)
        self.assertEqual(back.K, 2)
        self.assertEqual(back.gamma, 0.2)
        series = self.data.values[0]
        self.assertEqual(elbo(back, series), elbo(self.model, series))


class forecast_TestCase(unittest.TestCase):
    def setUp(self):
        self.model = make_model(K=2, hidden_dim=3, readout_dim=3)
        rs = np.random.RandomState(4)
        self.history = TimeSeriesSet(rs.normal(size=(3, 1, 5)))

    def test_soft(self):
        result = forecast(self.model, self.history, 3)
        self.assertEqual(result.mean.shape, (3, 1, 3))
        np.testing.assert_array_equal(result.grid.points, [6, 7, 8])
        self.assertTrue(np.all(result.variance > 0))
        self.assertEqual(len(result.trajectories), 3)
        self.assertEqual(len(result.trajectories[0]), 8)
        mu = self.model.mixture.mu.detach().numpy()[:, 0]
        self.assertTrue(np.all(result.mean >= mu.min()))
        self.assertTrue(np.all(result.mean <= mu.max()))

    def test_zero_horizon(self):
        result = forecast(self.model, self.history, 0)
        self.assertEqual(result.mean.shape, (3, 1, 0))
        self.assertIsNone(result.grid)
        self.assertEqual(len(result.trajectories[0]), 5)

    def test_single_component(self):
        model = make_model(K=1)
        with torch.no_grad():
            model.mixture.mu.fill_(3.)
        result = forecast(model, self.history, 4)
        np.testing.assert_allclose(result.mean, 3., rtol=1e-15)
        np.testing.assert_allclose(result.variance, 0.5, rtol=1e-12)
        result = forecast(model, self.history, 4, mode='sample',
                          n_samples=10, rss=1)
        np.testing.assert_array_equal(
            [tr.labels for tr in result.trajectories], 1)

    def test_sample_matches_soft_one_step(self):
        soft = forecast(self.model, self.history, 1)
        sample = forecast(self.model, self.history, 1, mode='sample',
                          n_samples=20000, rss=7)
        np.testing.assert_allclose(sample.mean, soft.mean, atol=0.05)
        np.testing.assert_allclose(sample.variance, soft.variance, atol=0.1)

    def test_sample_matches_soft_multi_step(self):
        # Large weights make the transition network clearly nonlinear in its
        # component input.
        model = make_model(K=2, hidden_dim=3, readout_dim=3, scale=2., seed=2)
        with torch.no_grad():
            model.mixture.mu.copy_(
                torch.tensor([[0.], [4.]], dtype=torch.float64))
        history = TimeSeriesSet(np.array([[[0., 4., 0., 4.]]]))
        S = 100000
        soft = forecast(model, history, 4)
        sample = forecast(model, history, 4, mode='sample', n_samples=S,
                          rss=11)
        se = np.sqrt(soft.variance / S)
        self.assertTrue(np.all(np.abs(sample.mean - soft.mean) <= 3*se),
                        msg=f'{soft.mean} vs {sample.mean}')
        np.testing.assert_allclose(
            sample.variance, soft.variance, rtol=0.05)

    def test_soft_branch_limit(self):
        # K=2 and horizon 4 need 8 paths.
        exact = forecast(self.model, self.history, 4)
        limited = forecast(self.model, self.history, 4, max_branches=8)
        np.testing.assert_allclose(limited.mean, exact.mean, rtol=1e-12)

        pruned = forecast(self.model, self.history, 4, max_branches=1)
        self.assertTrue(np.all(np.isfinite(pruned.mean)))
        for tr in pruned.trajectories:
            np.testing.assert_allclose(
                np.sum(tr.probs, axis=1), 1., rtol=1e-12)

        with self.assertRaises(ValueError):
            forecast(self.model, self.history, 2, max_branches=0)

    def test_sample_deterministic(self):
        a = forecast(self.model, self.history, 2, mode='sample',
                     n_samples=50, rss=3)
        b = forecast(self.model, self.history, 2, mode='sample',
                     n_samples=50, rss=3)
        np.testing.assert_array_equal(a.mean, b.mean)

    def test_array_history(self):
        result = forecast(self.model, self.history.values[0], 2)
        self.assertEqual(result.mean.shape, (1, 1, 2))
        np.testing.assert_array_equal(result.grid.points, [6, 7])

    def test_unknown_mode(self):
        with self.assertRaises(ValueError):
            forecast(self.model, self.history, 1, mode='beam')


if(__name__ == '__main__'):
    unittest.main()
