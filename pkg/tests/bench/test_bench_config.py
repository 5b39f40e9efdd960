# -*- coding: utf-8 -*-

import os.path
import shutil
import tempfile
import unittest

import numpy as np

from mtsclust.bench.config import (
    ConfigInvalidError,
    ExperimentConfig,
    SynthConfig,
    flatten_dict
)
from mtsclust.core.config import CFG


def make_dict(**kwargs):
    d = {
        'dataset': 'data.csv',
        'split': {'history': 6, 'horizon': 2},
        'models': ['DGM2'],
        'k_list': [2]
    }
    d.update(kwargs)
    return d


class flatten_dict_TestCase(unittest.TestCase):
    def test_nested(self):
        flat = flatten_dict({'a': 1, 'b': {'c': 2, 'd': {'e': 3}}})
        self.assertEqual(flat, {'a': 1, 'b.c': 2, 'b.d.e': 3})


class ExperimentConfig_TestCase(unittest.TestCase):
    def tearDown(self):
        CFG.reset()

    def test_minimal(self):
        config = ExperimentConfig.from_dict(make_dict())
        self.assertEqual(config.dataset, 'data.csv')
        self.assertEqual(config.split.history_len, 6)
        self.assertEqual(config.split.horizon_len, 2)
        self.assertEqual(config.models, ['DGM2'])
        self.assertEqual(config.k_list, [2])
        self.assertEqual(config.k_pairs, [])
        self.assertEqual(config.seed, 0)
        self.assertEqual(config.forecast_mode, 'soft')
        self.assertEqual(config.scale, 'standardized')
        self.assertEqual(config.formats, ['csv', 'markdown'])
        self.assertFalse(config.report_timing)

    def test_flat_keys(self):
        d = make_dict()
        del d['split']
        d['split.history'] = 6
        d['split.horizon'] = 2
        config = ExperimentConfig.from_dict(d)
        self.assertEqual(config.split.total_len, 8)

    def test_defaults_from_global_config(self):
        CFG.from_dict({'bench': {'test_fraction': 0.5, 'scale': 'raw'}})
        config = ExperimentConfig.from_dict(make_dict())
        self.assertEqual(config.test_fraction, 0.5)
        self.assertEqual(config.scale, 'raw')

    def test_missing_keys(self):
        for key in ('dataset', 'split', 'models', 'k_list'):
            d = make_dict()
            del d[key]
            with self.assertRaises(ConfigInvalidError):
                ExperimentConfig.from_dict(d)

    def test_unknown_key(self):
        with self.assertRaises(ConfigInvalidError):
            ExperimentConfig.from_dict(make_dict(epoch=3))

    def test_invalid_values(self):
        invalid = [
            {'split': {'history': 'abc', 'horizon': 2}},
            {'split': {'history': 0, 'horizon': 2}},
            {'models': []},
            {'models': ['ARIMA']},
            {'k_list': [0]},
            {'k_pairs': [[2]]},
            {'forecast_mode': 'greedy'},
            {'scale': 'log'},
            {'test_fraction': 1.5},
            {'formats': ['pdf']},
            {'epochs': 'many'}
        ]
        for kwargs in invalid:
            with self.assertRaises(ConfigInvalidError, msg=str(kwargs)):
                ExperimentConfig.from_dict(make_dict(**kwargs))

    def test_not_a_mapping(self):
        with self.assertRaises(ConfigInvalidError):
            ExperimentConfig.from_dict(['dataset'])

    def test_model_names(self):
        config = ExperimentConfig.from_dict(make_dict(
            models=['dgm2', 'Mean', 'magmaclust', 'DGM2']))
        self.assertEqual(config.models, ['DGM2', 'Mean', 'MagmaClust'])
        self.assertEqual(config.fit_models, ['DGM2', 'MagmaClust'])
        self.assertEqual(
            config.naive_models, ['LastValue', 'Mean', 'Median'])

    def test_scalar_values(self):
        config = ExperimentConfig.from_dict(make_dict(
            models='LastValue', k_list=3, formats='csv'))
        self.assertEqual(config.models, ['LastValue'])
        self.assertEqual(config.fit_models, [])
        self.assertEqual(config.k_list, [3])
        self.assertEqual(config.formats, ['csv'])

    def test_k_pairs(self):
        config = ExperimentConfig.from_dict(make_dict(k_pairs=[[2, 3], [1, 4]]))
        self.assertEqual(config.k_pairs, [(2, 3), (1, 4)])

    def test_relative_paths(self):
        base = os.path.join(os.sep, 'experiments')
        config = ExperimentConfig.from_dict(
            make_dict(out_dir='results'), base_dir=base)
        self.assertEqual(config.dataset, os.path.join(base, 'data.csv'))
        self.assertEqual(config.out_dir, os.path.join(base, 'results'))

        absolute = os.path.join(os.sep, 'data', 'x.csv')
        config = ExperimentConfig.from_dict(
            make_dict(dataset=absolute), base_dir=base)
        self.assertEqual(config.dataset, absolute)

    def test_model_settings(self):
        config = ExperimentConfig.from_dict(make_dict(
            gamma=0.3, epochs=5, hidden_dim=8, vem_max_iter=4,
            minimizer='iminuit'))
        settings = config.dgm2_settings()
        self.assertEqual(settings['gamma'], 0.3)
        self.assertEqual(settings['n_epochs'], 5)
        self.assertEqual(settings['hidden_dim'], 8)
        self.assertEqual(settings['readout_dim'], 8)
        self.assertIsNone(settings['learning_rate'])
        self.assertEqual(
            config.vem_settings(),
            {'max_iter': 4, 'tol': None, 'minimizer': 'iminuit'})

    def test_synth_dataset(self):
        config = ExperimentConfig.from_dict(make_dict(
            dataset='synth',
            synth={'kind': 'dgm2', 'M': 10, 'K': 2, 'T': 8, 'd': 2}))
        self.assertEqual(config.dataset, 'synth')
        self.assertIsInstance(config.synth, SynthConfig)
        self.assertEqual(config.synth.d, 2)

    def test_synth_without_settings(self):
        with self.assertRaises(ConfigInvalidError):
            ExperimentConfig.from_dict(make_dict(dataset='synth'))

    def test_unknown_synth_key(self):
        with self.assertRaises(ConfigInvalidError):
            ExperimentConfig.from_dict(make_dict(
                dataset='synth',
                synth={'kind': 'dgm2', 'M': 10, 'K': 2, 'T': 8, 'depth': 2}))


class ExperimentConfig_from_file_TestCase(unittest.TestCase):
    def setUp(self):
        self.tmpdir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmpdir)

    def _write(self, text):
        path = os.path.join(self.tmpdir, 'experiment.yaml')
        with open(path, 'w') as fp:
            fp.write(text)
        return path

    def test_yaml(self):
        path = self._write(
            'dataset: data.csv\n'
            'split:\n'
            '  history: 10\n'
            '  horizon: 2\n'
            'models: [MagmaClust, DGM2]\n'
            'k_list: [1, 2, 3]\n'
            'seed: 7\n'
            'report_timing: true\n')
        config = ExperimentConfig.from_file(path)
        self.assertEqual(
            config.dataset, os.path.join(self.tmpdir, 'data.csv'))
        self.assertEqual(config.k_list, [1, 2, 3])
        self.assertEqual(config.seed, 7)
        self.assertTrue(config.report_timing)

    def test_missing_file(self):
        with self.assertRaises(ConfigInvalidError):
            ExperimentConfig.from_file(os.path.join(self.tmpdir, 'nope.yaml'))

    def test_not_a_mapping(self):
        path = self._write('- a\n- b\n')
        with self.assertRaises(ConfigInvalidError):
            ExperimentConfig.from_file(path)

    def test_broken_yaml(self):
        path = self._write('models: [DGM2\n')
        with self.assertRaises(ConfigInvalidError):
            ExperimentConfig.from_file(path)


class SynthConfig_TestCase(unittest.TestCase):
    def test_defaults(self):
        config = SynthConfig.from_dict({'kind': 'magma', 'M': 4, 'K': 2,
                                        'T': 12})
        self.assertEqual(config.lengthscale, 3.)
        self.assertEqual(config.dim_names, ['dim0'])
        self.assertIsNone(config.out_dir)

        config = SynthConfig.from_dict({'kind': 'MAGMA', 'M': 4, 'K': 2,
                                        'T': 2})
        self.assertEqual(config.kind, 'magma')
        self.assertEqual(config.lengthscale, 1.)

    def test_invalid(self):
        invalid = [
            {'kind': 'arma', 'M': 4, 'K': 2, 'T': 5},
            {'kind': 'dgm2', 'K': 2, 'T': 5},
            {'kind': 'dgm2', 'M': 0, 'K': 2, 'T': 5},
            {'kind': 'dgm2', 'M': 4, 'K': 2, 'T': 5, 'd': 2,
             'dim_names': ['a']},
            {'kind': 'dgm2', 'M': 4, 'K': 2, 'T': 5, 'noise': 1.}
        ]
        for d in invalid:
            with self.assertRaises(ConfigInvalidError, msg=str(d)):
                SynthConfig.from_dict(d)

    def test_out_dir(self):
        base = os.path.join(os.sep, 'synth')
        config = SynthConfig.from_dict(
            {'kind': 'dgm2', 'M': 4, 'K': 2, 'T': 5, 'out_dir': 'out'},
            base_dir=base)
        self.assertEqual(config.out_dir, os.path.join(base, 'out'))

    def test_generate_magma(self):
        config = SynthConfig('magma', M=6, K=2, T=5, seed=3)
        (data, labels, dim_names) = config.generate()
        self.assertEqual(data.shape, (6, 1, 5))
        self.assertEqual(labels.shape, (6,))
        self.assertTrue(np.all((labels >= 1) & (labels <= 2)))
        self.assertEqual(dim_names, ['dim0'])

    def test_generate_dgm2(self):
        config = SynthConfig('dgm2', M=5, K=3, T=4, d=2, seed=1,
                             dim_names=['a', 'b'])
        (data, trajs, dim_names) = config.generate()
        self.assertEqual(data.shape, (5, 2, 4))
        self.assertEqual(len(trajs), 5)
        self.assertEqual(trajs[0].labels.shape, (4,))
        self.assertEqual(dim_names, ['a', 'b'])

    def test_generate_independent_dims(self):
        config = SynthConfig('dgm2', M=5, K=2, T=4, d=2, seed=1,
                             independent_dims=True)
        (data, trajs, _) = config.generate()
        self.assertEqual(data.shape, (5, 2, 4))
        labels = np.array([t.labels for t in trajs])
        self.assertTrue(np.all((labels >= 1) & (labels <= 4)))

    def test_generate_deterministic(self):
        config = SynthConfig('dgm2', M=5, K=2, T=4, seed=9)
        (a, _, _) = config.generate()
        (b, _, _) = config.generate()
        np.testing.assert_array_equal(a.values, b.values)

    def test_generate_invalid(self):
        config = SynthConfig('dgm2', M=5, K=2, T=4, rho=1.5)
        with self.assertRaises(ConfigInvalidError):
            config.generate()


if(__name__ == '__main__'):
    unittest.main()
