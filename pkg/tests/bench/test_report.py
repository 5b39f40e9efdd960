# -*- coding: utf-8 -*-

import os.path
import shutil
import tempfile
import unittest

import numpy as np
import pandas as pd

from mtsclust.bench.config import ConfigInvalidError
from mtsclust.bench.report import (
    AriEntry,
    BenchmarkReport,
    BenchmarkRow,
    ReportIOError,
    emit_report,
    read_metrics_csv
)


def make_report(dim_names=('x', 'y')):
    d = len(dim_names)
    rows = [
        BenchmarkRow('Mean', None, np.full((d,), 1.), np.full((d,), 0.5),
                     1., 0.5, 0.1234),
        BenchmarkRow('DGM2', 2, np.arange(1, d+1)*0.25,
                     np.arange(1, d+1)*0.125, 0.3, 0.2, 12.3456),
        BenchmarkRow.failed('MagmaClust', 3, d, 'NotPositiveDefiniteError')
    ]
    return BenchmarkReport('Test run', 'standardized', dim_names, rows=rows)


class BenchmarkRow_TestCase(unittest.TestCase):
    def test_attributes(self):
        row = BenchmarkRow('DGM2', 4, [0.5], [0.25], 0.5, 0.25, 2.)
        self.assertEqual(row.K, '4')
        self.assertFalse(row.is_failed)
        np.testing.assert_array_equal(row.rmse, [0.5])

        row = BenchmarkRow('LastValue', None, 1., 1., 1., 1., 0.)
        self.assertEqual(row.K, '')

    def test_invalid_metrics(self):
        with self.assertRaises(ValueError):
            BenchmarkRow('DGM2', 2, [-1.], [0.], 0., 0., 1.)
        with self.assertRaises(ValueError):
            BenchmarkRow('DGM2', 2, [1.], [1.], np.nan, 1., 1.)
        with self.assertRaises(ValueError):
            BenchmarkRow('DGM2', 2, [np.inf], [1.], 1., 1., 1.)

    def test_uncovered_dimension(self):
        row = BenchmarkRow('DGM2 univariate x', 2, [0.5, np.nan],
                           [0.4, np.nan], 0.5, 0.4, 1.)
        self.assertTrue(np.isnan(row.rmse[1]))

    def test_failed(self):
        row = BenchmarkRow.failed('DGM2', 2, 3, ValueError('boom'))
        self.assertTrue(row.is_failed)
        self.assertEqual(row.error, 'boom')
        self.assertEqual(row.rmse.shape, (3,))
        self.assertTrue(np.all(np.isnan(row.mae)))


class BenchmarkReport_TestCase(unittest.TestCase):
    def test_unknown_scale(self):
        with self.assertRaises(ValueError):
            BenchmarkReport('t', 'log', ['x'])

    def test_metrics_dataframe(self):
        df = make_report().metrics_dataframe()
        self.assertEqual(list(df.columns), [
            'model', 'K', 'rmse_x', 'rmse_y', 'mae_x', 'mae_y', 'rmse_avg',
            'mae_avg', 'seconds', 'scale', 'error'])
        self.assertEqual(list(df['model']), ['Mean', 'DGM2', 'MagmaClust'])
        self.assertEqual(list(df['K']), ['', '2', '3'])
        self.assertEqual(df['seconds'][1], 12.346)
        self.assertEqual(df['error'][0], '')
        self.assertEqual(df['error'][2], 'NotPositiveDefiniteError')

    def test_metrics_without_timing(self):
        df = make_report().metrics_dataframe(report_timing=False)
        self.assertTrue(np.all(np.isnan(df['seconds'])))

    def test_markdown_main_table(self):
        text = make_report().to_markdown()
        lines = text.splitlines()
        self.assertEqual(lines[0], '# Test run')
        self.assertIn('| Model | K | RMSE | MAE | Time (s) |', lines)
        self.assertIn('| Mean |  | 1.0000 | 0.5000 | 0.123 |', lines)
        self.assertIn('| DGM2 | 2 | 0.3000 | 0.2000 | 12.346 |', lines)
        self.assertIn('| MagmaClust | 3 | - | - | - |', lines)
        self.assertIn('## Failed rows', lines)
        self.assertIn('- MagmaClust K=3: NotPositiveDefiniteError', lines)

    def test_markdown_per_dimension_table(self):
        lines = make_report().to_markdown().splitlines()
        self.assertIn('## Errors per dimension', lines)
        self.assertIn(
            '| Model | K | RMSE x | MAE x | RMSE y | MAE y |', lines)
        self.assertIn(
            '| DGM2 | 2 | 0.2500 | 0.1250 | 0.5000 | 0.2500 |', lines)

        lines = make_report(['x']).to_markdown().splitlines()
        self.assertNotIn('## Errors per dimension', lines)

    def test_markdown_without_timing(self):
        lines = make_report().to_markdown(report_timing=False).splitlines()
        self.assertIn('| Mean |  | 1.0000 | 0.5000 | - |', lines)

    def test_markdown_scale_note(self):
        report = make_report()
        self.assertIn('Scale: standardized.', report.to_markdown())
        report.scale = 'raw'
        self.assertIn('Scale: raw.', report.to_markdown())

    def test_markdown_ari(self):
        report = make_report()
        report.ari_entries.append(AriEntry('DGM2 K=2 vs truth', 0.75))
        lines = report.to_markdown().splitlines()
        self.assertIn('## Partition agreement', lines)
        self.assertIn('| DGM2 K=2 vs truth | 0.7500 |', lines)


class emit_report_TestCase(unittest.TestCase):
    def setUp(self):
        self.tmpdir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmpdir)

    def test_files(self):
        report = make_report()
        report.ari_entries.append(AriEntry('a vs b', 0.5, [0.25, 0.75]))
        report.curves['MagmaClust K2'] = pd.DataFrame({'mean': [1., 2.]})
        out_dir = os.path.join(self.tmpdir, 'out')
        files = emit_report(report, out_dir)
        self.assertEqual(
            sorted(os.path.basename(f) for f in files),
            ['ari.csv', 'curves_MagmaClust_K2.csv', 'metrics.csv',
             'report.md'])
        for f in files:
            self.assertTrue(os.path.isfile(f))

        df = pd.read_csv(os.path.join(out_dir, 'ari.csv'))
        self.assertEqual(df['ari_per_timestep'][0], '0.25;0.75')

    def test_formats(self):
        files = emit_report(make_report(), self.tmpdir, formats=['markdown'])
        self.assertEqual(
            [os.path.basename(f) for f in files], ['report.md'])
        files = emit_report(make_report(), self.tmpdir, formats=['csv'])
        self.assertEqual(
            [os.path.basename(f) for f in files], ['metrics.csv'])

    def test_read_back(self):
        report = make_report()
        emit_report(report, self.tmpdir, formats=['csv'])
        rows = read_metrics_csv(
            os.path.join(self.tmpdir, 'metrics.csv'), ['x', 'y'])
        self.assertEqual(len(rows), 3)
        for (a, b) in zip(rows[:2], report.rows[:2]):
            self.assertEqual(a.model, b.model)
            self.assertEqual(a.K, b.K)
            np.testing.assert_allclose(a.rmse, b.rmse)
            np.testing.assert_allclose(a.mae, b.mae)
            self.assertAlmostEqual(a.rmse_avg, b.rmse_avg)
            self.assertIsNone(a.error)
        self.assertEqual(rows[1].wall_clock_seconds, 12.346)
        self.assertTrue(rows[2].is_failed)
        self.assertEqual(rows[2].error, 'NotPositiveDefiniteError')
        self.assertTrue(np.all(np.isnan(rows[2].rmse)))

    def test_read_back_without_timing(self):
        emit_report(make_report(), self.tmpdir, formats=['csv'],
                    report_timing=False)
        rows = read_metrics_csv(
            os.path.join(self.tmpdir, 'metrics.csv'), ['x', 'y'])
        self.assertTrue(np.isnan(rows[0].wall_clock_seconds))

    def test_no_rows(self):
        report = BenchmarkReport('empty', 'raw', ['x'])
        with self.assertRaises(ConfigInvalidError):
            emit_report(report, self.tmpdir)

    def test_unwritable(self):
        path = os.path.join(self.tmpdir, 'file')
        with open(path, 'w') as fp:
            fp.write('x')
        with self.assertRaises(ReportIOError):
            emit_report(make_report(), path)


if(__name__ == '__main__'):
    unittest.main()
