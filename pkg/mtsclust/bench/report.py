# -*- coding: utf-8 -*-

"""The benchmark report: one metrics row per (model, K) pair, the ARI entries
of partition comparisons and optional prediction curves, written as CSV and
markdown tables.
"""

import os
import os.path

import numpy as np
import pandas as pd

from mtsclust.bench.config import ConfigInvalidError
from mtsclust.core.debugging import get_logger


logger = get_logger(__name__)

SCALE_NOTES = {
    'standardized': (
        'Scale: standardized. Errors are computed on z-scores with the '
        'per-dimension mean and standard deviation of the training '
        'individuals. This default is an inference: published errors for '
        'this protocol are far below the raw units of the measurements.'),
    'raw': (
        'Scale: raw. Forecasts are destandardized with the training '
        'statistics before the errors are computed.')
}


class ReportIOError(OSError):
    """Raised when a report file can not be written.
    """
    pass


class BenchmarkRow(object):
    """The metrics of one (model, K) pair.

    Attributes
    ----------
    model : str
    K : str
        The cluster count, or the pair "(k1, k2)" of a combined model. Empty
        for naive predictors.
    rmse, mae : (d,)-shaped ndarray
        The per-dimension errors. NaN for failed rows.
    rmse_avg, mae_avg : float
        The errors averaged over the dimensions.
    wall_clock_seconds : float
        The fit time. NaN if not recorded.
    error : str | None
        The error message of a failed row.
    """
    def __init__(self, model, K, rmse, mae, rmse_avg, mae_avg,
                 wall_clock_seconds, error=None):
        super().__init__()

        self.model = str(model)
        self.K = '' if K is None else str(K)
        self.rmse = np.atleast_1d(np.asarray(rmse, dtype=np.float64))
        self.mae = np.atleast_1d(np.asarray(mae, dtype=np.float64))
        self.rmse_avg = float(rmse_avg)
        self.mae_avg = float(mae_avg)
        self.wall_clock_seconds = float(wall_clock_seconds)
        self.error = error

        if(error is None):
            # Per-dimension entries may be NaN for dimensions a row does
            # not cover.
            values = np.concatenate(
                (self.rmse, self.mae, [self.rmse_avg, self.mae_avg]))
            values = values[~np.isnan(values)]
            avgs = np.array([self.rmse_avg, self.mae_avg])
            if(not (np.all(np.isfinite(avgs)) and np.all(np.isfinite(values))
                    and np.all(values >= 0))):
                raise ValueError(
                    f'The metrics of the row ({self.model}, {self.K}) must '
                    'be finite and >= 0!')

    @staticmethod
    def failed(model, K, n_dims, error):
        """Creates an error-marked row.
        """
        nan = np.full((n_dims,), np.nan)
        return BenchmarkRow(
            model, K, nan, nan, np.nan, np.nan, np.nan, error=str(error))

    @property
    def is_failed(self):
        return self.error is not None

    def __repr__(self):
        return (f'BenchmarkRow(model={self.model!r}, K={self.K!r}, '
                f'rmse_avg={self.rmse_avg:g}, mae_avg={self.mae_avg:g})')


class AriEntry(object):
    """The agreement of two partitions, averaged over the time points.
    """
    def __init__(self, name, ari_mean, ari_per_timestep=None):
        super().__init__()

        self.name = str(name)
        self.ari_mean = float(ari_mean)
        self.ari_per_timestep = (None if ari_per_timestep is None
                                 else [float(v) for v in ari_per_timestep])


class BenchmarkReport(object):
    """The collected results of one benchmark run.
    """
    def __init__(self, title, scale, dim_names, rows=None, ari_entries=None,
                 curves=None):
        super().__init__()

        if(scale not in SCALE_NOTES):
            raise ValueError(f'Unknown scale "{scale}"!')
        self.title = title
        self.scale = scale
        self.dim_names = list(dim_names)
        self.rows = [] if rows is None else list(rows)
        self.ari_entries = [] if ari_entries is None else list(ari_entries)
        self.curves = dict() if curves is None else dict(curves)

    def metrics_dataframe(self, report_timing=True):
        """Returns the metrics table. Without ``report_timing`` the time column
        stays empty.
        """
        records = []
        for row in self.rows:
            rec = {'model': row.model, 'K': row.K}
            for (j, name) in enumerate(self.dim_names):
                rec[f'rmse_{name}'] = row.rmse[j]
            for (j, name) in enumerate(self.dim_names):
                rec[f'mae_{name}'] = row.mae[j]
            rec['rmse_avg'] = row.rmse_avg
            rec['mae_avg'] = row.mae_avg
            rec['seconds'] = (round(row.wall_clock_seconds, 3)
                              if report_timing else np.nan)
            rec['scale'] = self.scale
            rec['error'] = '' if row.error is None else row.error
            records.append(rec)
        return pd.DataFrame.from_records(records, columns=self._columns())

    def _columns(self):
        return (['model', 'K'] +
                [f'rmse_{n}' for n in self.dim_names] +
                [f'mae_{n}' for n in self.dim_names] +
                ['rmse_avg', 'mae_avg', 'seconds', 'scale', 'error'])

    def ari_dataframe(self):
        return pd.DataFrame.from_records([
            {
                'name': e.name,
                'ari_mean': e.ari_mean,
                'ari_per_timestep': (
                    '' if e.ari_per_timestep is None
                    else ';'.join(repr(v) for v in e.ari_per_timestep))
            }
            for e in self.ari_entries
        ], columns=['name', 'ari_mean', 'ari_per_timestep'])

    def to_markdown(self, report_timing=True):
        """Renders the report as markdown text. The main table has the columns
        model, K, RMSE, MAE and time. Multivariate reports add a table with
        the per-dimension errors.
        """
        lines = [f'# {self.title}', '', SCALE_NOTES[self.scale], '']

        lines += _md_table(
            ['Model', 'K', 'RMSE', 'MAE', 'Time (s)'],
            [[r.model, r.K, _fmt(r.rmse_avg), _fmt(r.mae_avg),
              _fmt(r.wall_clock_seconds, 3) if report_timing else '-']
             for r in self.rows])

        if(len(self.dim_names) > 1):
            header = ['Model', 'K']
            for name in self.dim_names:
                header += [f'RMSE {name}', f'MAE {name}']
            body = []
            for r in self.rows:
                cells = [r.model, r.K]
                for j in range(len(self.dim_names)):
                    cells += [_fmt(r.rmse[j]), _fmt(r.mae[j])]
                body.append(cells)
            lines += ['', '## Errors per dimension', '']
            lines += _md_table(header, body)

        failed = [r for r in self.rows if r.is_failed]
        if(len(failed) > 0):
            lines += ['', '## Failed rows', '']
            lines += [f'- {r.model} K={r.K}: {r.error}' for r in failed]

        if(len(self.ari_entries) > 0):
            lines += ['', '## Partition agreement', '']
            lines += _md_table(
                ['Comparison', 'ARI'],
                [[e.name, _fmt(e.ari_mean)] for e in self.ari_entries])

        return '\n'.join(lines) + '\n'


def _fmt(v, decimals=4):
    if(not np.isfinite(v)):
        return '-'
    return f'{v:.{decimals}f}'


def _md_table(header, body):
    lines = ['| ' + ' | '.join(header) + ' |',
             '|' + '|'.join(['---']*len(header)) + '|']
    for cells in body:
        lines.append('| ' + ' | '.join(str(c) for c in cells) + ' |')
    return lines


def _curve_filename(name):
    safe = ''.join(c if c.isalnum() or c in '-_' else '_' for c in name)
    return f'curves_{safe}.csv'


def emit_report(report, out_dir, formats=('csv', 'markdown'),
                report_timing=True):
    """Writes the report files into ``out_dir``.

    The csv format writes ``metrics.csv``, ``ari.csv`` (if there are ARI
    entries) and one ``curves_<name>.csv`` per prediction curve table. The
    markdown format writes ``report.md``.

    Returns
    -------
    files : list of str
        The written files.

    Raises
    ------
    ConfigInvalidError
        If the report has no rows.
    ReportIOError
        If a file can not be written.
    """
    if(len(report.rows) == 0):
        raise ConfigInvalidError('The report has no rows to emit!')

    files = []
    try:
        os.makedirs(out_dir, exist_ok=True)
        if('csv' in formats):
            path = os.path.join(out_dir, 'metrics.csv')
            report.metrics_dataframe(report_timing).to_csv(path, index=False)
            files.append(path)
            if(len(report.ari_entries) > 0):
                path = os.path.join(out_dir, 'ari.csv')
                report.ari_dataframe().to_csv(path, index=False)
                files.append(path)
            for (name, df) in report.curves.items():
                path = os.path.join(out_dir, _curve_filename(name))
                df.to_csv(path, index=False)
                files.append(path)
        if('markdown' in formats):
            path = os.path.join(out_dir, 'report.md')
            with open(path, 'w') as fp:
                fp.write(report.to_markdown(report_timing))
            files.append(path)
    except OSError as exc:
        raise ReportIOError(
            f'Could not write the report into "{out_dir}": {exc}') from exc

    for path in files:
        logger.info('Wrote report file "%s".', path)
    return files


def read_metrics_csv(pathfilename, dim_names):
    """Reads the rows of a ``metrics.csv`` file.

    Returns
    -------
    rows : list of BenchmarkRow
    """
    df = pd.read_csv(
        pathfilename, dtype={'model': str, 'K': str, 'error': str},
        keep_default_na=False, na_values={
            c: [''] for c in ['rmse_avg', 'mae_avg', 'seconds'] +
            [f'{m}_{n}' for m in ('rmse', 'mae') for n in dim_names]})
    rows = []
    for rec in df.to_dict(orient='records'):
        rows.append(BenchmarkRow(
            rec['model'], rec['K'],
            [rec[f'rmse_{n}'] for n in dim_names],
            [rec[f'mae_{n}'] for n in dim_names],
            rec['rmse_avg'], rec['mae_avg'], rec['seconds'],
            error=(rec['error'] if rec['error'] != '' else None)))
    return rows
