# -*- coding: utf-8 -*-

"""The evaluation protocol. A run loads or generates the data, holds out a
fixed random subset of test individuals, standardizes with the statistics of
the training individuals, fits every requested model for every K on the
training individuals, forecasts the horizon of the test individuals from
their history, and scores the forecasts. The naive predictors are part of
every run.

Each (model, K) pair is one row. Rows are independent jobs with their own seed
derived from the master seed, and may run in parallel. A failing row is
recorded with its error message and does not stop the other rows.
"""

import os.path

import numpy as np
import pandas as pd

from mtsclust.bench.config import (
    ConfigInvalidError,
    NAIVE_NAMES
)
from mtsclust.bench.report import (
    AriEntry,
    BenchmarkReport,
    BenchmarkRow
)
from mtsclust.core.baselines import naive_forecast
from mtsclust.core.debugging import get_logger
from mtsclust.core.forecast import (
    ClusterTrajectory,
    argmax_labels
)
from mtsclust.core.metrics import (
    ari,
    mean_ari_over_time,
    per_dimension_errors,
    product_trajectories
)
from mtsclust.core.multiproc import parallelize
from mtsclust.core.random import (
    RandomStateService,
    derive_seed
)
from mtsclust.core.storage import read_csv_dataset
from mtsclust.core.timeseries import (
    SplitTooLongError,
    StandardizationParams,
    ZeroVarianceError,
    destandardize_array,
    fit_standardizer,
    select_test_individuals,
    split_history_horizon,
    standardize
)
from mtsclust.core.timing import TaskTimer
from mtsclust.models import (
    dgm2,
    magmaclust
)


logger = get_logger(__name__)


def load_dataset(config):
    """Loads or generates the data set of a run.

    Returns
    -------
    data : TimeSeriesSet
    individual_ids : list of str
    dim_names : list of str
    truth : ndarray | list of ClusterTrajectory | None
        The ground truth of synthetic data.

    Raises
    ------
    DataLoadError
        If the data file can not be loaded.
    """
    if(config.dataset == 'synth'):
        (data, truth, dim_names) = config.synth.generate()
        ids = [str(i) for i in range(data.n_individuals)]
        return (data, ids, dim_names, truth)
    (data, ids, dim_names) = read_csv_dataset(config.dataset)
    return (data, ids, dim_names, None)


def _dataset_title(config):
    if(config.dataset == 'synth'):
        return f'synthetic {config.synth.kind} data'
    return os.path.basename(config.dataset)


def _fit_standardizer(train):
    """Fits the standardization of the training individuals. Dimensions
    with constant values keep their mean and get a unit scale.
    """
    try:
        return fit_standardizer(train)
    except ZeroVarianceError as exc:
        logger.warning('%s Using a unit scale for such dimensions.', exc)
    mean = np.empty((train.n_dims,))
    std = np.ones((train.n_dims,))
    for j in range(train.n_dims):
        x = train.values[:, j][train.mask[:, j]]
        mean[j] = np.mean(x)
        if(len(x) > 1 and np.any(x != x[0])):
            std[j] = np.std(x, ddof=1)
    return StandardizationParams(mean, std)


class PreparedData(object):
    """The standardized training and test data of a run.
    """
    def __init__(self, config, data, individual_ids, dim_names, truth):
        super().__init__()

        try:
            config.split.check(data.n_times)
        except SplitTooLongError as exc:
            raise ConfigInvalidError(str(exc)) from exc
        data = data.restrict_time(0, config.split.total_len)

        rss = RandomStateService(config.seed)
        (test_idxs, train_idxs) = select_test_individuals(
            data.n_individuals, config.test_fraction, config.test_max,
            rss.spawn(0))
        if(len(test_idxs) == 0 or len(train_idxs) == 0):
            raise ConfigInvalidError(
                'A run needs at least one training and one test individual!')

        self.params = _fit_standardizer(data.subset(train_idxs))
        stdz = standardize(data, self.params)

        self.train = stdz.subset(train_idxs)
        self.test_full = stdz.subset(test_idxs)
        (self.test_history, self.test_future) = split_history_horizon(
            self.test_full, config.split)
        self.horizon_grid = self.test_future.grid
        self.test_idxs = test_idxs
        self.train_idxs = train_idxs
        self.test_ids = [individual_ids[i] for i in test_idxs]
        self.dim_names = list(dim_names)
        self.scale = config.scale

        self.truth = None
        if(truth is not None):
            if(hasattr(truth[0], 'labels')):
                T = config.split.total_len
                self.truth = [
                    ClusterTrajectory(truth[i].probs[:T], truth[i].labels[:T])
                    for i in test_idxs]
            else:
                self.truth = np.asarray(truth)[test_idxs]

        logger.info(
            'Prepared data: %d training and %d test individuals, %d '
            'dimensions, history %d, horizon %d.', len(train_idxs),
            len(test_idxs), data.n_dims, config.split.history_len,
            config.split.horizon_len)

    @property
    def truth_is_static(self):
        return self.truth is not None and isinstance(self.truth, np.ndarray)

    def to_report_scale(self, arr, dims=None):
        """Maps an (M, len(dims), H)-shaped standardized array to the
        reporting scale. None means all dimensions.
        """
        if(self.scale != 'raw'):
            return np.asarray(arr)
        if(dims is None):
            return destandardize_array(arr, self.params)
        return destandardize_array(arr, StandardizationParams(
            self.params.mean[dims], self.params.std[dims]))

    def truth_values(self, dims=None):
        """The held-out horizon values of the test individuals on the
        reporting scale.
        """
        values = self.test_future.values
        if(dims is not None):
            values = values[:, dims]
        return self.to_report_scale(values, dims)


def _fit_forecast(job, prep, settings, tl=None):
    """Fits one model on the training individuals and forecasts the horizon
    of the test individuals.

    Returns
    -------
    outcome : dict
        The keys mean, lower, upper, seconds, memberships and trajectories.
    """
    model = job['model']
    dims = job['dims']
    train = prep.train.select_dims(dims)
    history = prep.test_history.select_dims(dims)
    grid = prep.horizon_grid
    (M, H) = (history.n_individuals, len(grid))

    outcome = {'seconds': 0., 'memberships': None, 'trajectories': None}

    if(model in NAIVE_NAMES):
        res = naive_forecast(model, history, grid)
        outcome.update(mean=res.mean, lower=res.lower, upper=res.upper)
        return outcome

    if(model == 'MagmaClust'):
        d = len(dims)
        (mean, lower, upper) = (
            np.empty((M, d, H)), np.empty((M, d, H)), np.empty((M, d, H)))
        memberships = []
        for j in range(d):
            config = magmaclust.VemConfig(seed=job['seed'], **settings['vem'])
            with TaskTimer(tl, 'MagmaClust fit') as tt:
                (fitted, _) = magmaclust.vem_fit(
                    train.select_dims([j]), job['K'], config)
            outcome['seconds'] += tt.duration
            res = magmaclust.predict(fitted, history.select_dims([j]), grid)
            mean[:, j] = res.mean[:, 0]
            lower[:, j] = res.lower[:, 0]
            upper[:, j] = res.upper[:, 0]
            memberships.append(res.memberships)
        outcome.update(
            mean=mean, lower=lower, upper=upper, memberships=memberships)
        return outcome

    if(model == 'DGM2'):
        config = dgm2.DGM2Config(seed=job['seed'], **settings['dgm2'])
        with TaskTimer(tl, 'DGM2 fit') as tt:
            (fitted, _) = dgm2.train(train, job['K'], config)
        outcome['seconds'] = tt.duration
        res = dgm2.forecast(
            fitted, history, H, mode=settings['forecast_mode'],
            rss=job['seed'], grid=grid)
        outcome.update(
            mean=res.mean, lower=res.lower, upper=res.upper,
            trajectories=dgm2.batch_cluster_trajectories(
                fitted, prep.test_full.select_dims(dims)))
        return outcome

    raise ValueError(f'Unknown model "{model}"!')


def _run_job(job, prep, settings):
    """Runs one job and turns any failure into an error outcome.
    """
    try:
        return _fit_forecast(job, prep, settings)
    except Exception as exc:
        logger.error(
            'The row (%s, K=%s) failed: %s: %s', job['model'], job['K'],
            type(exc).__name__, exc)
        return {'error': f'{type(exc).__name__}: {exc}'}


def _run_jobs(jobs, prep, config):
    settings = {
        'vem': config.vem_settings(),
        'dgm2': config.dgm2_settings(),
        'forecast_mode': config.forecast_mode
    }
    args_list = [((job, prep, settings), {}) for job in jobs]
    return parallelize(_run_job, args_list, config.ncpu)


def _make_jobs(specs, seed):
    """Creates the jobs of the (model, K, dims) specs with their derived
    seeds. The seed index 0 is taken by the test split.
    """
    return [
        {'model': model, 'K': K, 'dims': dims,
         'seed': derive_seed(seed, idx+1)}
        for (idx, (model, K, dims)) in enumerate(specs)
    ]


def _score(prep, mean, dims):
    """Computes the per-dimension errors of a forecast of the given
    dimensions, placed into arrays over all dimensions of the data.
    """
    d = len(prep.dim_names)
    truth = prep.truth_values(dims)
    pred = prep.to_report_scale(mean, dims)
    (rmse_d, mae_d, rmse_avg, mae_avg) = per_dimension_errors(pred, truth)
    rmse = np.full((d,), np.nan)
    mae = np.full((d,), np.nan)
    rmse[dims] = rmse_d
    mae[dims] = mae_d
    return (rmse, mae, rmse_avg, mae_avg)


def _row(prep, label, K, dims, outcome):
    if('error' in outcome):
        return BenchmarkRow.failed(
            label, K, len(prep.dim_names), outcome['error'])
    try:
        (rmse, mae, rmse_avg, mae_avg) = _score(prep, outcome['mean'], dims)
    except Exception as exc:
        logger.error('Scoring the row (%s, K=%s) failed: %s', label, K, exc)
        return BenchmarkRow.failed(
            label, K, len(prep.dim_names), f'{type(exc).__name__}: {exc}')
    return BenchmarkRow(
        label, K, rmse, mae, rmse_avg, mae_avg, outcome['seconds'])


def _curves_dataframe(prep, outcome):
    """Creates the long-format table of the predictive mean and 95% band of
    every test individual, together with the held-out truth.
    """
    mean = prep.to_report_scale(outcome['mean'])
    lower = prep.to_report_scale(outcome['lower'])
    upper = prep.to_report_scale(outcome['upper'])
    truth = prep.truth_values()
    (M, d, H) = mean.shape
    (i_idx, j_idx, t_idx) = np.meshgrid(
        np.arange(M), np.arange(d), np.arange(H), indexing='ij')
    (i_idx, j_idx, t_idx) = (i_idx.ravel(), j_idx.ravel(), t_idx.ravel())
    return pd.DataFrame({
        'individual_id': np.asarray(prep.test_ids, dtype=object)[i_idx],
        'dim_name': np.asarray(prep.dim_names, dtype=object)[j_idx],
        'time_index': prep.horizon_grid.points[t_idx],
        'mean': mean.ravel(),
        'lower': lower.ravel(),
        'upper': upper.ravel(),
        'truth': truth.ravel()
    })


def _truth_ari(prep, label, K, outcome):
    """Compares the clusters found by a model with the ground truth of
    synthetic data. Returns None if there is nothing to compare.
    """
    if(prep.truth is None or 'error' in outcome):
        return None
    try:
        if(prep.truth_is_static and outcome['memberships'] is not None and
           len(outcome['memberships']) == 1):
            labels = argmax_labels(outcome['memberships'][0])
            return AriEntry(
                f'{label} K={K} vs ground truth', ari(prep.truth, labels))
        if(not prep.truth_is_static and
           outcome['trajectories'] is not None):
            (per_t, mean) = mean_ari_over_time(
                outcome['trajectories'], prep.truth)
            return AriEntry(
                f'{label} K={K} vs ground truth (per time point)', mean, per_t)
    except ValueError as exc:
        logger.warning(
            'No ARI against the ground truth for (%s, K=%s): %s', label, K,
            exc)
    return None


def run_experiment(config):
    """Runs the evaluation protocol for every configured model and K, plus the
    naive predictors.

    Parameters
    ----------
    config : ExperimentConfig

    Returns
    -------
    report : BenchmarkReport

    Raises
    ------
    ConfigInvalidError
        If the configuration does not fit the data.
    DataLoadError
        If the data can not be loaded.
    """
    (data, ids, dim_names, truth) = load_dataset(config)
    prep = PreparedData(config, data, ids, dim_names, truth)
    all_dims = list(range(data.n_dims))

    specs = [(name, None, all_dims) for name in config.naive_models]
    for model in config.fit_models:
        specs += [(model, K, all_dims) for K in config.k_list]
    jobs = _make_jobs(specs, config.seed)
    outcomes = _run_jobs(jobs, prep, config)

    report = BenchmarkReport(
        f'Benchmark on {_dataset_title(config)}', config.scale, dim_names)
    for (job, outcome) in zip(jobs, outcomes):
        report.rows.append(
            _row(prep, job['model'], job['K'], job['dims'], outcome))
        if(job['model'] == 'MagmaClust' and 'error' not in outcome):
            report.curves[f'MagmaClust_K{job["K"]}'] = _curves_dataframe(
                prep, outcome)
        entry = _truth_ari(prep, job['model'], job['K'], outcome)
        if(entry is not None):
            report.ari_entries.append(entry)

    return report


def run_multivariate_comparison(config):
    """Compares a multivariate DGM2 model with k clusters against two
    univariate DGM2 models with k1 and k2 clusters, k = k1 * k2, for every
    configured pair (k1, k2).

    The report holds the naive rows, the multivariate row, the combined
    univariate row and the two univariate component rows of every pair, and
    the ARI between the multivariate per-timestep partition and the product
    partition of the univariate ones.

    Raises
    ------
    ConfigInvalidError
        If the data is not bivariate or no pairs are configured.
    DataLoadError
        If the data can not be loaded.
    """
    if(len(config.k_pairs) == 0):
        raise ConfigInvalidError(
            'The multivariate comparison needs at least one k_pairs entry!')

    (data, ids, dim_names, truth) = load_dataset(config)
    if(data.n_dims != 2):
        raise ConfigInvalidError(
            'The multivariate comparison needs a data set with 2 dimensions! '
            f'Got {data.n_dims}.')
    prep = PreparedData(config, data, ids, dim_names, truth)

    specs = [(name, None, [0, 1]) for name in config.naive_models]
    for (k1, k2) in config.k_pairs:
        specs += [('DGM2', k1*k2, [0, 1]), ('DGM2', k1, [0]),
                  ('DGM2', k2, [1])]
    jobs = _make_jobs(specs, config.seed)
    outcomes = _run_jobs(jobs, prep, config)

    report = BenchmarkReport(
        f'Multivariate versus combined univariate DGM2 on '
        f'{_dataset_title(config)}', config.scale, dim_names)

    n_naive = len(config.naive_models)
    for (job, outcome) in zip(jobs[:n_naive], outcomes[:n_naive]):
        report.rows.append(
            _row(prep, job['model'], None, job['dims'], outcome))

    for (p, (k1, k2)) in enumerate(config.k_pairs):
        (o_multi, o_a, o_b) = outcomes[n_naive+3*p:n_naive+3*p+3]
        k = k1*k2
        report.rows.append(_row(prep, 'DGM2 multivariate', k, [0, 1], o_multi))

        failed = [o for o in (o_a, o_b) if 'error' in o]
        if(len(failed) > 0):
            combined = {'error': failed[0]['error']}
        else:
            combined = {
                'mean': np.concatenate((o_a['mean'], o_b['mean']), axis=1),
                'seconds': o_a['seconds'] + o_b['seconds']
            }
        report.rows.append(_row(
            prep, 'DGM2 univariate combined', f'({k1}, {k2})', [0, 1],
            combined))
        report.rows.append(
            _row(prep, f'DGM2 univariate {dim_names[0]}', k1, [0], o_a))
        report.rows.append(
            _row(prep, f'DGM2 univariate {dim_names[1]}', k2, [1], o_b))

        if('error' in o_multi or len(failed) > 0):
            continue
        try:
            product = product_trajectories(
                o_a['trajectories'], o_b['trajectories'], k2)
            (per_t, mean) = mean_ari_over_time(o_multi['trajectories'], product)
            report.ari_entries.append(AriEntry(
                f'DGM2 multivariate K={k} vs univariate combined '
                f'({k1}, {k2})', mean, per_t))
        except ValueError as exc:
            logger.warning(
                'No ARI for the pair (%d, %d): %s', k1, k2, exc)
            continue
        if(prep.truth is not None and not prep.truth_is_static):
            for (name, trajs) in (('multivariate', o_multi['trajectories']),
                                  ('univariate combined', product)):
                try:
                    (per_t, mean) = mean_ari_over_time(trajs, prep.truth)
                except ValueError:
                    continue
                report.ari_entries.append(AriEntry(
                    f'DGM2 {name} ({k1}, {k2}) vs ground truth', mean, per_t))

    return report
