# -*- coding: utf-8 -*-

"""The configuration of benchmark runs and of synthetic data sets.

Both are YAML key-value files. Keys may be given nested or as flat dotted
keys, i.e. ``split: {history: 10}`` and ``split.history: 10`` are the same.

Experiment keys:

    dataset         path of a long-format data file, or ``synth``
    synth.*         the generator settings when ``dataset`` is ``synth``
    split.history   number of history time points
    split.horizon   number of forecast time points
    models          list out of MagmaClust, DGM2, LastValue, Mean, Median
    k_list          list of cluster counts
    k_pairs         list of (k1, k2) pairs of the multivariate comparison
    seed            master seed of the run (default 0)
    gamma, epochs, hidden_dim, learning_rate, batch_size, forecast_mode
                    DGM2 settings
    vem_max_iter, vem_tol, minimizer
                    MagmaClust settings
    test_fraction, test_max, scale, ncpu
    out_dir         report directory (default ``bench_out``)
    formats         list out of csv, markdown
    report_timing   if true, the fit times are written (default false)

Synthetic data keys (the ``synth.`` prefix inside an experiment file):

    kind            ``dgm2`` or ``magma``
    M, K, T, seed   sizes and seed
    d, separation_sd, emission_var, rho, gamma, independent_dims
                    dynamic mixture settings
    variance, lengthscale, indiv_variance, indiv_lengthscale, noise_var,
    mean_offsets    mixture of Gaussian processes settings
    dim_names       optional dimension names
    out_dir         output directory of ``bench synth``

Relative paths are taken relative to the directory of the config file.
"""

import os.path

from mtsclust.core.config import (
    CFG,
    YAML_LOADED
)
from mtsclust.core.debugging import get_logger
from mtsclust.core.gp import Kernel
from mtsclust.core.metrics import product_trajectories
from mtsclust.core.py import (
    bool_cast,
    float_cast,
    int_cast,
    issequence,
    positive_int_cast
)
from mtsclust.core.random import derive_seed
from mtsclust.core.synthgen import (
    Dgm2SynthSpec,
    MagmaSynthSpec,
    generate_dgm2_data,
    generate_independent_dims,
    generate_magma_data
)
from mtsclust.core.timeseries import (
    SplitSpec,
    check_dim_names
)

if(YAML_LOADED):
    import yaml


logger = get_logger(__name__)


class ConfigInvalidError(ValueError):
    """Raised when a configuration is incomplete or inconsistent.
    """
    pass


MODEL_NAMES = ('MagmaClust', 'DGM2')
NAIVE_NAMES = ('LastValue', 'Mean', 'Median')
_ALL_NAMES = {n.lower(): n for n in MODEL_NAMES + NAIVE_NAMES}

REPORT_FORMATS = ('csv', 'markdown')


def flatten_dict(d, prefix=''):
    """Flattens nested dictionaries into one dictionary with dotted keys.
    """
    flat = dict()
    for (key, value) in d.items():
        name = f'{prefix}{key}'
        if(isinstance(value, dict)):
            flat.update(flatten_dict(value, f'{name}.'))
        else:
            flat[name] = value
    return flat


def load_yaml_file(pathfilename):
    """Reads a YAML file into a dictionary.

    Raises
    ------
    ConfigInvalidError
        If the file can not be read or does not hold a mapping.
    """
    if(not YAML_LOADED):
        raise ImportError(
            'Could not import the yaml package. Thus can not read the config '
            f'file {pathfilename}')
    try:
        with open(pathfilename) as fp:
            d = yaml.load(fp, Loader=yaml.SafeLoader)
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigInvalidError(
            f'Could not read the config file "{pathfilename}": {exc}') from exc
    if(d is None):
        d = dict()
    if(not isinstance(d, dict)):
        raise ConfigInvalidError(
            f'The config file "{pathfilename}" must hold a key-value mapping!')
    return d


class _KeyReader(object):
    """Reads and casts the values of a flat configuration dictionary,
    turning cast failures into ConfigInvalidError. Keys that are never read
    are reported as unknown.
    """
    def __init__(self, flat, prefix=''):
        super().__init__()

        self._flat = flat
        self._prefix = prefix
        self._used = set()

    def has(self, key):
        return (self._prefix + key) in self._flat

    def get(self, key, default=None, cast=None):
        name = self._prefix + key
        self._used.add(name)
        if(name not in self._flat or self._flat[name] is None):
            return default
        value = self._flat[name]
        if(cast is None):
            return value
        try:
            return cast(value)
        except (TypeError, ValueError) as exc:
            raise ConfigInvalidError(
                f'Invalid value {value!r} of the config key "{name}": '
                f'{exc}') from exc

    def require(self, key, cast=None):
        if(not self.has(key) or self._flat[self._prefix + key] is None):
            raise ConfigInvalidError(
                f'The config key "{self._prefix + key}" is required!')
        return self.get(key, cast=cast)

    def check_unknown(self, ignore_prefixes=()):
        unknown = sorted(
            k for k in self._flat
            if k.startswith(self._prefix) and k not in self._used and
            not any(k.startswith(p) for p in ignore_prefixes))
        if(len(unknown) > 0):
            raise ConfigInvalidError(
                f'Unknown config keys: {", ".join(unknown)}!')


def _positive_int(v):
    return positive_int_cast(v, 'must be an int >= 1')


def _int(v):
    return int_cast(v, 'must be an int')


def _float(v):
    return float_cast(v, 'must be a float')


def _bool(v):
    return bool_cast(v, 'must be a bool')


def _resolve_path(path, base_dir):
    path = os.path.expanduser(str(path))
    if(base_dir is None or os.path.isabs(path)):
        return path
    return os.path.join(base_dir, path)


class SynthConfig(object):
    """The settings of a synthetic data set.
    """
    def __init__(self, kind, M, K, T, seed=0, d=1, separation_sd=4.,
                 emission_var=1., rho=0.9, gamma=0.1, independent_dims=False,
                 variance=1., lengthscale=None, indiv_variance=0.25,
                 indiv_lengthscale=2., noise_var=0.05, mean_offsets=None,
                 dim_names=None, out_dir=None):
        super().__init__()

        if(kind not in ('dgm2', 'magma')):
            raise ConfigInvalidError(
                f'The synthetic data kind must be "dgm2" or "magma"! Got '
                f'"{kind}".')
        self.kind = kind
        self.M = M
        self.K = K
        self.T = T
        self.seed = seed
        self.d = d
        self.separation_sd = separation_sd
        self.emission_var = emission_var
        self.rho = rho
        self.gamma = gamma
        self.independent_dims = independent_dims
        self.variance = variance
        self.lengthscale = max(1., T/4.) if lengthscale is None \
            else lengthscale
        self.indiv_variance = indiv_variance
        self.indiv_lengthscale = indiv_lengthscale
        self.noise_var = noise_var
        self.mean_offsets = mean_offsets
        self.out_dir = out_dir

        n_dims = 1 if kind == 'magma' else d
        try:
            self.dim_names = check_dim_names(dim_names, n_dims)
        except ValueError as exc:
            raise ConfigInvalidError(str(exc)) from exc

    @staticmethod
    def from_dict(d, base_dir=None, prefix=''):
        """Creates a SynthConfig from a flat or nested dictionary.
        """
        r = _KeyReader(flatten_dict(d), prefix)
        kwargs = dict(
            kind=r.require('kind', cast=lambda v: str(v).lower()),
            M=r.require('M', cast=_positive_int),
            K=r.require('K', cast=_positive_int),
            T=r.require('T', cast=_positive_int),
            seed=r.get('seed', 0, cast=_int),
            d=r.get('d', 1, cast=_positive_int),
            separation_sd=r.get('separation_sd', 4., cast=_float),
            emission_var=r.get('emission_var', 1., cast=_float),
            rho=r.get('rho', 0.9, cast=_float),
            gamma=r.get('gamma', 0.1, cast=_float),
            independent_dims=r.get('independent_dims', False, cast=_bool),
            variance=r.get('variance', 1., cast=_float),
            lengthscale=r.get('lengthscale', cast=_float),
            indiv_variance=r.get('indiv_variance', 0.25, cast=_float),
            indiv_lengthscale=r.get('indiv_lengthscale', 2., cast=_float),
            noise_var=r.get('noise_var', 0.05, cast=_float),
            mean_offsets=r.get('mean_offsets'),
            dim_names=r.get('dim_names'))
        out_dir = r.get('out_dir')
        if(out_dir is not None):
            out_dir = _resolve_path(out_dir, base_dir)
        r.check_unknown()
        return SynthConfig(out_dir=out_dir, **kwargs)

    @staticmethod
    def from_file(pathfilename):
        return SynthConfig.from_dict(
            load_yaml_file(pathfilename),
            base_dir=os.path.dirname(os.path.abspath(pathfilename)))

    def generate(self):
        """Generates the data set.

        Returns
        -------
        data : TimeSeriesSet
        truth : (M,)-shaped int ndarray | list of ClusterTrajectory
            The static labels (magma) or the per-timestep trajectories (dgm2).
            The trajectories of independent dimensions are combined into the
            product partition.
        dim_names : list of str
        """
        try:
            if(self.kind == 'magma'):
                return self._generate_magma()
            return self._generate_dgm2()
        except (TypeError, ValueError) as exc:
            raise ConfigInvalidError(
                f'Invalid synthetic data settings: {exc}') from exc

    def _generate_magma(self):
        spec = MagmaSynthSpec(
            self.M, self.K, self.T,
            mean_kernel=Kernel(self.variance, self.lengthscale),
            indiv_kernel=(Kernel(self.indiv_variance, self.indiv_lengthscale)
                          if self.indiv_variance > 0 else None),
            noise_var=self.noise_var,
            seed=self.seed,
            mean_offsets=self.mean_offsets)
        (data, labels) = generate_magma_data(spec)
        return (data, labels, self.dim_names)

    def _generate_dgm2(self):
        if(self.independent_dims and self.d > 1):
            specs = [
                Dgm2SynthSpec.from_separation(
                    self.M, self.K, self.T, d=1,
                    separation_sd=self.separation_sd,
                    emission_var=self.emission_var, rho=self.rho,
                    gamma=self.gamma, seed=derive_seed(self.seed, j))
                for j in range(self.d)
            ]
            (data, per_dim) = generate_independent_dims(specs)
            truth = per_dim[0]
            for j in range(1, self.d):
                truth = product_trajectories(truth, per_dim[j], self.K)
            return (data, truth, self.dim_names)

        spec = Dgm2SynthSpec.from_separation(
            self.M, self.K, self.T, d=self.d,
            separation_sd=self.separation_sd, emission_var=self.emission_var,
            rho=self.rho, gamma=self.gamma, seed=self.seed)
        (data, trajectories) = generate_dgm2_data(spec)
        return (data, trajectories, self.dim_names)


class ExperimentConfig(object):
    """The settings of one benchmark run.
    """
    def __init__(self, dataset, split, models, k_list, seed=0, synth=None,
                 k_pairs=None, gamma=None, epochs=None, hidden_dim=None,
                 learning_rate=None, batch_size=None, forecast_mode='soft',
                 vem_max_iter=None, vem_tol=None, minimizer=None,
                 test_fraction=None, test_max=None, scale=None, ncpu=None,
                 out_dir='bench_out', formats=REPORT_FORMATS,
                 report_timing=False):
        super().__init__()

        bench = CFG['bench']

        self.dataset = dataset
        self.synth = synth
        if(dataset == 'synth' and synth is None):
            raise ConfigInvalidError(
                'The dataset "synth" requires the synth settings!')

        if(not isinstance(split, SplitSpec)):
            raise ConfigInvalidError('The split must be a SplitSpec!')
        self.split = split

        self.models = self._check_models(models)
        self.k_list = self._check_k_list(k_list)
        self.k_pairs = self._check_k_pairs([] if k_pairs is None else k_pairs)

        self.seed = seed
        self.gamma = gamma
        self.epochs = epochs
        self.hidden_dim = hidden_dim
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        if(forecast_mode not in ('soft', 'sample')):
            raise ConfigInvalidError(
                'The forecast_mode must be "soft" or "sample"!')
        self.forecast_mode = forecast_mode
        self.vem_max_iter = vem_max_iter
        self.vem_tol = vem_tol
        self.minimizer = minimizer

        self.test_fraction = (bench['test_fraction'] if test_fraction is None
                              else test_fraction)
        if(not (0 < self.test_fraction < 1)):
            raise ConfigInvalidError(
                'The test_fraction must lie within (0, 1)!')
        self.test_max = bench['test_max'] if test_max is None else test_max
        self.scale = bench['scale'] if scale is None else scale
        if(self.scale not in ('standardized', 'raw')):
            raise ConfigInvalidError(
                'The scale must be "standardized" or "raw"!')
        self.ncpu = ncpu
        self.out_dir = out_dir
        formats = [str(f).lower() for f in formats]
        if(len(formats) == 0 or
           any(f not in REPORT_FORMATS for f in formats)):
            raise ConfigInvalidError(
                f'The formats must be a non-empty subset of {REPORT_FORMATS}!')
        self.formats = formats
        self.report_timing = report_timing

    @staticmethod
    def _check_models(models):
        if(isinstance(models, str)):
            models = [models]
        if(not issequence(models) or len(models) == 0):
            raise ConfigInvalidError('At least one model must be configured!')
        checked = []
        for name in models:
            key = str(name).lower()
            if(key not in _ALL_NAMES):
                raise ConfigInvalidError(
                    f'Unknown model "{name}"! Known models are '
                    f'{", ".join(_ALL_NAMES.values())}.')
            if(_ALL_NAMES[key] not in checked):
                checked.append(_ALL_NAMES[key])
        return checked

    @staticmethod
    def _check_k_list(k_list):
        if(not issequence(k_list)):
            k_list = [k_list]
        if(len(k_list) == 0):
            raise ConfigInvalidError('The k_list must not be empty!')
        try:
            return [_positive_int(k) for k in k_list]
        except (TypeError, ValueError) as exc:
            raise ConfigInvalidError(
                f'The k_list entries must be ints >= 1: {exc}') from exc

    @staticmethod
    def _check_k_pairs(k_pairs):
        pairs = []
        for pair in k_pairs:
            if(not issequence(pair) or len(pair) != 2):
                raise ConfigInvalidError(
                    f'The k_pairs entry {pair!r} must be a pair (k1, k2)!')
            try:
                pairs.append((_positive_int(pair[0]), _positive_int(pair[1])))
            except (TypeError, ValueError) as exc:
                raise ConfigInvalidError(
                    f'The k_pairs entries must be ints >= 1: {exc}') from exc
        return pairs

    @property
    def fit_models(self):
        """The configured models that are fitted, i.e. not naive.
        """
        return [m for m in self.models if m in MODEL_NAMES]

    @property
    def naive_models(self):
        """The naive predictors of the run. They are always part of a run.
        """
        return list(NAIVE_NAMES)

    @staticmethod
    def from_dict(d, base_dir=None):
        """Creates an ExperimentConfig from a flat or nested dictionary.

        Raises
        ------
        ConfigInvalidError
            If required keys are missing, a key is unknown or a value is
            invalid.
        """
        if(not isinstance(d, dict)):
            raise ConfigInvalidError('The config must be a key-value mapping!')
        flat = flatten_dict(d)
        r = _KeyReader(flat)

        dataset = r.require('dataset', cast=str)
        synth = None
        if(dataset == 'synth'):
            synth_d = {k[len('synth.'):]: v for (k, v) in flat.items()
                       if k.startswith('synth.')}
            if(len(synth_d) == 0):
                raise ConfigInvalidError(
                    'The dataset "synth" requires synth.* settings!')
            synth = SynthConfig.from_dict(synth_d, base_dir=base_dir)
        else:
            dataset = _resolve_path(dataset, base_dir)

        try:
            split = SplitSpec(
                r.require('split.history', cast=_positive_int),
                r.require('split.horizon', cast=_positive_int))
        except (TypeError, ValueError) as exc:
            raise ConfigInvalidError(f'Invalid split: {exc}') from exc

        formats = r.get('formats', list(REPORT_FORMATS))
        if(isinstance(formats, str)):
            formats = [formats]

        config = ExperimentConfig(
            dataset=dataset,
            synth=synth,
            split=split,
            models=r.require('models'),
            k_list=r.require('k_list'),
            k_pairs=r.get('k_pairs'),
            seed=r.get('seed', 0, cast=_int),
            gamma=r.get('gamma', cast=_float),
            epochs=r.get('epochs', cast=_positive_int),
            hidden_dim=r.get('hidden_dim', cast=_positive_int),
            learning_rate=r.get('learning_rate', cast=_float),
            batch_size=r.get('batch_size', cast=_positive_int),
            forecast_mode=r.get('forecast_mode', 'soft', cast=str),
            vem_max_iter=r.get('vem_max_iter', cast=_positive_int),
            vem_tol=r.get('vem_tol', cast=_float),
            minimizer=r.get('minimizer', cast=str),
            test_fraction=r.get('test_fraction', cast=_float),
            test_max=r.get('test_max', cast=_positive_int),
            scale=r.get('scale', cast=str),
            ncpu=r.get('ncpu', cast=_positive_int),
            out_dir=_resolve_path(r.get('out_dir', 'bench_out'), base_dir),
            formats=formats,
            report_timing=r.get('report_timing', False, cast=_bool))
        r.check_unknown(ignore_prefixes=('synth.',))
        return config

    @staticmethod
    def from_file(pathfilename):
        """Reads an ExperimentConfig from a YAML file.
        """
        return ExperimentConfig.from_dict(
            load_yaml_file(pathfilename),
            base_dir=os.path.dirname(os.path.abspath(pathfilename)))

    def dgm2_settings(self):
        """Returns the keyword arguments of DGM2Config.
        """
        return dict(
            gamma=self.gamma, n_epochs=self.epochs, hidden_dim=self.hidden_dim,
            readout_dim=self.hidden_dim, learning_rate=self.learning_rate,
            batch_size=self.batch_size)

    def vem_settings(self):
        """Returns the keyword arguments of VemConfig.
        """
        return dict(
            max_iter=self.vem_max_iter, tol=self.vem_tol,
            minimizer=self.minimizer)

    def __repr__(self):
        return (f'ExperimentConfig(dataset={self.dataset!r}, '
                f'split={self.split!r}, models={self.models}, '
                f'k_list={self.k_list}, seed={self.seed})')

