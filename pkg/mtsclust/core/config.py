# -*- coding: utf-8 -*-

"""This file contains the global configuration dictionary, together with some
convenience utility functions to change configuration settings.
"""

import copy
from typing import Any, Dict

# Try to load the yaml package.
YAML_LOADED = True
try:
    import yaml
except ImportError:
    YAML_LOADED = False


_BASECONFIG = {
    'multiproc': {
        # The number of CPUs to use for functions that allow multi-processing.
        # If this setting is set to an int value in the range [1, N] this
        # setting will be used if a function's local ncpu setting is not
        # specified.
        'ncpu': None
    },
    'debugging': {
        # The default log format.
        'log_format': (
            '%(asctime)s %(processName)s %(name)s %(levelname)s: '
            '%(message)s'),
        # Flag if detailed per-iteration debug log messages, i.e. trace log
        # messages, should get generated.
        'enable_tracing': False
    },
    'project': {
        # The project's working directory.
        'working_directory': '.'
    },
    'gp': {
        # Initial diagonal jitter, relative to the kernel variance.
        'jitter_factor': 1e-6,
        # Largest jitter tried before giving up on a Cholesky factorization.
        'jitter_max_factor': 1e-2,
        'jitter_growth': 10.
    },
    'vem': {
        # Relative ELBO change below which the VEM loop stops.
        'tol': 1e-4,
        'max_iter': 50,
        # Number of minimizer iterations per hyper-parameter M-step.
        'n_mstep_iter': 30,
        # One of 'lbfgs' or 'iminuit'.
        'minimizer': 'lbfgs',
        # Total responsibility mass below which a cluster is re-seeded.
        'degenerate_mass': 1e-8,
        # Bounds of the log-space kernel hyper-parameters.
        'log_bounds': (-10., 10.)
    },
    'dgm2': {
        'hidden_dim': 16,
        'readout_dim': 16,
        'gamma': 0.5,
        'learning_rate': 1e-2,
        'batch_size': 32,
        'n_epochs': 200,
        # Network weights are drawn uniformly from [-init_scale, init_scale].
        'init_scale': 0.1,
        # Upper limit on the number of component paths the soft forecast
        # follows per individual. Less probable paths are pruned beyond it.
        'forecast_max_branches': 4096
    },
    'bench': {
        # Fraction of individuals held out as the test set.
        'test_fraction': 0.3,
        # Optional upper limit on the number of test individuals.
        'test_max': None,
        # Either 'standardized' or 'raw'.
        'scale': 'standardized'
    }
}


def _deep_update(target, source):
    """Recursively updates the dictionary ``target`` with the items of
    ``source``. Nested dictionaries are merged instead of replaced.
    """
    for (key, value) in source.items():
        if(isinstance(value, dict) and isinstance(target.get(key), dict)):
            _deep_update(target[key], value)
        else:
            target[key] = value


class CFGClass(dict):
    """This class holds the global config state.

    The class behaves like a dict, delegating all methods of the dict
    interface to the underlying config dictionary.
    """

    # Keep track of whether this class has been instantiated.
    _is_instantiated = False

    def __init__(self, *args, **kwargs) -> None:
        if CFGClass._is_instantiated:
            raise RuntimeError("Can only instantiate CFGClass once")

        super().__init__(*args, **kwargs)
        CFGClass._is_instantiated = True

    def from_yaml(self, yaml_file: str) -> None:
        """Updates the config with the settings of a yaml file.

        Parameters
        ----------
        yaml_file : str
            Path to the yaml file.
        """
        if(not YAML_LOADED):
            raise ImportError(
                'Could not import the yaml package. Thus can not import the '
                f'config from yaml file {yaml_file}')

        with open(yaml_file) as fp:
            yaml_config = yaml.load(fp, Loader=yaml.SafeLoader)
        if(yaml_config is not None):
            self.from_dict(yaml_config)

    def from_dict(self, user_dict: Dict[Any, Any]) -> None:
        """Updates the config from a dictionary. Sections given in
        ``user_dict`` are merged into the existing sections.

        Parameters
        ----------
        user_dict : dict
            The dictionary with the new settings.
        """
        if(not isinstance(user_dict, dict)):
            raise TypeError('The user_dict argument must be of type dict!')
        _deep_update(self, user_dict)

    def reset(self) -> None:
        """Restores the default configuration.
        """
        self.clear()
        self.update(copy.deepcopy(_BASECONFIG))


CFG = CFGClass(copy.deepcopy(_BASECONFIG))


def set_ncpu(ncpu):
    """Sets the global number of CPUs used by functions that support
    multi-processing.

    Parameters
    ----------
    ncpu : int | None
        The number of CPUs. ``None`` means one CPU.
    """
    if(ncpu is not None):
        if(not isinstance(ncpu, int)):
            raise TypeError('The ncpu argument must be None or of type int!')
        if(ncpu < 1):
            raise ValueError('The ncpu argument must be >= 1!')
    CFG['multiproc']['ncpu'] = ncpu
