# -*- coding: utf-8 -*-

"""
The minimizers/iminuit module wraps the MIGRAD algorithm of iminuit as an
alternative minimizer of the VEM hyper-parameter M-steps.
"""

import numpy as np

import iminuit

from mtsclust.core.debugging import (
    get_logger,
    is_tracing_enabled
)
from mtsclust.core.minimizer import MinimizerImpl


logger = get_logger(__name__)


class _CachedObjective(object):
    """Splits an objective returning ``(f, grads)`` into the separate value and
    gradient callables iminuit expects. The last evaluation is reused.
    """
    def __init__(self, func, args):
        self._func = func
        self._args = args
        self._x = None
        self._result = None

    def _at(self, x):
        x = np.asarray(x, dtype=np.float64)
        if(self._x is None or not np.array_equal(x, self._x)):
            self._x = x.copy()
            self._result = self._func(x, *self._args)
            if(is_tracing_enabled()):
                logger.debug('f(%s) = %g', x, self._result[0])
        return self._result

    def value(self, x):
        return float(self._at(x)[0])

    def grad(self, x):
        return np.asarray(self._at(x)[1], dtype=np.float64)


class IMinuitMinimizerImpl(MinimizerImpl):
    """Minimizes with MIGRAD using the analytic gradient of the objective. The
    objectives are negative log-likelihoods, hence the likelihood error
    definition.
    """

    def __init__(self, tol=1e-6, max_iter=None):
        """
        Parameters
        ----------
        tol : float
            The MIGRAD tolerance on the estimated distance to the minimum.
        max_iter : int | None
            The maximum number of function calls of one MIGRAD run.
        """
        super().__init__(max_iter=max_iter)

        self._tol = tol

    def minimize(self, initials, bounds, func, func_args=None, **kwargs):
        """Runs MIGRAD within ``bounds``. See :meth:`MinimizerImpl.minimize`.
        Additional keyword arguments are passed to :meth:`iminuit.Minuit.migrad`.

        The status dictionary holds the number of function calls ``nfcn`` and
        the validity flag ``valid`` of the found minimum.
        """
        objective = _CachedObjective(
            func, tuple() if func_args is None else tuple(func_args))

        m = iminuit.Minuit(
            objective.value, np.array(initials, dtype=np.float64),
            grad=objective.grad)
        m.errordef = iminuit.Minuit.LIKELIHOOD
        m.limits = [(lo, hi) for (lo, hi) in np.asarray(bounds)]
        m.tol = self._tol
        if(self._max_iter is not None):
            kwargs.setdefault('ncall', self._max_iter)
        m.migrad(**kwargs)

        status = {'nfcn': m.nfcn, 'valid': m.valid}
        return (np.array(m.values, dtype=np.float64), float(m.fval), status)

    def get_niter(self, status):
        return status['nfcn']

    def has_converged(self, status):
        return bool(status['valid'])
