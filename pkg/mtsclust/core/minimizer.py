# -*- coding: utf-8 -*-

"""
The minimizer module provides functionality for the minimization process of
a function. It is used for the hyper-parameter M-steps of the variational EM
algorithm, where a bounded number of minimizer iterations per outer iteration
is wanted and the objective must never get worse.
"""

import abc

import numpy as np
import scipy.optimize

from mtsclust.core.debugging import get_logger
from mtsclust.core.py import (
    classname,
    int_cast
)


logger = get_logger(__name__)


class MinimizerImpl(object, metaclass=abc.ABCMeta):
    """Abstract base class for a minimizer implementation. It defines the
    interface between the implementation and the Minimizer class.
    """

    def __init__(self, max_iter=None):
        """
        Parameters
        ----------
        max_iter : int | None
            The maximum number of minimizer iterations. None means the default
            of the underlying minimizer.
        """
        super().__init__()

        self.max_iter = max_iter

    @property
    def max_iter(self):
        """The maximum number of iterations of one minimization, or None.
        """
        return self._max_iter
    @max_iter.setter
    def max_iter(self, n):
        self._max_iter = int_cast(
            n, 'The max_iter property must be None or castable to type int!',
            allow_None=True)

    @abc.abstractmethod
    def minimize(self, initials, bounds, func, func_args=None, **kwargs):
        """This method is supposed to minimize the given function with the given
        initials.

        Parameters
        ----------
        initials : 1D (N_params)-shaped numpy ndarray
            The ndarray holding the initial values of all the parameters.
        bounds : 2D (N_params,2)-shaped numpy ndarray
            The ndarray holding the boundary values (vmin, vmax) of the
            parameters.
        func : callable
            The function that should get minimized. The call signature must be
            ``__call__(x, *args)`` and it must return the tuple (f, grads).
        func_args : sequence | None
            Optional sequence of arguments for ``func``.

        Returns
        -------
        xmin : 1D ndarray
            The array containing the function parameter values at the function's
            minimum.
        fmin : float
            The function value at its minimum.
        status : dict
            The status dictionary with information about the minimization
            process.
        """
        pass

    @abc.abstractmethod
    def get_niter(self, status):
        """This method is supposed to return the number of iterations that were
        required by the last minimization.
        """
        pass

    @abc.abstractmethod
    def has_converged(self, status):
        """This method is supposed to analyze the status information dictionary
        if the last minimization process has converged.
        """
        pass


class LBFGSMinimizerImpl(MinimizerImpl):
    """The LBFGSMinimizerImpl class provides the minimizer implementation for
    the L-BFGS-B minimizer of the :mod:`scipy.optimize` module. Its line search
    adapts the step size at every iteration.
    """

    def __init__(self, ftol=1e-9, pgtol=1e-6, maxls=50, max_iter=None):
        """Creates a new L-BFGS-B minimizer instance.

        Parameters
        ----------
        ftol : float
            The function value tolerance.
        pgtol : float
            The gradient value tolerance.
        maxls : int
            The maximum number of line search steps for an iteration.
        max_iter : int | None
            The maximum number of iterations.
        """
        super().__init__(max_iter=max_iter)

        self._ftol = ftol
        self._pgtol = pgtol
        self._maxls = maxls

    def minimize(self, initials, bounds, func, func_args=None, **kwargs):
        """Minimizes the given function ``func`` with the given initial function
        argument values ``initials``. See :meth:`MinimizerImpl.minimize`.

        Any additional keyword arguments are passed on to the underlaying
        :func:`scipy.optimize.fmin_l_bfgs_b` minimization function.
        """
        if(func_args is None):
            func_args = tuple()

        kwargs.setdefault('factr', self._ftol / np.finfo(float).eps)
        kwargs.setdefault('pgtol', self._pgtol)
        kwargs.setdefault('maxls', self._maxls)
        if(self._max_iter is not None):
            kwargs.setdefault('maxiter', self._max_iter)

        (xmin, fmin, status) = scipy.optimize.fmin_l_bfgs_b(
            func, initials,
            bounds=bounds,
            args=func_args,
            **kwargs
        )

        return (xmin, fmin, status)

    def get_niter(self, status):
        return status['nit']

    def has_converged(self, status):
        """By definition the minimization process has converged if
        ``status['warnflag']`` equals 0.
        """
        return status['warnflag'] == 0


class Minimizer(object):
    """The Minimizer class provides the general interface for minimizing a
    function. The class takes an instance of MinimizerImpl for a specific
    minimizer algorithm.

    The returned minimum is never worse than the function value at the
    initials, which makes the minimizer usable as a monotone M-step.
    """

    def __init__(self, minimizer_impl):
        """Creates a new Minimizer instance.

        Parameters
        ----------
        minimizer_impl : instance of MinimizerImpl
            The minimizer implementation for a specific minimizer algorithm.
        """
        self.minimizer_impl = minimizer_impl

    @property
    def minimizer_impl(self):
        """The instance of MinimizerImpl, which provides the implementation of
        the minimizer.
        """
        return self._minimizer_impl
    @minimizer_impl.setter
    def minimizer_impl(self, impl):
        if(not isinstance(impl, MinimizerImpl)):
            raise TypeError('The minimizer_impl property must be an instance '
                            'of MinimizerImpl!')
        self._minimizer_impl = impl

    def minimize(self, initials, bounds, func, args=None, kwargs=None):
        """Minimizes the the given function ``func`` by calling the ``minimize``
        method of the minimizer implementation.

        Parameters
        ----------
        initials : 1d numpy ndarray
            The initial parameter values.
        bounds : 2d (N_params,2)-shaped numpy ndarray
            The parameter bounds.
        func : callable ``f(x, *args)``
            The function to be minimized, returning the tuple (f, grads).
        args : sequence of arguments for ``func`` | None
            The optional sequence of arguments for ``func``.
        kwargs : dict | None
            The optional dictionary with keyword arguments for the minimizer
            implementation minimize method.

        Returns
        -------
        xmin : 1d numpy ndarray
            The parameter values at the found minimum.
        fmin : float
            The function value at its minimum.
        status : dict
            The status dictionary of the minimizer implementation.
        """
        if(args is None):
            args = tuple()
        if(kwargs is None):
            kwargs = dict()

        initials = np.asarray(initials, dtype=np.float64)
        bounds = np.asarray(bounds, dtype=np.float64)
        initials = np.clip(initials, bounds[:, 0], bounds[:, 1])

        (f0, _) = func(initials, *args)

        (xmin, fmin, status) = self._minimizer_impl.minimize(
            initials, bounds, func, args, **kwargs)

        # Clip values, which are outside their bounds due to rounding errors
        # by the minimizer, and re-evaluate the function.
        xclip = np.clip(xmin, bounds[:, 0], bounds[:, 1])
        if(np.any(xclip != xmin)):
            xmin = xclip
            (fmin, _) = func(xmin, *args)

        if(not np.isfinite(fmin) or fmin > f0):
            logger.debug(
                '%s (%s): Minimum f=%g is not better than the initial f=%g. '
                'Keeping the initials.',
                classname(self), classname(self._minimizer_impl), fmin, f0)
            (xmin, fmin) = (initials, f0)

        logger.debug(
            '%s (%s): Minimized function: %d iterations, converged=%s',
            classname(self), classname(self._minimizer_impl),
            self._minimizer_impl.get_niter(status),
            self._minimizer_impl.has_converged(status))

        return (xmin, fmin, status)


def create_minimizer(name, max_iter=None):
    """Creates a Minimizer instance for the minimizer with the given name.

    Parameters
    ----------
    name : str
        Either ``'lbfgs'`` or ``'iminuit'``.
    max_iter : int | None
        The maximum number of iterations of one minimization.

    Returns
    -------
    minimizer : instance of Minimizer
    """
    if(name == 'lbfgs'):
        return Minimizer(LBFGSMinimizerImpl(max_iter=max_iter))
    if(name == 'iminuit'):
        from mtsclust.core.minimizers.iminuit import IMinuitMinimizerImpl
        return Minimizer(IMinuitMinimizerImpl(max_iter=max_iter))
    raise ValueError(
        f'Unknown minimizer "{name}"! Must be one of "lbfgs", "iminuit".')
