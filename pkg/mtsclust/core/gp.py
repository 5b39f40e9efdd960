# -*- coding: utf-8 -*-

"""The gp module provides the exponentiated-quadratic kernel and the exact
Gaussian process algebra: log marginal likelihoods with their gradients with
respect to the log-space hyper-parameters, and posterior conditioning.

All solves go through Cholesky factorizations. A diagonal jitter, relative to
the kernel variance, is added and escalated when a factorization fails.
"""

import numpy as np
import scipy.linalg

from mtsclust.core.config import CFG
from mtsclust.core.debugging import get_logger
from mtsclust.core.py import float_cast
from mtsclust.core.timeseries import TimeGrid


logger = get_logger(__name__)

_LOG_2PI = np.log(2*np.pi)


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """Raised when a covariance matrix stays non positive-definite after the
    jitter escalation.
    """
    pass


class Kernel(object):
    """The exponentiated-quadratic kernel
    ``k(s, t) = v * exp(-(s - t)^2 / (2 l^2))``.
    """
    def __init__(self, variance, lengthscale):
        """
        Parameters
        ----------
        variance : float
            The variance v > 0.
        lengthscale : float
            The length-scale l > 0.
        """
        super().__init__()

        self.variance = variance
        self.lengthscale = lengthscale

    @staticmethod
    def from_log_params(log_params):
        """Creates a Kernel from the array (log v, log l).
        """
        return Kernel(np.exp(log_params[0]), np.exp(log_params[1]))

    @property
    def variance(self):
        """The kernel variance v > 0.
        """
        return self._variance
    @variance.setter
    def variance(self, v):
        v = float_cast(v, 'The variance property must be castable to float!')
        if(not (v > 0) or not np.isfinite(v)):
            raise ValueError(
                f'The kernel variance must be finite and > 0! Got {v}.')
        self._variance = v

    @property
    def lengthscale(self):
        """The kernel length-scale l > 0.
        """
        return self._lengthscale
    @lengthscale.setter
    def lengthscale(self, l):
        l = float_cast(l, 'The lengthscale property must be castable to float!')
        if(not (l > 0) or not np.isfinite(l)):
            raise ValueError(
                f'The kernel lengthscale must be finite and > 0! Got {l}.')
        self._lengthscale = l

    @property
    def log_params(self):
        """(read-only) The ndarray (log v, log l).
        """
        return np.array([np.log(self._variance), np.log(self._lengthscale)])

    def __call__(self, a, b):
        """Evaluates the kernel matrix between the points ``a`` and ``b``.
        """
        a = _as_points(a)
        b = _as_points(b)
        d2 = (a[:, None] - b[None, :])**2
        return self._variance * np.exp(-0.5 * d2 / self._lengthscale**2)

    def grads(self, a, b):
        """Evaluates the derivatives of the kernel matrix with respect to
        log v and log l.

        Returns
        -------
        K : 2d ndarray
            The kernel matrix.
        dK_dlogv : 2d ndarray
        dK_dlogl : 2d ndarray
        """
        a = _as_points(a)
        b = _as_points(b)
        r2 = (a[:, None] - b[None, :])**2 / self._lengthscale**2
        K = self._variance * np.exp(-0.5 * r2)
        return (K, K, K * r2)

    def to_dict(self):
        return {'variance': self._variance, 'lengthscale': self._lengthscale}

    @staticmethod
    def from_dict(d):
        return Kernel(d['variance'], d['lengthscale'])

    def __repr__(self):
        return (f'Kernel(variance={self._variance:.6g}, '
                f'lengthscale={self._lengthscale:.6g})')


def _as_points(grid):
    if(isinstance(grid, TimeGrid)):
        return grid.as_float()
    return np.atleast_1d(np.asarray(grid, dtype=np.float64))


def _as_grid(grid):
    if(isinstance(grid, TimeGrid)):
        return grid
    return TimeGrid(grid)


class GaussianState(object):
    """A Gaussian distribution of a process over the points of a TimeGrid.
    """
    def __init__(self, grid, mean, covariance):
        """
        Parameters
        ----------
        grid : TimeGrid | sequence of int
            The points the process values are defined at.
        mean : (N,)-shaped array_like
            The mean vector.
        covariance : (N, N)-shaped array_like
            The covariance matrix. It is symmetrized.
        """
        super().__init__()

        grid = _as_grid(grid)
        mean = np.array(mean, dtype=np.float64, ndmin=1)
        covariance = np.array(covariance, dtype=np.float64, ndmin=2)
        N = len(grid)
        if(mean.shape != (N,) or covariance.shape != (N, N)):
            raise ValueError(
                f'The mean {mean.shape} and covariance {covariance.shape} do '
                f'not match the grid of length {N}!')
        covariance = 0.5*(covariance + covariance.T)

        self._grid = grid
        self._mean = mean
        self._covariance = covariance

    @property
    def grid(self):
        return self._grid

    @property
    def mean(self):
        return self._mean

    @property
    def covariance(self):
        return self._covariance

    @property
    def variance(self):
        """(read-only) The marginal variances, i.e. the covariance diagonal.
        """
        return np.diag(self._covariance).copy()

    def indices_of(self, points):
        """Returns the positions of the given points within the grid.

        Raises
        ------
        KeyError
            If a point is not part of the grid.
        """
        if(isinstance(points, TimeGrid)):
            points = points.points
        points = np.atleast_1d(np.asarray(points, dtype=np.int64))
        idx = np.searchsorted(self._grid.points, points)
        idx = np.clip(idx, 0, len(self._grid)-1)
        if(not np.array_equal(self._grid.points[idx], points)):
            raise KeyError(
                f'The points {points.tolist()} are not all part of the grid '
                f'{self._grid.points.tolist()}!')
        return idx

    def restrict(self, points):
        """Returns the marginal distribution over the given points.
        """
        idx = self.indices_of(points)
        return GaussianState(
            self._grid.points[idx], self._mean[idx],
            self._covariance[np.ix_(idx, idx)])

    def to_dict(self):
        return {
            'grid': self._grid.points.tolist(),
            'mean': self._mean.tolist(),
            'covariance': self._covariance.tolist()
        }

    @staticmethod
    def from_dict(d):
        return GaussianState(d['grid'], d['mean'], d['covariance'])


def kernel_matrix(kernel, grid_a, grid_b):
    """Evaluates the kernel matrix with entries k(a_i, b_j).

    Parameters
    ----------
    kernel : Kernel
    grid_a : TimeGrid | 1d array_like
    grid_b : TimeGrid | 1d array_like

    Returns
    -------
    K : (len(grid_a), len(grid_b))-shaped ndarray
    """
    return kernel(grid_a, grid_b)


def robust_cholesky(matrix, scale, start_factor=None):
    """Computes the lower Cholesky factor of ``matrix + jitter * I``. The jitter
    starts at ``start_factor * scale`` and grows by the configured growth
    factor up to ``CFG['gp']['jitter_max_factor'] * scale``. A start factor of
    zero tries the plain matrix first.

    Parameters
    ----------
    matrix : (N, N)-shaped ndarray
        The symmetric matrix.
    scale : float
        The scale of the jitter, usually the kernel variance.
    start_factor : float | None
        The initial relative jitter. If None, ``CFG['gp']['jitter_factor']``
        is used.

    Returns
    -------
    L : (N, N)-shaped ndarray
        The lower Cholesky factor.
    jitter : float
        The absolute jitter that was added to the diagonal.

    Raises
    ------
    NotPositiveDefiniteError
        If the factorization fails for every jitter of the schedule.
    """
    cfg = CFG['gp']
    if(start_factor is None):
        start_factor = cfg['jitter_factor']
    max_factor = cfg['jitter_max_factor']
    growth = cfg['jitter_growth']

    factors = []
    if(start_factor <= 0):
        factors.append(0.)
        f = cfg['jitter_factor']
    else:
        f = start_factor
    while(f <= max_factor*(1 + 1e-12)):
        factors.append(f)
        f *= growth

    N = matrix.shape[0]
    for factor in factors:
        jitter = factor * scale
        try:
            L = scipy.linalg.cholesky(
                matrix + jitter*np.eye(N), lower=True, check_finite=True)
        except (np.linalg.LinAlgError, ValueError):
            continue
        if(factor > start_factor):
            logger.debug(
                'Cholesky factorization needed an escalated jitter of %g.',
                jitter)
        return (L, jitter)

    raise NotPositiveDefiniteError(
        f'The matrix of size {N} is not positive-definite, even with a '
        f'jitter of {max_factor*scale:g}!')


def _logdet_from_cholesky(L):
    return 2*np.sum(np.log(np.diag(L)))


def gp_expected_log_marginal(kernel, noise_var, grid, S, weight=1.):
    """Computes the expected log density ``E[log N(y | 0, C)]`` with
    ``C = K + noise_var * I + jitter * I`` for a random vector ``y`` with the
    second-moment matrix ``S = E[y y^T]``, scaled by ``weight`` for the
    normalization terms, and its gradient with respect to
    (log v, log l, log noise_var).

    With ``S = y y^T`` and ``weight = 1`` this is the log marginal likelihood of
    ``y``.

    Parameters
    ----------
    kernel : Kernel
    noise_var : float
        The noise variance >= 0.
    grid : TimeGrid | 1d array_like
        The N points.
    S : (N, N)-shaped ndarray
        The second-moment matrix.
    weight : float
        The weight of the log-determinant and normalization terms.

    Returns
    -------
    value : float
    grad : (3,)-shaped ndarray
        The derivatives with respect to (log v, log l, log noise_var). The
        last one is zero if ``noise_var`` is zero.
    """
    points = _as_points(grid)
    N = len(points)
    (K, dK_dlogv, dK_dlogl) = kernel.grads(points, points)
    C = K + noise_var*np.eye(N)

    (L, jitter) = robust_cholesky(C, kernel.variance)
    C_inv = scipy.linalg.cho_solve((L, True), np.eye(N))
    C_inv_S = C_inv @ S

    value = -0.5*np.trace(C_inv_S) - 0.5*weight*_logdet_from_cholesky(L) \
        - 0.5*weight*N*_LOG_2PI

    # dvalue/dC = 0.5 * (C^-1 S C^-1 - weight C^-1).
    G = 0.5*(C_inv_S @ C_inv - weight*C_inv)
    # The jitter is proportional to the kernel variance.
    grad = np.array([
        np.sum(G * dK_dlogv) + jitter*np.trace(G),
        np.sum(G * dK_dlogl),
        noise_var*np.trace(G)
    ])

    return (value, grad)


def gp_log_marginal_and_grad(kernel, noise_var, grid, y):
    """Computes ``log N(y | 0, K + noise_var * I)`` and its gradient with
    respect to (log v, log l, log noise_var). See
    :func:`gp_expected_log_marginal`.
    """
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    points = _as_points(grid)
    if(len(y) != len(points)):
        raise ValueError(
            f'The length of y ({len(y)}) does not match the grid length '
            f'({len(points)})!')
    if(not np.all(np.isfinite(y))):
        raise ValueError('The y values must be finite!')
    return gp_expected_log_marginal(
        kernel, noise_var, points, np.outer(y, y))


def gp_log_marginal(kernel, noise_var, grid, y):
    """Computes the log marginal likelihood ``log N(y | 0, K + noise_var * I)``
    via a Cholesky factorization with a diagonal jitter of ``1e-6 * v``,
    escalated up to ``1e-2 * v`` on failure.

    Raises
    ------
    NotPositiveDefiniteError
        If the Cholesky factorization fails after the jitter escalation.
    """
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    points = _as_points(grid)
    if(len(y) != len(points)):
        raise ValueError(
            f'The length of y ({len(y)}) does not match the grid length '
            f'({len(points)})!')
    if(not np.all(np.isfinite(y))):
        raise ValueError('The y values must be finite!')

    N = len(points)
    C = kernel(points, points) + noise_var*np.eye(N)
    (L, _) = robust_cholesky(C, kernel.variance)
    alpha = scipy.linalg.solve_triangular(L, y, lower=True)

    return float(-0.5*alpha @ alpha - 0.5*_logdet_from_cholesky(L)
                 - 0.5*N*_LOG_2PI)


def gp_condition(prior, obs_grid, obs_values, obs_noise_var, target_grid,
                 kernel=None):
    """Conditions a Gaussian process on noisy observations.

    The process has the prior ``prior`` over a grid covering the observed and
    the target points. If ``kernel`` is given, an independent zero-mean process
    with that kernel is added to the prior before conditioning, i.e. the
    conditioned process is the sum of both.

    Parameters
    ----------
    prior : GaussianState
        The prior over a grid that contains all points of ``obs_grid`` and
        ``target_grid``.
    obs_grid : TimeGrid | 1d array_like of int | None
        The observed points. None or an empty sequence means no observation.
    obs_values : 1d array_like
        The observed values.
    obs_noise_var : float
        The variance of the i.i.d. observation noise.
    target_grid : TimeGrid
        The points the posterior is computed at.
    kernel : Kernel | None
        The optional kernel of an additional independent process.

    Returns
    -------
    posterior : GaussianState
        The posterior of the (summed) process over ``target_grid``, without the
        observation noise.

    Raises
    ------
    NotPositiveDefiniteError
        If the observation covariance is not positive-definite after the jitter
        escalation.
    """
    target_grid = _as_grid(target_grid)
    t_idx = prior.indices_of(target_grid.points)

    cov = prior.covariance
    scale = max(np.max(np.diag(cov)), 1e-300)
    if(kernel is not None):
        cov = cov + kernel(prior.grid, prior.grid)
        scale = max(scale, kernel.variance)
    mean = prior.mean

    if(obs_grid is None or len(obs_grid) == 0):
        return GaussianState(
            target_grid, mean[t_idx], cov[np.ix_(t_idx, t_idx)])

    o_idx = prior.indices_of(obs_grid)
    obs_values = np.atleast_1d(np.asarray(obs_values, dtype=np.float64))
    if(len(obs_values) != len(o_idx)):
        raise ValueError(
            f'The number of observed values ({len(obs_values)}) does not '
            f'match the number of observed points ({len(o_idx)})!')
    if(not np.all(np.isfinite(obs_values))):
        raise ValueError('The observed values must be finite!')

    C_oo = cov[np.ix_(o_idx, o_idx)] + obs_noise_var*np.eye(len(o_idx))
    C_to = cov[np.ix_(t_idx, o_idx)]
    C_tt = cov[np.ix_(t_idx, t_idx)]

    (L, _) = robust_cholesky(C_oo, scale, start_factor=0.)
    A = scipy.linalg.cho_solve((L, True), C_to.T).T

    post_mean = mean[t_idx] + A @ (obs_values - mean[o_idx])
    post_cov = C_tt - A @ C_to.T

    return GaussianState(target_grid, post_mean, post_cov)


def extend_posterior(kernel, state, target_grid):
    """Extends the posterior ``state`` of a zero-mean process with the prior
    kernel ``kernel`` to new points, through the prior conditional of the new
    points given the grid points of ``state``.

    Parameters
    ----------
    kernel : Kernel
        The prior kernel of the process.
    state : GaussianState
        The posterior of the process over its grid.
    target_grid : TimeGrid | 1d array_like of int
        The points to extend to.

    Returns
    -------
    extended : GaussianState
        The posterior over the sorted union of both grids. Points of the
        original grid keep their posterior exactly.
    """
    target_points = _as_grid(target_grid).points
    old = state.grid.points
    new = np.setdiff1d(target_points, old)
    if(len(new) == 0):
        return state

    (L, _) = robust_cholesky(kernel(old, old), kernel.variance)
    K_no = kernel(new, old)
    A = scipy.linalg.cho_solve((L, True), K_no.T).T

    m_new = A @ state.mean
    C_on = state.covariance @ A.T
    C_nn = kernel(new, new) - A @ K_no.T + A @ state.covariance @ A.T

    union = np.concatenate((old, new))
    order = np.argsort(union)
    mean = np.concatenate((state.mean, m_new))[order]
    cov = np.block([[state.covariance, C_on], [C_on.T, C_nn]])
    cov = cov[np.ix_(order, order)]

    return GaussianState(union[order], mean, cov)
