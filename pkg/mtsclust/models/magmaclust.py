# -*- coding: utf-8 -*-

"""The magmaclust module implements the static clustering forecaster: a
K-component mixture of Gaussian processes, where the series of individual i in
cluster k is modelled as

    y_i(t) = mu_k(t) + f_i(t) + eps_i(t),

with a cluster mean process mu_k ~ GP(0, k_theta_k), an individual process
f_i ~ GP(0, k_theta_0) shared in its hyper-parameters across individuals, and
i.i.d. noise eps_i ~ N(0, sigma^2). The model is fitted with variational EM:
the E-step updates the Gaussian hyper-posteriors q(mu_k) and the memberships
q(Z) in closed form, the M-step updates the kernel hyper-parameters by
minimization and the mixing proportions in closed form.
"""

import copy
import json
import time
import warnings

import numpy as np
import scipy.linalg
import scipy.special
from sklearn.cluster import KMeans

from mtsclust.core.config import CFG
from mtsclust.core.debugging import (
    get_logger,
    is_tracing_enabled
)
from mtsclust.core.forecast import (
    Z95,
    ForecastResult,
    argmax_labels
)
from mtsclust.core.gp import (
    GaussianState,
    Kernel,
    NotPositiveDefiniteError,
    extend_posterior,
    gp_condition,
    gp_expected_log_marginal,
    robust_cholesky
)
from mtsclust.core.minimizer import create_minimizer
from mtsclust.core.py import (
    classname,
    float_cast,
    int_cast,
    positive_int_cast
)
from mtsclust.core.timeseries import TimeGrid
from mtsclust.core.timing import TaskTimer


logger = get_logger(__name__)

_LOG_2PI = np.log(2*np.pi)

MODEL_FORMAT = 'mtsclust.magmaclust'
MODEL_FORMAT_VERSION = 1


class EmptyIndividualError(ValueError):
    """Raised when an individual has no observed value.
    """
    pass


class UnsupportedMultivariateError(ValueError):
    """Raised when multivariate data is given to the univariate model.
    """
    pass


class IndexOutOfRangeError(IndexError):
    """Raised when an individual index is out of range.
    """
    pass


class DegenerateClusterWarning(UserWarning):
    """Emitted when the total membership mass of a cluster vanishes.
    """
    pass


class VemConfig(object):
    """The settings of the variational EM fit. Settings that are None are
    taken from ``CFG['vem']`` or derived from the data.
    """
    def __init__(self, tol=None, max_iter=None, n_mstep_iter=None,
                 minimizer=None, seed=None, mean_kernel=None,
                 indiv_kernel=None, noise_var=None, log_bounds=None,
                 init_memberships=None, degenerate_mass=None):
        """
        Parameters
        ----------
        tol : float | None
            The relative ELBO change below which the fit stops.
        max_iter : int | None
            The maximum number of VEM iterations.
        n_mstep_iter : int | None
            The maximum number of minimizer iterations per M-step.
        minimizer : str | None
            The M-step minimizer, 'lbfgs' or 'iminuit'.
        seed : int | None
            The seed of the k-means initialization.
        mean_kernel : Kernel | sequence of Kernel | None
            The initial kernel(s) of the cluster mean processes.
        indiv_kernel : Kernel | None
            The initial kernel of the individual processes.
        noise_var : float | None
            The initial noise variance.
        log_bounds : 2-tuple of float | None
            The bounds of the log-space hyper-parameters.
        init_memberships : (M, K)-shaped array_like | None
            Explicit initial memberships. If None, k-means is used.
        degenerate_mass : float | None
            The membership mass below which a cluster counts as degenerate.
        """
        super().__init__()

        cfg = CFG['vem']
        self.tol = float_cast(
            cfg['tol'] if tol is None else tol, 'tol must be a float!')
        self.max_iter = positive_int_cast(
            cfg['max_iter'] if max_iter is None else max_iter,
            'max_iter must be an int >= 1!')
        self.n_mstep_iter = positive_int_cast(
            cfg['n_mstep_iter'] if n_mstep_iter is None else n_mstep_iter,
            'n_mstep_iter must be an int >= 1!')
        self.minimizer = cfg['minimizer'] if minimizer is None else minimizer
        if(self.minimizer not in ('lbfgs', 'iminuit')):
            raise ValueError(
                f'The minimizer must be "lbfgs" or "iminuit"! Got '
                f'"{self.minimizer}".')
        self.seed = int_cast(seed, 'seed must be None or an int!',
                             allow_None=True)
        self.mean_kernel = mean_kernel
        self.indiv_kernel = indiv_kernel
        self.noise_var = noise_var
        self.log_bounds = tuple(
            cfg['log_bounds'] if log_bounds is None else log_bounds)
        self.init_memberships = init_memberships
        self.degenerate_mass = float_cast(
            cfg['degenerate_mass'] if degenerate_mass is None
            else degenerate_mass, 'degenerate_mass must be a float!')


class VemReport(object):
    """The report of a variational EM fit.
    """
    def __init__(self, elbo_trace, n_iters, converged, wall_clock_seconds,
                 iteration_seconds=None, n_degenerate=0, n_reseeds=0):
        super().__init__()

        self.elbo_trace = list(elbo_trace)
        self.n_iters = n_iters
        self.converged = converged
        self.wall_clock_seconds = wall_clock_seconds
        self.iteration_seconds = list(iteration_seconds or [])
        self.n_degenerate = n_degenerate
        self.n_reseeds = n_reseeds

    def __str__(self):
        return (f'{classname(self)}: {self.n_iters} iterations, converged='
                f'{self.converged}, ELBO={self.elbo_trace[-1]:.6g}, '
                f'{self.wall_clock_seconds:.3f} sec')


class MagmaClustModel(object):
    """A fitted mixture of Gaussian processes.

    Attributes
    ----------
    K : int
        The number of clusters.
    mean_kernels : list of Kernel
        The kernels of the K cluster mean processes.
    indiv_kernel : Kernel
        The kernel of the individual processes.
    noise_var : float
        The noise variance >= 0.
    mixing : (K,)-shaped ndarray
        The mixing proportions.
    mean_posteriors : list of GaussianState
        The hyper-posteriors of the K mean processes over ``train_grid``.
    memberships : (M, K)-shaped ndarray
        The membership probabilities of the training individuals.
    train_grid : TimeGrid
        The union of the observed time points of the training data.
    """
    def __init__(self, mean_kernels, indiv_kernel, noise_var, mixing,
                 mean_posteriors, memberships, train_grid):
        super().__init__()

        self.mean_kernels = list(mean_kernels)
        self.K = len(self.mean_kernels)
        self.indiv_kernel = indiv_kernel
        self.noise_var = float_cast(noise_var, 'noise_var must be a float!')
        if(self.noise_var < 0):
            raise ValueError('The noise variance must be >= 0!')
        self.mixing = np.array(mixing, dtype=np.float64, ndmin=1)
        self.mean_posteriors = list(mean_posteriors)
        self.memberships = np.array(memberships, dtype=np.float64, ndmin=2)
        self.train_grid = (train_grid if isinstance(train_grid, TimeGrid)
                           else TimeGrid(train_grid))

        if(len(self.mixing) != self.K or len(self.mean_posteriors) != self.K or
           self.memberships.shape[1] != self.K):
            raise ValueError(
                'The mixing, mean_posteriors and memberships must match K!')

    @property
    def n_individuals(self):
        return self.memberships.shape[0]

    def replace(self, **kwargs):
        """Returns a copy of this model with the given attributes replaced.
        """
        args = dict(
            mean_kernels=self.mean_kernels, indiv_kernel=self.indiv_kernel,
            noise_var=self.noise_var, mixing=self.mixing,
            mean_posteriors=self.mean_posteriors,
            memberships=self.memberships, train_grid=self.train_grid)
        args.update(kwargs)
        return MagmaClustModel(**args)

    def elbo(self, data):
        """Computes the variational lower bound of the log marginal likelihood
        of the training data ``data`` under this model.
        """
        engine = _VemEngine(data, VemConfig())
        if(engine.M != self.n_individuals or
           engine.grid != self.train_grid):
            raise ValueError(
                'The data does not match the training data of the model!')
        state = _VemState.from_model(self)
        engine.update_cluster_priors(state)
        engine.update_indiv_covariances(state)
        return engine.elbo(state)

    def to_dict(self):
        return {
            'format': MODEL_FORMAT,
            'version': MODEL_FORMAT_VERSION,
            'K': self.K,
            'train_grid': self.train_grid.points.tolist(),
            'mean_kernels': [k.to_dict() for k in self.mean_kernels],
            'indiv_kernel': self.indiv_kernel.to_dict(),
            'noise_var': self.noise_var,
            'mixing': self.mixing.tolist(),
            'memberships': self.memberships.tolist(),
            'mean_posteriors': [s.to_dict() for s in self.mean_posteriors]
        }

    @staticmethod
    def from_dict(d):
        if(d.get('format') != MODEL_FORMAT):
            raise ValueError(
                f'The model format "{d.get("format")}" is not '
                f'"{MODEL_FORMAT}"!')
        return MagmaClustModel(
            mean_kernels=[Kernel.from_dict(k) for k in d['mean_kernels']],
            indiv_kernel=Kernel.from_dict(d['indiv_kernel']),
            noise_var=d['noise_var'],
            mixing=d['mixing'],
            mean_posteriors=[
                GaussianState.from_dict(s) for s in d['mean_posteriors']],
            memberships=d['memberships'],
            train_grid=d['train_grid'])


def save_model(model, pathfilename):
    """Saves the model as JSON text. The document holds the fields of
    :meth:`MagmaClustModel.to_dict`: the format tag and version, K, the
    training grid, the kernels as (variance, lengthscale), the noise variance,
    the mixing proportions, the memberships and the hyper-posterior means and
    covariances.
    """
    with open(pathfilename, 'w') as fp:
        json.dump(model.to_dict(), fp, indent=1)


def load_model(pathfilename):
    """Loads a model saved by :func:`save_model`.
    """
    with open(pathfilename) as fp:
        return MagmaClustModel.from_dict(json.load(fp))


class _VemState(object):
    """The mutable state of a VEM fit.
    """
    def __init__(self, tau, pi, mean_kernels, indiv_kernel, noise_var):
        self.tau = tau
        self.pi = pi
        self.mean_kernels = mean_kernels
        self.indiv_kernel = indiv_kernel
        self.noise_var = noise_var

        # Hyper-posterior means (K, N), covariances (K, N, N) and the log
        # determinants of the covariances.
        self.m_hat = None
        self.C_hat = None
        self.logdet_C_hat = None

        # Cholesky factors of the cluster prior covariances.
        self.prior_chol = None
        # Per observation-pattern group: (L, W=Psi^-1, logdet Psi).
        self.psi = None

    def copy(self):
        return copy.deepcopy(self)

    @staticmethod
    def from_model(model):
        state = _VemState(
            model.memberships.copy(), model.mixing.copy(),
            list(model.mean_kernels), model.indiv_kernel, model.noise_var)
        state.m_hat = np.array([s.mean for s in model.mean_posteriors])
        state.C_hat = np.array([s.covariance for s in model.mean_posteriors])
        state.logdet_C_hat = np.array(
            [np.linalg.slogdet(C)[1] for C in state.C_hat])
        return state


class _PatternGroup(object):
    """The individuals that share the same set of observed time points.
    """
    def __init__(self, members, obs_idx, Y):
        # The indices of the individuals.
        self.members = members
        # The positions of the observed points within the union grid.
        self.obs_idx = obs_idx
        # The (n_members, n_obs)-shaped observed values.
        self.Y = Y


class _VemEngine(object):
    """The data preparation and the update steps of the VEM algorithm.
    """
    def __init__(self, data, config):
        if(data.n_dims != 1):
            raise UnsupportedMultivariateError(
                'The mixture of Gaussian processes model handles univariate '
                f'data only, got {data.n_dims} dimensions!')
        mask = data.mask[:, 0]
        empty = np.flatnonzero(~np.any(mask, axis=1))
        if(len(empty) > 0):
            raise EmptyIndividualError(
                f'The individuals {empty.tolist()} have no observed values!')

        used = np.any(mask, axis=0)
        self.grid = TimeGrid(data.grid.points[used])
        self.points = self.grid.as_float()
        self.N = len(self.grid)
        self.M = data.n_individuals
        mask = mask[:, used]
        values = data.values[:, 0][:, used]

        (patterns, inverse) = np.unique(mask, axis=0, return_inverse=True)
        inverse = np.asarray(inverse).ravel()
        self.groups = []
        for (g, pattern) in enumerate(patterns):
            members = np.flatnonzero(inverse == g)
            obs_idx = np.flatnonzero(pattern)
            self.groups.append(
                _PatternGroup(members, obs_idx, values[np.ix_(members, obs_idx)]))

        self.config = config
        self.minimizer = create_minimizer(
            config.minimizer, max_iter=config.n_mstep_iter)
        self.tracing = is_tracing_enabled()

        observed = values[mask]
        self.data_var = max(float(np.var(observed)), 1e-6)

    def initial_state(self, K):
        """Creates the initial state from k-means memberships and the initial
        hyper-parameters.
        """
        config = self.config
        if(config.init_memberships is not None):
            tau = np.array(config.init_memberships, dtype=np.float64)
            if(tau.shape != (self.M, K)):
                raise ValueError(
                    f'The init_memberships must have the shape ({self.M}, '
                    f'{K})!')
        else:
            tau = self._kmeans_memberships(K)

        span = max(self.points[-1] - self.points[0], 1.)
        lengthscale = max(1., span/4.)
        mean_kernel = config.mean_kernel
        if(mean_kernel is None):
            mean_kernels = [Kernel(self.data_var, lengthscale)]*K
        elif(isinstance(mean_kernel, Kernel)):
            mean_kernels = [mean_kernel]*K
        else:
            mean_kernels = list(mean_kernel)
            if(len(mean_kernels) != K):
                raise ValueError('One initial mean kernel per cluster needed!')
        indiv_kernel = config.indiv_kernel
        if(indiv_kernel is None):
            indiv_kernel = Kernel(0.5*self.data_var, lengthscale)
        noise_var = config.noise_var
        if(noise_var is None):
            noise_var = 0.1*self.data_var
        if(not noise_var > 0):
            raise ValueError('The initial noise variance must be > 0!')

        return _VemState(
            tau, tau.mean(axis=0), mean_kernels, indiv_kernel, noise_var)

    def _kmeans_memberships(self, K):
        if(K > self.M):
            raise ValueError(
                f'K={K} exceeds the number of individuals {self.M}!')
        X = np.full((self.M, self.N), np.nan)
        for grp in self.groups:
            X[np.ix_(grp.members, grp.obs_idx)] = grp.Y
        # Missing entries are mean-filled for the initialization only.
        col_mean = np.nanmean(X, axis=0)
        X = np.where(np.isnan(X), col_mean[None, :], X)
        tau = np.zeros((self.M, K))
        if(K == 1):
            tau[:, 0] = 1
            return tau
        km = KMeans(n_clusters=K, n_init=10, random_state=self.config.seed)
        labels = km.fit_predict(X)
        tau[np.arange(self.M), labels] = 1
        return tau

    def update_cluster_priors(self, state):
        state.prior_chol = []
        for kern in state.mean_kernels:
            (L, _) = robust_cholesky(
                kern(self.points, self.points), kern.variance)
            state.prior_chol.append(L)

    def update_indiv_covariances(self, state):
        state.psi = []
        kern = state.indiv_kernel
        for grp in self.groups:
            p = self.points[grp.obs_idx]
            Psi = kern(p, p) + state.noise_var*np.eye(len(p))
            (L, _) = robust_cholesky(Psi, kern.variance)
            W = scipy.linalg.cho_solve((L, True), np.eye(len(p)))
            state.psi.append((L, W, 2*np.sum(np.log(np.diag(L)))))

    def e_step_mean_processes(self, state):
        """Updates the Gaussian hyper-posteriors q(mu_k) given the memberships.
        """
        K = state.tau.shape[1]
        N = self.N
        state.m_hat = np.empty((K, N))
        state.C_hat = np.empty((K, N, N))
        state.logdet_C_hat = np.empty((K,))
        for k in range(K):
            L0 = state.prior_chol[k]
            Lam = scipy.linalg.cho_solve((L0, True), np.eye(N))
            b = np.zeros((N,))
            for (grp, (_, W, _)) in zip(self.groups, state.psi):
                t = state.tau[grp.members, k]
                o = grp.obs_idx
                Lam[np.ix_(o, o)] += np.sum(t)*W
                b[o] += W @ (t @ grp.Y)
            Lam = 0.5*(Lam + Lam.T)
            (L, _) = robust_cholesky(
                Lam, np.max(np.diag(Lam)), start_factor=0.)
            state.C_hat[k] = scipy.linalg.cho_solve((L, True), np.eye(N))
            state.m_hat[k] = scipy.linalg.cho_solve((L, True), b)
            state.logdet_C_hat[k] = -2*np.sum(np.log(np.diag(L)))

    def expected_loglik(self, state):
        """Computes the (M, K)-shaped matrix of
        ``E_q(mu_k)[log N(y_i | mu_k, Psi_i)]``.
        """
        K = state.m_hat.shape[0]
        ll = np.empty((self.M, K))
        for (grp, (L, W, logdet)) in zip(self.groups, state.psi):
            o = grp.obs_idx
            n = len(o)
            for k in range(K):
                R = grp.Y - state.m_hat[k, o][None, :]
                Z = scipy.linalg.solve_triangular(L, R.T, lower=True)
                quad = np.sum(Z**2, axis=0)
                tr = np.sum(W * state.C_hat[k][np.ix_(o, o)])
                ll[grp.members, k] = -0.5*(quad + logdet + n*_LOG_2PI + tr)
        return ll

    def e_step_memberships(self, state):
        """Updates the memberships q(Z) given the hyper-posteriors.
        """
        ll = self.expected_loglik(state)
        with np.errstate(divide='ignore'):
            log_r = np.log(state.pi)[None, :] + ll
        log_r -= scipy.special.logsumexp(log_r, axis=1, keepdims=True)
        tau = np.exp(log_r)
        state.tau = tau / np.sum(tau, axis=1, keepdims=True)

    def _indiv_objective(self, x, state, S_list):
        kern = Kernel.from_log_params(x[:2])
        noise_var = np.exp(x[2])
        f = 0.
        grads = np.zeros((3,))
        try:
            for (grp, S) in zip(self.groups, S_list):
                (v, g) = gp_expected_log_marginal(
                    kern, noise_var, self.points[grp.obs_idx], S,
                    weight=len(grp.members))
                f += v
                grads += g
        except NotPositiveDefiniteError:
            return (1e300, np.zeros((3,)))
        return (-f, -grads)

    def _mean_objective(self, x, S):
        kern = Kernel.from_log_params(x)
        try:
            (v, g) = gp_expected_log_marginal(kern, 0., self.points, S)
        except NotPositiveDefiniteError:
            return (1e300, np.zeros((2,)))
        return (-v, -g[:2])

    def m_step(self, state):
        """Updates the hyper-parameters and the mixing proportions.
        """
        K = state.tau.shape[1]
        bounds = np.array([self.config.log_bounds]*3)

        # Individual kernel and noise: the second moments of the residuals
        # y_i - mu_k, summed over the members of each group.
        S_list = []
        for grp in self.groups:
            o = grp.obs_idx
            S = np.zeros((len(o), len(o)))
            for k in range(K):
                t = state.tau[grp.members, k]
                R = grp.Y - state.m_hat[k, o][None, :]
                S += (R.T * t) @ R + np.sum(t)*state.C_hat[k][np.ix_(o, o)]
            S_list.append(S)

        x0 = np.concatenate(
            (state.indiv_kernel.log_params, [np.log(state.noise_var)]))
        (xmin, _, _) = self.minimizer.minimize(
            x0, bounds, self._indiv_objective, args=(state, S_list))
        state.indiv_kernel = Kernel.from_log_params(xmin[:2])
        state.noise_var = float(np.exp(xmin[2]))

        new_kernels = []
        for k in range(K):
            S = np.outer(state.m_hat[k], state.m_hat[k]) + state.C_hat[k]
            (xmin, _, _) = self.minimizer.minimize(
                state.mean_kernels[k].log_params, bounds[:2],
                self._mean_objective, args=(S,))
            new_kernels.append(Kernel.from_log_params(xmin))
        state.mean_kernels = new_kernels

        state.pi = np.mean(state.tau, axis=0)

        self.update_cluster_priors(state)
        self.update_indiv_covariances(state)

    def elbo(self, state):
        """Computes the variational lower bound for the given state.
        """
        K = state.tau.shape[1]
        N = self.N
        ll = self.expected_loglik(state)
        value = np.sum(state.tau * ll) + np.sum(
            scipy.special.xlogy(state.tau, state.pi[None, :]))
        value -= np.sum(scipy.special.xlogy(state.tau, state.tau))
        for k in range(K):
            L0 = state.prior_chol[k]
            alpha = scipy.linalg.solve_triangular(
                L0, state.m_hat[k], lower=True)
            logdet_C = 2*np.sum(np.log(np.diag(L0)))
            tr = np.trace(scipy.linalg.cho_solve((L0, True), state.C_hat[k]))
            value += -0.5*(alpha @ alpha + logdet_C + N*_LOG_2PI + tr)
            value += 0.5*(state.logdet_C_hat[k] + N*(1 + _LOG_2PI))
        return float(value)

    def iterate(self, state, tl=None):
        """Performs one VEM iteration and returns the ELBO afterwards.
        """
        with TaskTimer(tl, 'VEM E-step'):
            self.e_step_mean_processes(state)
            self.e_step_memberships(state)
        with TaskTimer(tl, 'VEM M-step'):
            self.m_step(state)
        return self.elbo(state)

    def degenerate_clusters(self, state):
        mass = np.sum(state.tau, axis=0)
        return np.flatnonzero(mass < self.config.degenerate_mass)

    def reseed(self, state, k):
        """Creates a candidate state, in which the cluster ``k`` is re-seeded
        by the individual with the lowest expected log-likelihood.
        """
        ll = self.expected_loglik(state)
        fit = np.sum(state.tau * ll, axis=1)
        i_worst = int(np.argmin(fit))
        cand = state.copy()
        cand.tau[i_worst] = 0.
        cand.tau[i_worst, k] = 1.
        cand.pi = np.mean(cand.tau, axis=0)
        return (cand, i_worst)

    def to_model(self, state):
        posteriors = [
            GaussianState(self.grid, state.m_hat[k], state.C_hat[k])
            for k in range(state.tau.shape[1])]
        return MagmaClustModel(
            mean_kernels=state.mean_kernels,
            indiv_kernel=state.indiv_kernel,
            noise_var=state.noise_var,
            mixing=state.pi,
            mean_posteriors=posteriors,
            memberships=state.tau,
            train_grid=self.grid)


def vem_fit(data, K, config=None, tl=None):
    """Fits a K-component mixture of Gaussian processes to univariate data with
    variational EM.

    Parameters
    ----------
    data : TimeSeriesSet
        The univariate (d = 1) training data. Every individual must have at
        least one observed value.
    K : int
        The number of clusters >= 1.
    config : VemConfig | None
        The fit settings. If None, the defaults are used.
    tl : TimeLord | None
        The optional TimeLord instance to time the E- and M-steps.

    Returns
    -------
    model : MagmaClustModel
    report : VemReport

    Raises
    ------
    UnsupportedMultivariateError
        If the data has more than one dimension.
    EmptyIndividualError
        If an individual has no observed value.
    """
    K = positive_int_cast(K, 'K must be an int >= 1!')
    if(config is None):
        config = VemConfig()

    t_start = time.perf_counter()

    engine = _VemEngine(data, config)
    state = engine.initial_state(K)
    engine.update_cluster_priors(state)
    engine.update_indiv_covariances(state)

    elbo_trace = []
    iteration_seconds = []
    converged = False
    n_degenerate = 0
    n_reseeds = 0
    for it in range(config.max_iter):
        with TaskTimer(None, 'VEM iteration') as tt:
            elbo = engine.iterate(state, tl=tl)

            for k in engine.degenerate_clusters(state):
                n_degenerate += 1
                msg = (f'The cluster {k+1} has a vanishing membership mass in '
                       f'iteration {it+1}.')
                (cand, i_worst) = engine.reseed(state, k)
                cand_elbo = engine.iterate(cand, tl=tl)
                if(cand_elbo >= elbo):
                    (state, elbo) = (cand, cand_elbo)
                    n_reseeds += 1
                    msg += f' Re-seeded it with the individual {i_worst}.'
                else:
                    msg += ' Re-seeding did not improve the bound.'
                logger.warning(msg)
                warnings.warn(msg, DegenerateClusterWarning)
        iteration_seconds.append(tt.duration)

        if(engine.tracing):
            logger.debug('VEM iteration %d: ELBO=%.10g', it+1, elbo)

        if(len(elbo_trace) > 0):
            prev = elbo_trace[-1]
            elbo_trace.append(elbo)
            if(abs(elbo - prev) <= config.tol * max(abs(prev), 1.)):
                converged = True
                break
        else:
            elbo_trace.append(elbo)

    model = engine.to_model(state)
    report = VemReport(
        elbo_trace=elbo_trace,
        n_iters=len(elbo_trace),
        converged=converged,
        wall_clock_seconds=time.perf_counter() - t_start,
        iteration_seconds=iteration_seconds,
        n_degenerate=n_degenerate,
        n_reseeds=n_reseeds)

    logger.info(
        'VEM fit with K=%d on M=%d individuals: %d iterations, converged=%s, '
        'ELBO=%.6g.', K, engine.M, report.n_iters, converged, elbo_trace[-1])

    return (model, report)


def _membership_logits(model, times, y):
    """Computes the log membership weights of a new individual with the
    observations ``y`` at the points ``times``, from the marginal likelihood
    ``N(y | m_k, C_k + Psi)`` of each cluster.
    """
    with np.errstate(divide='ignore'):
        log_w = np.log(model.mixing).copy()
    if(len(times) == 0):
        return log_w
    Psi = model.indiv_kernel(times, times) + \
        model.noise_var*np.eye(len(times))
    for k in range(model.K):
        state = extend_posterior(
            model.mean_kernels[k], model.mean_posteriors[k], times)
        idx = state.indices_of(times)
        C = state.covariance[np.ix_(idx, idx)] + Psi
        (L, _) = robust_cholesky(C, model.indiv_kernel.variance)
        r = scipy.linalg.solve_triangular(L, y - state.mean[idx], lower=True)
        log_w[k] += -0.5*(r @ r) - np.sum(np.log(np.diag(L))) - \
            0.5*len(times)*_LOG_2PI
    return log_w


def predict(model, history, target_grid):
    """Predicts the series of individuals over the target grid.

    For every cluster k, the sum process mu_k + f_i is conditioned on the
    observed history of individual i. The cluster predictions are combined
    with the membership probabilities of the individual given its history.
    The 95% band is the one of the most probable cluster.

    Parameters
    ----------
    model : MagmaClustModel
    history : TimeSeriesSet
        The univariate history of the individuals. Unobserved entries are
        ignored, an individual may have no observation at all.
    target_grid : TimeGrid
        The points to predict at.

    Returns
    -------
    result : ForecastResult
        The mixture predictive means and variances (including the noise), the
        memberships given the history, and the per-cluster predictions.

    Raises
    ------
    NotPositiveDefiniteError
        If a covariance is not positive-definite after the jitter escalation.
    """
    if(history.n_dims != 1):
        raise UnsupportedMultivariateError(
            'The mixture of Gaussian processes model predicts univariate data '
            'only!')
    if(not isinstance(target_grid, TimeGrid)):
        target_grid = TimeGrid(target_grid)

    M = history.n_individuals
    H = len(target_grid)
    K = model.K
    cluster_mean = np.empty((M, K, 1, H))
    cluster_var = np.empty((M, K, 1, H))
    memberships = np.empty((M, K))

    for i in range(M):
        (times, y) = history.observed(i, 0)
        log_w = _membership_logits(model, times, y)
        memberships[i] = np.exp(log_w - scipy.special.logsumexp(log_w))

        points = np.union1d(times, target_grid.points)
        for k in range(K):
            prior = extend_posterior(
                model.mean_kernels[k], model.mean_posteriors[k], points)
            post = gp_condition(
                prior, times, y, model.noise_var, target_grid,
                kernel=model.indiv_kernel)
            cluster_mean[i, k, 0] = post.mean
            cluster_var[i, k, 0] = post.variance + model.noise_var

    w = memberships[:, :, None, None]
    mean = np.sum(w * cluster_mean, axis=1)
    variance = np.sum(w * (cluster_var + cluster_mean**2), axis=1) - mean**2
    variance = np.clip(variance, 0, None)

    best = argmax_labels(memberships) - 1
    idx = np.arange(M)
    best_mean = cluster_mean[idx, best]
    best_sd = np.sqrt(np.clip(cluster_var[idx, best], 0, None))

    return ForecastResult(
        target_grid, mean, variance,
        lower=best_mean - Z95*best_sd,
        upper=best_mean + Z95*best_sd,
        memberships=memberships,
        cluster_mean=cluster_mean,
        cluster_variance=cluster_var)


def assign_cluster(model, individual_index):
    """Returns the most probable cluster of a training individual.

    Returns
    -------
    label : int
        The 1-based label. Ties are broken by the lowest index.
    membership : (K,)-shaped ndarray
        The membership probabilities of the individual.

    Raises
    ------
    IndexOutOfRangeError
        If the index is out of range.
    """
    i = int_cast(individual_index, 'The individual index must be an int!')
    if(i < 0 or i >= model.n_individuals):
        raise IndexOutOfRangeError(
            f'The individual index {i} is out of range [0, '
            f'{model.n_individuals})!')
    row = model.memberships[i]
    return (int(argmax_labels(row)), row.copy())
