# -*- coding: utf-8 -*-

"""Seeded generators of synthetic data sets with known ground truth, one for
each forecaster:

- a mixture of Gaussian processes, where every individual follows the mean
  process of its cluster plus an individual process and noise;
- a dynamic Gaussian mixture, where the component of every time point follows
  a sticky Markov chain blended with the static mixture probabilities.
"""

import os.path

import numpy as np

from mtsclust.core.debugging import get_logger
from mtsclust.core.forecast import ClusterTrajectory
from mtsclust.core.gp import (
    Kernel,
    robust_cholesky
)
from mtsclust.core.py import (
    float_cast,
    positive_int_cast
)
from mtsclust.core.random import make_rss
from mtsclust.core.storage import (
    write_csv_dataset,
    write_labels_csv
)
from mtsclust.core.timeseries import (
    TimeGrid,
    TimeSeriesSet
)


logger = get_logger(__name__)


def _check_simplex(p, name):
    p = np.array(p, dtype=np.float64, ndmin=1)
    if(np.any(p < 0) or abs(np.sum(p) - 1) > 1e-9):
        raise ValueError(f'The {name} vector must lie on the simplex!')
    return p


def _draw_categorical(rng, probs):
    """Draws one category per row of the (n, K)-shaped probability matrix.
    """
    cum = np.cumsum(probs, axis=1)
    u = rng.random_sample(probs.shape[0])
    idx = np.sum(cum <= u[:, None] * cum[:, -1:], axis=1)
    return np.minimum(idx, probs.shape[1]-1)


class MagmaSynthSpec(object):
    """The parameters of a synthetic mixture-of-GPs data set.
    """
    def __init__(self, M, K, T, mean_kernel, indiv_kernel, noise_var,
                 mixing=None, seed=None, mean_offsets=None):
        """
        Parameters
        ----------
        M, K, T : int
            The numbers of individuals, clusters and time points.
        mean_kernel : Kernel
            The kernel of the cluster mean processes.
        indiv_kernel : Kernel | None
            The kernel of the individual processes. None means that the
            individual processes vanish.
        noise_var : float
            The noise variance >= 0.
        mixing : sequence of float | None
            The mixing proportions. If None, they are uniform.
        seed : int | None
            The seed of the generator.
        mean_offsets : sequence of float | None
            Optional constant offsets added to the K mean curves.
        """
        super().__init__()

        self.M = positive_int_cast(M, 'M must be an int >= 1!')
        self.K = positive_int_cast(K, 'K must be an int >= 1!')
        self.T = positive_int_cast(T, 'T must be an int >= 1!')
        if(not isinstance(mean_kernel, Kernel)):
            raise TypeError('The mean_kernel must be an instance of Kernel!')
        if(indiv_kernel is not None and not isinstance(indiv_kernel, Kernel)):
            raise TypeError(
                'The indiv_kernel must be None or an instance of Kernel!')
        self.mean_kernel = mean_kernel
        self.indiv_kernel = indiv_kernel
        self.noise_var = float_cast(noise_var, 'noise_var must be a float!')
        if(self.noise_var < 0):
            raise ValueError('The noise variance must be >= 0!')
        if(mixing is None):
            mixing = np.full((self.K,), 1./self.K)
        self.mixing = _check_simplex(mixing, 'mixing')
        if(len(self.mixing) != self.K):
            raise ValueError('The mixing vector must have K entries!')
        if(mean_offsets is None):
            mean_offsets = np.zeros((self.K,))
        self.mean_offsets = np.array(mean_offsets, dtype=np.float64, ndmin=1)
        if(len(self.mean_offsets) != self.K):
            raise ValueError('The mean_offsets must have K entries!')
        self.seed = seed


def _draw_gp(rng, kernel, points, n):
    """Draws ``n`` zero-mean GP curves over the given points.
    """
    (L, _) = robust_cholesky(kernel(points, points), kernel.variance)
    return rng.standard_normal((n, len(points))) @ L.T


def generate_magma_data(spec, return_means=False):
    """Generates a univariate mixture-of-GPs data set.

    Parameters
    ----------
    spec : MagmaSynthSpec
    return_means : bool
        If True, the (K, T)-shaped drawn mean curves are returned as well.

    Returns
    -------
    data : TimeSeriesSet
        The (M, 1, T)-shaped complete data set on the grid 1..T.
    labels : (M,)-shaped int64 ndarray
        The 1-based cluster of every individual.
    means : (K, T)-shaped ndarray
        The mean curves. Only returned if ``return_means`` is True.
    """
    rng = make_rss(spec.seed).random
    grid = TimeGrid.range(spec.T)
    points = grid.as_float()

    means = _draw_gp(rng, spec.mean_kernel, points, spec.K) + \
        spec.mean_offsets[:, None]
    labels = _draw_categorical(
        rng, np.tile(spec.mixing, (spec.M, 1))) + 1

    values = means[labels - 1]
    if(spec.indiv_kernel is not None):
        values = values + _draw_gp(rng, spec.indiv_kernel, points, spec.M)
    if(spec.noise_var > 0):
        values = values + np.sqrt(spec.noise_var)*rng.standard_normal(
            values.shape)

    data = TimeSeriesSet(values[:, None, :], grid)
    if(return_means):
        return (data, labels, means)
    return (data, labels)


def sticky_transition_matrix(K, rho):
    """Creates the K x K transition matrix with the staying probability ``rho``
    on the diagonal and uniform off-diagonal entries.
    """
    if(K == 1):
        return np.ones((1, 1))
    P = np.full((K, K), (1 - rho)/(K - 1))
    np.fill_diagonal(P, rho)
    return P


class Dgm2SynthSpec(object):
    """The parameters of a synthetic dynamic Gaussian mixture data set.
    """
    def __init__(self, M, K, T, d, means, emission_var, rho, gamma,
                 base_probs=None, seed=None):
        """
        Parameters
        ----------
        M, K, T, d : int
            The numbers of individuals, components, time points and
            dimensions.
        means : (K, d)-shaped array_like
            The component means.
        emission_var : float | (d,)-shaped array_like
            The emission variance >= 0 of every dimension.
        rho : float
            The probability in [0, 1] to stay in the current component.
        gamma : float
            The weight in [0, 1] of the static mixture probabilities.
        base_probs : sequence of float | None
            The static mixture probabilities. If None, they are uniform.
        seed : int | None
        """
        super().__init__()

        self.M = positive_int_cast(M, 'M must be an int >= 1!')
        self.K = positive_int_cast(K, 'K must be an int >= 1!')
        self.T = positive_int_cast(T, 'T must be an int >= 1!')
        self.d = positive_int_cast(d, 'd must be an int >= 1!')
        self.means = np.array(means, dtype=np.float64, ndmin=2)
        if(self.means.shape != (self.K, self.d)):
            raise ValueError(
                f'The means must have the shape ({self.K}, {self.d})!')
        self.emission_var = np.broadcast_to(
            np.asarray(emission_var, dtype=np.float64), (self.d,)).copy()
        if(np.any(self.emission_var < 0)):
            raise ValueError('The emission variance must be >= 0!')
        self.rho = float_cast(rho, 'rho must be a float!')
        self.gamma = float_cast(gamma, 'gamma must be a float!')
        if(not (0 <= self.rho <= 1) or not (0 <= self.gamma <= 1)):
            raise ValueError('rho and gamma must lie within [0, 1]!')
        if(base_probs is None):
            base_probs = np.full((self.K,), 1./self.K)
        self.base_probs = _check_simplex(base_probs, 'base_probs')
        if(len(self.base_probs) != self.K):
            raise ValueError('The base_probs vector must have K entries!')
        self.seed = seed

    @staticmethod
    def from_separation(M, K, T, d=1, separation_sd=4., emission_var=1.,
                        rho=0.9, gamma=0.1, seed=None):
        """Creates a spec with K evenly spaced component means, centered at
        zero and ``separation_sd`` emission standard deviations apart in every
        dimension.
        """
        sd = np.sqrt(emission_var)
        offsets = (np.arange(K) - (K - 1)/2.) * separation_sd * sd
        means = np.tile(offsets[:, None], (1, d))
        return Dgm2SynthSpec(
            M, K, T, d, means, emission_var, rho, gamma, seed=seed)

    @property
    def transition_matrix(self):
        return sticky_transition_matrix(self.K, self.rho)


def generate_dgm2_data(spec):
    """Generates a dynamic Gaussian mixture data set by ancestral sampling.

    The chain state starts as ``z_1 ~ p(mu)`` and moves as
    ``z_{t+1} ~ P[z_t]``. The emitting component is drawn from
    ``psi_{t+1} = (1 - gamma) P[z_t] + gamma p(mu)`` (with ``psi_1 = p(mu)``)
    and the value from the Gaussian of that component.

    Returns
    -------
    data : TimeSeriesSet
        The (M, d, T)-shaped complete data set on the grid 1..T.
    trajectories : list of ClusterTrajectory
        The emitting components of every individual, with the psi vectors as
        probabilities.
    """
    rng = make_rss(spec.seed).random
    (M, K, T, d) = (spec.M, spec.K, spec.T, spec.d)
    P = spec.transition_matrix
    base = np.tile(spec.base_probs, (M, 1))

    z = _draw_categorical(rng, base)
    psi = np.empty((M, T, K))
    zt = np.empty((M, T), dtype=np.int64)
    psi[:, 0] = base
    zt[:, 0] = z
    for t in range(1, T):
        p_trans = P[z]
        psi[:, t] = (1 - spec.gamma)*p_trans + spec.gamma*base
        zt[:, t] = _draw_categorical(rng, psi[:, t])
        z = _draw_categorical(rng, p_trans)

    noise = rng.standard_normal((M, T, d)) * np.sqrt(spec.emission_var)
    values = spec.means[zt] + noise

    data = TimeSeriesSet(np.transpose(values, (0, 2, 1)), TimeGrid.range(T))
    trajectories = [
        ClusterTrajectory(psi[i], zt[i] + 1) for i in range(M)]
    return (data, trajectories)


def generate_independent_dims(specs):
    """Generates one univariate dynamic mixture data set per spec and stacks
    them as the dimensions of one multivariate data set. The dimensions are
    independent.

    Returns
    -------
    data : TimeSeriesSet
        The (M, len(specs), T)-shaped data set.
    trajectories_per_dim : list of list of ClusterTrajectory
    """
    results = [generate_dgm2_data(spec) for spec in specs]
    if(len({(r[0].n_individuals, r[0].n_times) for r in results}) != 1):
        raise ValueError('All specs must have the same M and T!')
    values = np.concatenate([r[0].values for r in results], axis=1)
    data = TimeSeriesSet(values, results[0][0].grid)
    return (data, [r[1] for r in results])


def write_synth_dataset(out_dir, data, labels, dim_names=None):
    """Writes a synthetic data set as ``data.csv`` and its ground truth as
    ``labels.csv`` into ``out_dir``.

    Returns
    -------
    data_file : str
    labels_file : str
    """
    os.makedirs(out_dir, exist_ok=True)
    data_file = os.path.join(out_dir, 'data.csv')
    labels_file = os.path.join(out_dir, 'labels.csv')
    write_csv_dataset(data, data_file, dim_names=dim_names)
    write_labels_csv(labels_file, labels, grid=data.grid)
    return (data_file, labels_file)
