# -*- coding: utf-8 -*-

"""Result types shared by the forecasters and the baselines.
"""

import numpy as np

from mtsclust.core.timeseries import TimeGrid


# The two-sided 95% quantile of the standard normal distribution.
Z95 = 1.96


def argmax_labels(probs):
    """Returns the 1-based argmax labels along the last axis. Ties are broken
    by the lowest index.
    """
    return np.argmax(np.asarray(probs), axis=-1).astype(np.int64) + 1


class ClusterTrajectory(object):
    """The per-timestep cluster labels of one individual together with the
    per-timestep cluster probability vectors. Labels are 1-based.
    """
    def __init__(self, probs, labels=None):
        """
        Parameters
        ----------
        probs : (T, K)-shaped array_like
            The cluster probability vectors. Each row lies on the simplex.
        labels : (T,)-shaped array_like of int | None
            The labels. If None, the argmax of ``probs`` is used.
        """
        super().__init__()

        probs = np.array(probs, dtype=np.float64, ndmin=2)
        if(probs.ndim != 2):
            raise ValueError('The probs array must have the shape (T, K)!')
        if(labels is None):
            labels = argmax_labels(probs)
        labels = np.array(labels, dtype=np.int64, ndmin=1)
        if(len(labels) != probs.shape[0]):
            raise ValueError(
                'The number of labels must match the number of probability '
                'vectors!')
        if(np.any(labels < 0)):
            raise ValueError('The labels must be non-negative!')

        self._probs = probs
        self._labels = labels

    @property
    def probs(self):
        return self._probs

    @property
    def labels(self):
        return self._labels

    def __len__(self):
        return len(self._labels)

    def __repr__(self):
        return f'ClusterTrajectory(labels={self._labels.tolist()})'


class ForecastResult(object):
    """The predictive distribution of M individuals in d dimensions over a
    horizon of H time points.

    Attributes
    ----------
    grid : TimeGrid | None
        The forecast time points. None for an empty horizon.
    mean : (M, d, H)-shaped ndarray
        The predictive means.
    variance : (M, d, H)-shaped ndarray
        The predictive variances.
    lower, upper : (M, d, H)-shaped ndarray
        The 95% credibility band.
    memberships : (M, K)-shaped ndarray | None
        The static cluster memberships, if the model clusters whole series.
    trajectories : list of ClusterTrajectory | None
        The per-timestep cluster trajectories, if the model clusters time
        points.
    cluster_mean, cluster_variance : (M, K, d, H)-shaped ndarray | None
        The per-cluster predictive distributions, if available.
    """
    def __init__(self, grid, mean, variance, lower=None, upper=None,
                 memberships=None, trajectories=None, cluster_mean=None,
                 cluster_variance=None):
        super().__init__()

        mean = np.array(mean, dtype=np.float64)
        variance = np.array(variance, dtype=np.float64)
        if(mean.ndim != 3 or mean.shape != variance.shape):
            raise ValueError(
                'The mean and variance arrays must have the same (M, d, H) '
                'shape!')
        if(grid is not None and not isinstance(grid, TimeGrid)):
            grid = TimeGrid(grid)
        if(grid is not None and len(grid) != mean.shape[2]):
            raise ValueError('The grid length does not match the horizon!')

        sd = np.sqrt(np.clip(variance, 0, None))
        if(lower is None):
            lower = mean - Z95*sd
        if(upper is None):
            upper = mean + Z95*sd

        self.grid = grid
        self.mean = mean
        self.variance = variance
        self.lower = np.asarray(lower, dtype=np.float64)
        self.upper = np.asarray(upper, dtype=np.float64)
        self.memberships = memberships
        self.trajectories = trajectories
        self.cluster_mean = cluster_mean
        self.cluster_variance = cluster_variance

    @property
    def n_individuals(self):
        return self.mean.shape[0]

    @property
    def horizon(self):
        return self.mean.shape[2]

    @property
    def labels(self):
        """(read-only) The 1-based static labels, or None.
        """
        if(self.memberships is None):
            return None
        return argmax_labels(self.memberships)

    def cluster_curves(self, i, k, dim=0):
        """Returns the predictive mean and 95% band of individual ``i`` under
        cluster ``k`` (0-based) in the given dimension.

        Returns
        -------
        mean, lower, upper : (H,)-shaped ndarrays
        """
        if(self.cluster_mean is None):
            raise ValueError('This forecast has no per-cluster predictions!')
        m = self.cluster_mean[i, k, dim]
        sd = np.sqrt(np.clip(self.cluster_variance[i, k, dim], 0, None))
        return (m, m - Z95*sd, m + Z95*sd)

    def coverage(self, truth):
        """Returns the fraction of finite ``truth`` values that lie within the
        95% band.
        """
        truth = np.asarray(truth, dtype=np.float64)
        m = np.isfinite(truth)
        inside = (truth >= self.lower) & (truth <= self.upper)
        return float(np.mean(inside[m]))
