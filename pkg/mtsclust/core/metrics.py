# -*- coding: utf-8 -*-

"""Evaluation metrics: forecast errors (RMSE, MAE) and partition agreement
(adjusted Rand index) for static and per-timestep partitions.
"""

import numpy as np
from sklearn.metrics import adjusted_rand_score

from mtsclust.core.forecast import ClusterTrajectory


class LengthMismatchError(ValueError):
    """Raised when two compared sequences have different lengths.
    """
    pass


class EmptyInputError(ValueError):
    """Raised when a metric is requested for empty input.
    """
    pass


class TimeOutOfRangeError(IndexError):
    """Raised when a time position is not covered by all trajectories.
    """
    pass


def _check_pair(pred, truth):
    pred = np.atleast_1d(np.asarray(pred, dtype=np.float64)).ravel()
    truth = np.atleast_1d(np.asarray(truth, dtype=np.float64)).ravel()
    if(len(pred) != len(truth)):
        raise LengthMismatchError(
            f'The prediction has {len(pred)} values, the truth {len(truth)}!')
    if(len(pred) == 0):
        raise EmptyInputError('The prediction and truth must not be empty!')
    if(not (np.all(np.isfinite(pred)) and np.all(np.isfinite(truth)))):
        raise ValueError('The prediction and truth must be finite!')
    return (pred, truth)


def rmse(pred, truth):
    """The root mean squared error ``sqrt(mean((pred - truth)^2))``.
    """
    (pred, truth) = _check_pair(pred, truth)
    return float(np.sqrt(np.mean((pred - truth)**2)))


def mae(pred, truth):
    """The mean absolute error ``mean(|pred - truth|)``.
    """
    (pred, truth) = _check_pair(pred, truth)
    return float(np.mean(np.abs(pred - truth)))


def per_dimension_errors(pred, truth):
    """Computes RMSE and MAE per dimension and their arithmetic means across
    dimensions. Entries with a non-finite truth (unobserved) are skipped.

    Parameters
    ----------
    pred : (M, d, H)-shaped array_like
    truth : (M, d, H)-shaped array_like

    Returns
    -------
    rmse_per_dim : (d,)-shaped ndarray
    mae_per_dim : (d,)-shaped ndarray
    rmse_avg : float
    mae_avg : float
    """
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if(pred.shape != truth.shape):
        raise LengthMismatchError(
            f'The prediction shape {pred.shape} does not match the truth '
            f'shape {truth.shape}!')
    d = pred.shape[1]
    rmse_d = np.empty((d,))
    mae_d = np.empty((d,))
    for j in range(d):
        m = np.isfinite(truth[:, j])
        rmse_d[j] = rmse(pred[:, j][m], truth[:, j][m])
        mae_d[j] = mae(pred[:, j][m], truth[:, j][m])
    return (rmse_d, mae_d, float(np.mean(rmse_d)), float(np.mean(mae_d)))


def ari(a, b):
    """The adjusted Rand index of two partitions of the same items. Two
    partitions that both put all items into one cluster have an index of 1.

    Raises
    ------
    LengthMismatchError
        If the partitions have different lengths.
    """
    a = np.asarray(a, dtype=np.int64).ravel()
    b = np.asarray(b, dtype=np.int64).ravel()
    if(len(a) != len(b)):
        raise LengthMismatchError(
            f'The partitions have different lengths ({len(a)} and {len(b)})!')
    if(len(a) < 2):
        raise EmptyInputError('The partitions must have at least 2 items!')
    return float(adjusted_rand_score(a, b))


def per_timestep_partition(trajectories, t):
    """Extracts the label of every individual at the time position ``t``.

    Parameters
    ----------
    trajectories : sequence of ClusterTrajectory
    t : int
        The 0-based time position.

    Returns
    -------
    labels : (M,)-shaped int64 ndarray

    Raises
    ------
    TimeOutOfRangeError
        If a trajectory does not cover the time position.
    """
    if(t < 0 or any(t >= len(tr) for tr in trajectories)):
        raise TimeOutOfRangeError(
            f'The time position {t} is not covered by all trajectories!')
    return np.array([tr.labels[t] for tr in trajectories], dtype=np.int64)


def mean_ari_over_time(trajectories_a, trajectories_b):
    """Computes the ARI between two sets of trajectories of the same
    individuals at every time position, and its mean.

    Returns
    -------
    ari_per_t : list of float
    ari_mean : float
    """
    if(len(trajectories_a) != len(trajectories_b)):
        raise LengthMismatchError(
            'Both sets must hold the trajectories of the same individuals!')
    T = min(min(len(tr) for tr in trajectories_a),
            min(len(tr) for tr in trajectories_b))
    ari_per_t = [
        ari(per_timestep_partition(trajectories_a, t),
            per_timestep_partition(trajectories_b, t))
        for t in range(T)
    ]
    return (ari_per_t, float(np.mean(ari_per_t)))


def product_partition(labels_a, labels_b, k_b):
    """Pairs two 1-based partitions of the same items into one partition with
    the 1-based labels ``(a - 1) * k_b + b``.
    """
    labels_a = np.asarray(labels_a, dtype=np.int64)
    labels_b = np.asarray(labels_b, dtype=np.int64)
    if(labels_a.shape != labels_b.shape):
        raise LengthMismatchError('Both partitions must have the same shape!')
    if(np.any(labels_b < 1) or np.any(labels_b > k_b) or np.any(labels_a < 1)):
        raise ValueError('The labels must be 1-based and b must be <= k_b!')
    return (labels_a - 1)*k_b + labels_b


def product_trajectories(trajectories_a, trajectories_b, k_b):
    """Combines the trajectories of two partitions of the same individuals into
    trajectories of the product partition. The probability of the pair (a, b)
    is the product of both probabilities, at the flat index ``(a-1)*k_b + b``.

    Returns
    -------
    trajectories : list of ClusterTrajectory
    """
    if(len(trajectories_a) != len(trajectories_b)):
        raise LengthMismatchError(
            'Both sets must hold the trajectories of the same individuals!')
    combined = []
    for (ta, tb) in zip(trajectories_a, trajectories_b):
        if(len(ta) != len(tb)):
            raise LengthMismatchError(
                'Paired trajectories must have the same length!')
        if(tb.probs.shape[1] != k_b):
            raise ValueError(f'The second partition must have {k_b} clusters!')
        probs = (ta.probs[:, :, None] * tb.probs[:, None, :]).reshape(
            len(ta), -1)
        combined.append(ClusterTrajectory(
            probs, product_partition(ta.labels, tb.labels, k_b)))
    return combined
