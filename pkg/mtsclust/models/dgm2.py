# -*- coding: utf-8 -*-

"""The dgm2 module implements the dynamic clustering forecaster: a deep
generative model with a Gaussian mixture whose component probabilities change
at every time step.

Generative model of one individual:

1. the transition network gives ``p_trans_{t+1} = softmax(MLP(h_t))`` with
   ``h_t = LSTM(z_t, h_{t-1})``;
2. the transition is blended with the static mixture probabilities,
   ``psi_{t+1} = (1 - gamma) p_trans_{t+1} + gamma p(mu)``;
3. the emitting component is drawn from ``psi_{t+1}``;
4. the value is drawn from the Gaussian of that component.

The posterior of the components is approximated by the inference network
``q_t = softmax(MLP(h~_t))`` with ``h~_t = LSTM(x_t, h~_{t-1})``. Training
uses the expectations of the component indicators, so that the bound and its
gradients are exact. All computations run in float64 on the CPU.
"""

import json
import time

import numpy as np
import torch
from sklearn.cluster import KMeans

from mtsclust.core.config import CFG
from mtsclust.core.debugging import (
    get_logger,
    is_tracing_enabled
)
from mtsclust.core.forecast import (
    ClusterTrajectory,
    ForecastResult
)
from mtsclust.core.py import (
    float_cast,
    int_cast,
    positive_int_cast
)
from mtsclust.core.random import make_rss
from mtsclust.core.timeseries import (
    TimeGrid,
    TimeSeriesSet
)


logger = get_logger(__name__)

DTYPE = torch.float64

MODEL_FORMAT = 'mtsclust.dgm2'
MODEL_FORMAT_VERSION = 1

_LOG_2PI = float(np.log(2*np.pi))


class InvalidGammaError(ValueError):
    """Raised when the mixture adjustment weight is outside [0, 1].
    """
    pass


class NonFiniteLossError(FloatingPointError):
    """Raised when the bound or one of its terms is not finite.
    """
    pass


class IncompleteGridError(ValueError):
    """Raised when the data has unobserved entries.
    """
    pass


def check_gamma(gamma):
    gamma = float_cast(gamma, 'gamma must be castable to float!')
    if(not (0 <= gamma <= 1)):
        raise InvalidGammaError(f'gamma must lie within [0, 1]! Got {gamma}.')
    return gamma


class RecurrentCell(torch.nn.Module):
    """An LSTM cell with the gates (input, forget, cell, output).
    """
    def __init__(self, input_dim, hidden_dim):
        super().__init__()

        self.input_dim = positive_int_cast(
            input_dim, 'input_dim must be an int >= 1!')
        self.hidden_dim = positive_int_cast(
            hidden_dim, 'hidden_dim must be an int >= 1!')
        H = self.hidden_dim
        self.W_x = torch.nn.Parameter(
            torch.zeros((self.input_dim, 4*H), dtype=DTYPE))
        self.W_h = torch.nn.Parameter(torch.zeros((H, 4*H), dtype=DTYPE))
        self.b = torch.nn.Parameter(torch.zeros((4*H,), dtype=DTYPE))

    def initial_state(self, batch_size):
        """Returns the zero state (h, c) for a batch.
        """
        h = torch.zeros((batch_size, self.hidden_dim), dtype=DTYPE)
        return (h, h.clone())

    def forward(self, x, state):
        (h, c) = state
        gates = x @ self.W_x + h @ self.W_h + self.b
        (i_g, f_g, g_g, o_g) = gates.chunk(4, dim=-1)
        c_next = torch.sigmoid(f_g)*c + torch.sigmoid(i_g)*torch.tanh(g_g)
        h_next = torch.sigmoid(o_g)*torch.tanh(c_next)
        return (h_next, c_next)


class Readout(torch.nn.Module):
    """A one-hidden-layer perceptron with tanh nonlinearity, producing the
    K logits of a softmax.
    """
    def __init__(self, hidden_dim, readout_dim, K):
        super().__init__()

        self.K = K
        self.W1 = torch.nn.Parameter(
            torch.zeros((hidden_dim, readout_dim), dtype=DTYPE))
        self.b1 = torch.nn.Parameter(torch.zeros((readout_dim,), dtype=DTYPE))
        self.W2 = torch.nn.Parameter(
            torch.zeros((readout_dim, K), dtype=DTYPE))
        self.b2 = torch.nn.Parameter(torch.zeros((K,), dtype=DTYPE))

    def forward(self, h):
        return torch.tanh(h @ self.W1 + self.b1) @ self.W2 + self.b2


class MixtureParams(torch.nn.Module):
    """The K component means, the shared diagonal emission variance (stored as
    its logarithm) and the static mixture probabilities p(mu) (stored as
    logits).
    """
    def __init__(self, K, d):
        super().__init__()

        self.mu = torch.nn.Parameter(torch.zeros((K, d), dtype=DTYPE))
        self.log_var = torch.nn.Parameter(torch.zeros((d,), dtype=DTYPE))
        self.base_logits = torch.nn.Parameter(torch.zeros((K,), dtype=DTYPE))

    @property
    def var(self):
        return torch.exp(self.log_var)

    @property
    def base_probs(self):
        return torch.softmax(self.base_logits, dim=-1)


class DGM2Model(torch.nn.Module):
    """The dynamic Gaussian mixture model with its transition and inference
    networks.
    """
    def __init__(self, K, d, gamma=None, hidden_dim=None, readout_dim=None,
                 seed=None):
        super().__init__()

        cfg = CFG['dgm2']
        self.K = positive_int_cast(K, 'K must be an int >= 1!')
        self.d = positive_int_cast(d, 'd must be an int >= 1!')
        self.gamma = check_gamma(cfg['gamma'] if gamma is None else gamma)
        self.hidden_dim = positive_int_cast(
            cfg['hidden_dim'] if hidden_dim is None else hidden_dim,
            'hidden_dim must be an int >= 1!')
        self.readout_dim = positive_int_cast(
            cfg['readout_dim'] if readout_dim is None else readout_dim,
            'readout_dim must be an int >= 1!')
        self.seed = seed

        H = self.hidden_dim
        self.transition_cell = RecurrentCell(self.K, H)
        self.transition_readout = Readout(H, self.readout_dim, self.K)
        self.inference_cell = RecurrentCell(self.d, H)
        self.inference_readout = Readout(H, self.readout_dim, self.K)
        self.mixture = MixtureParams(self.K, self.d)

    def network_parameters(self):
        """Yields the weights of the four networks.
        """
        for module in (self.transition_cell, self.transition_readout,
                       self.inference_cell, self.inference_readout):
            yield from module.parameters()

    def init_weights(self, rss, scale):
        """Draws the network weights uniformly from [-scale, scale].
        """
        with torch.no_grad():
            for p in self.network_parameters():
                p.copy_(torch.from_numpy(
                    rss.random.uniform(-scale, scale, size=tuple(p.shape))))

    def to_dict(self):
        return {
            'format': MODEL_FORMAT,
            'version': MODEL_FORMAT_VERSION,
            'K': self.K,
            'd': self.d,
            'gamma': self.gamma,
            'hidden_dim': self.hidden_dim,
            'readout_dim': self.readout_dim,
            'seed': self.seed,
            'parameters': {
                name: p.detach().numpy().tolist()
                for (name, p) in self.state_dict().items()
            }
        }

    @staticmethod
    def from_dict(d):
        if(d.get('format') != MODEL_FORMAT):
            raise ValueError(
                f'The model format "{d.get("format")}" is not '
                f'"{MODEL_FORMAT}"!')
        model = DGM2Model(
            d['K'], d['d'], gamma=d['gamma'], hidden_dim=d['hidden_dim'],
            readout_dim=d['readout_dim'], seed=d['seed'])
        model.load_state_dict({
            name: torch.tensor(value, dtype=DTYPE)
            for (name, value) in d['parameters'].items()
        })
        return model


def save_model(model, pathfilename):
    """Saves the model as JSON text. The document holds K, d, gamma, the
    network widths, the seed and every weight tensor as nested lists, keyed by
    its parameter name.
    """
    with open(pathfilename, 'w') as fp:
        json.dump(model.to_dict(), fp)


def load_model(pathfilename):
    """Loads a model saved by :func:`save_model`.
    """
    with open(pathfilename) as fp:
        return DGM2Model.from_dict(json.load(fp))


class DGM2Config(object):
    """The training settings. Settings that are None are taken from
    ``CFG['dgm2']``.
    """
    def __init__(self, hidden_dim=None, readout_dim=None, gamma=None,
                 learning_rate=None, batch_size=None, n_epochs=None,
                 init_scale=None, seed=None):
        super().__init__()

        cfg = CFG['dgm2']
        self.hidden_dim = positive_int_cast(
            cfg['hidden_dim'] if hidden_dim is None else hidden_dim,
            'hidden_dim must be an int >= 1!')
        self.readout_dim = positive_int_cast(
            cfg['readout_dim'] if readout_dim is None else readout_dim,
            'readout_dim must be an int >= 1!')
        self.gamma = check_gamma(cfg['gamma'] if gamma is None else gamma)
        self.learning_rate = float_cast(
            cfg['learning_rate'] if learning_rate is None else learning_rate,
            'learning_rate must be a float!')
        self.batch_size = positive_int_cast(
            cfg['batch_size'] if batch_size is None else batch_size,
            'batch_size must be an int >= 1!')
        self.n_epochs = positive_int_cast(
            cfg['n_epochs'] if n_epochs is None else n_epochs,
            'n_epochs must be an int >= 1!', allow_zero=True)
        self.init_scale = float_cast(
            cfg['init_scale'] if init_scale is None else init_scale,
            'init_scale must be a float!')
        self.seed = int_cast(seed, 'seed must be None or an int!',
                             allow_None=True)


class TrainReport(object):
    """The report of a training run.

    Attributes
    ----------
    loss_trace : list of float
        The mean negative ELBO per individual of every epoch.
    elbo_initial : float
        The mean ELBO per individual before training.
    elbo_final : float
        The mean ELBO per individual after training.
    wall_clock_seconds : float
    n_epochs : int
    """
    def __init__(self, loss_trace, elbo_initial, elbo_final,
                 wall_clock_seconds, n_epochs):
        super().__init__()

        self.loss_trace = list(loss_trace)
        self.elbo_initial = elbo_initial
        self.elbo_final = elbo_final
        self.wall_clock_seconds = wall_clock_seconds
        self.n_epochs = n_epochs


def _to_tensor(x):
    if(isinstance(x, torch.Tensor)):
        return x.to(DTYPE)
    return torch.as_tensor(np.asarray(x, dtype=np.float64))


def _to_state(h):
    if(h is None):
        return None
    return tuple(_to_tensor(v) for v in h)


def _numpy_state(h):
    return tuple(v.detach().numpy() for v in h)


def dynamic_mixture_adjust(p_trans, base, gamma):
    """Blends the transition probabilities with the static mixture
    probabilities, ``psi = (1 - gamma) * p_trans + gamma * base``.

    Parameters
    ----------
    p_trans : array_like | torch.Tensor
        The transition probabilities (..., K).
    base : array_like | torch.Tensor
        The static mixture probabilities (K,).
    gamma : float
        The weight in [0, 1] of the static probabilities.

    Raises
    ------
    InvalidGammaError
        If gamma is outside [0, 1].
    """
    gamma = check_gamma(gamma)
    if(not isinstance(p_trans, torch.Tensor)):
        p_trans = np.asarray(p_trans, dtype=np.float64)
        base = np.asarray(base, dtype=np.float64)
    return (1 - gamma)*p_trans + gamma*base


def _transition_step(model, z_prev, h_prev):
    h_next = model.transition_cell(z_prev, h_prev)
    p_trans = torch.softmax(model.transition_readout(h_next[0]), dim=-1)
    return (p_trans, h_next)


def _initial_transition(model, batch_size):
    h0 = model.transition_cell.initial_state(batch_size)
    p_trans = torch.softmax(model.transition_readout(h0[0]), dim=-1)
    return (p_trans, h0)


def _inference_step(model, x, h_prev):
    h_next = model.inference_cell(x, h_prev)
    q = torch.softmax(model.inference_readout(h_next[0]), dim=-1)
    return (q, h_next)


def transition_step(model, z_prev_probs, h_prev=None):
    """Advances the transition cell on the (soft) component indicator of the
    previous step and reads out the transition probabilities.

    Parameters
    ----------
    model : DGM2Model
    z_prev_probs : (K,) | (B, K)-shaped array_like
        The component probabilities of the previous step.
    h_prev : 2-tuple of ndarray | None
        The (h, c) state of the cell. None means the zero state.

    Returns
    -------
    p_trans : ndarray
        The transition probabilities.
    h_next : 2-tuple of ndarray
        The advanced (h, c) state.
    """
    z = _to_tensor(z_prev_probs)
    squeeze = (z.ndim == 1)
    z = z.reshape(-1, model.K)
    h = _to_state(h_prev)
    if(h is None):
        h = model.transition_cell.initial_state(z.shape[0])
    with torch.no_grad():
        (p, h_next) = _transition_step(model, z, h)
    p = p.numpy()
    h_next = _numpy_state(h_next)
    if(squeeze):
        return (p[0], tuple(v[0] for v in h_next))
    return (p, h_next)


def inference_step(model, x_t, h_prev=None):
    """Advances the inference cell on the observation ``x_t`` and reads out
    the approximate posterior component probabilities.

    Returns
    -------
    q_probs : ndarray
    h_next : 2-tuple of ndarray
    """
    x = _to_tensor(x_t)
    squeeze = (x.ndim == 1)
    x = x.reshape(-1, model.d)
    if(not torch.all(torch.isfinite(x))):
        raise ValueError('The observation must be finite!')
    h = _to_state(h_prev)
    if(h is None):
        h = model.inference_cell.initial_state(x.shape[0])
    with torch.no_grad():
        (q, h_next) = _inference_step(model, x, h)
    q = q.numpy()
    h_next = _numpy_state(h_next)
    if(squeeze):
        return (q[0], tuple(v[0] for v in h_next))
    return (q, h_next)


def emission_params(model, z_probs, mode='soft'):
    """Returns the emission mean and variance for the component probabilities
    ``z_probs``. The hard mode takes the mean of the most probable component,
    the soft mode the probability-weighted mean. The variance is the shared
    emission variance in both modes.

    Returns
    -------
    mean : (d,)-shaped ndarray
    var : (d,)-shaped ndarray
    """
    z = np.asarray(z_probs, dtype=np.float64)
    mu = model.mixture.mu.detach().numpy()
    var = model.mixture.var.detach().numpy()
    if(mode == 'hard'):
        mean = mu[int(np.argmax(z))].copy()
    elif(mode == 'soft'):
        mean = z @ mu
    else:
        raise ValueError(f'The mode must be "soft" or "hard"! Got "{mode}".')
    return (mean, var.copy())


def _check_complete(X):
    if(not torch.all(torch.isfinite(X))):
        raise IncompleteGridError(
            'The series must be completely observed!')


def _as_batch(series):
    """Converts a TimeSeriesSet, a (d, T) array or an (M, d, T) array into the
    (M, T, d)-shaped tensor of the batch computations.
    """
    if(isinstance(series, TimeSeriesSet)):
        if(not series.is_complete):
            raise IncompleteGridError(
                'The data set must be completely observed!')
        arr = series.values
    else:
        arr = np.asarray(series, dtype=np.float64)
        if(arr.ndim == 2):
            arr = arr[None]
    X = torch.as_tensor(np.ascontiguousarray(np.transpose(arr, (0, 2, 1))))
    _check_complete(X)
    return X


def _filter(model, X):
    """Runs the inference network over the (B, T, d) batch.

    Returns
    -------
    q : (B, T, K) tensor
    h_inf : the final inference state
    """
    (B, T, _) = X.shape
    h = model.inference_cell.initial_state(B)
    q_list = []
    for t in range(T):
        (q, h) = _inference_step(model, X[:, t], h)
        q_list.append(q)
    return (torch.stack(q_list, dim=1), h)


def _batch_elbo(model, X):
    """Computes the ELBO of every series of the (B, T, d) batch.

    The bound is ``sum_t sum_k q_tk log N(x_t | mu_k, sigma^2) -
    sum_t KL(q_t || psi_t)`` where the transition cell consumes the posterior
    probabilities of the previous step.
    """
    (B, T, _) = X.shape
    (q, _) = _filter(model, X)

    mix = model.mixture
    var = mix.var
    base = mix.base_probs
    # (B, T, K) Gaussian log densities of every component.
    diff = X[:, :, None, :] - mix.mu[None, None, :, :]
    log_norm = -0.5*torch.sum(
        diff**2/var + mix.log_var + _LOG_2PI, dim=-1)

    (p_trans, h) = _initial_transition(model, B)
    kl = torch.zeros((B,), dtype=DTYPE)
    for t in range(T):
        if(t > 0):
            (p_trans, h) = _transition_step(model, q[:, t-1], h)
        psi = dynamic_mixture_adjust(p_trans, base, model.gamma)
        q_t = q[:, t]
        kl = kl + torch.sum(
            torch.special.xlogy(q_t, q_t) - torch.special.xlogy(q_t, psi),
            dim=-1)

    recon = torch.sum(q * log_norm, dim=(1, 2))
    return recon - kl


def elbo(model, series):
    """Computes the ELBO of one completely observed series.

    Parameters
    ----------
    model : DGM2Model
    series : (d, T)-shaped array_like
        The observations of one individual.

    Returns
    -------
    value : float

    Raises
    ------
    IncompleteGridError
        If the series has unobserved (non-finite) entries.
    NonFiniteLossError
        If the bound is not finite.
    """
    X = _as_batch(series)
    with torch.no_grad():
        value = _batch_elbo(model, X)
    if(not torch.all(torch.isfinite(value))):
        raise NonFiniteLossError('The ELBO is not finite!')
    return float(value[0])


def _init_mixture(model, X, seed):
    """Initializes the component means by k-means on all time slices, the
    emission variance by the mean within-component variance and p(mu) to be
    uniform.
    """
    slices = X.reshape(-1, model.d).numpy()
    if(model.K == 1):
        centers = np.mean(slices, axis=0, keepdims=True)
        labels = np.zeros((len(slices),), dtype=np.int64)
    else:
        km = KMeans(n_clusters=model.K, n_init=10, random_state=seed)
        labels = km.fit_predict(slices)
        centers = km.cluster_centers_
    resid = slices - centers[labels]
    var = np.maximum(np.mean(resid**2, axis=0), 1e-3)
    with torch.no_grad():
        model.mixture.mu.copy_(torch.from_numpy(np.asarray(centers)))
        model.mixture.log_var.copy_(torch.from_numpy(np.log(var)))
        model.mixture.base_logits.zero_()


def train(data, K, config=None):
    """Trains a DGM2Model by maximizing the mean ELBO per individual with
    mini-batch Adam.

    Parameters
    ----------
    data : TimeSeriesSet
        The completely observed training data.
    K : int
        The number of mixture components.
    config : DGM2Config | None
        The training settings.

    Returns
    -------
    model : DGM2Model
    report : TrainReport

    Raises
    ------
    IncompleteGridError
        If the data has unobserved entries.
    NonFiniteLossError
        If the loss becomes non-finite.
    """
    if(config is None):
        config = DGM2Config()
    K = positive_int_cast(K, 'K must be an int >= 1!')

    t_start = time.perf_counter()

    X = _as_batch(data)
    (M, _, d) = X.shape
    rss = make_rss(config.seed)

    model = DGM2Model(
        K, d, gamma=config.gamma, hidden_dim=config.hidden_dim,
        readout_dim=config.readout_dim, seed=config.seed)
    model.init_weights(rss, config.init_scale)
    _init_mixture(model, X, config.seed)

    with torch.no_grad():
        elbo_initial = float(torch.mean(_batch_elbo(model, X)))
    if(not np.isfinite(elbo_initial)):
        raise NonFiniteLossError('The initial ELBO is not finite!')

    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    tracing = is_tracing_enabled()

    loss_trace = []
    for epoch in range(config.n_epochs):
        perm = rss.random.permutation(M)
        epoch_loss = 0.
        for start in range(0, M, config.batch_size):
            idx = torch.as_tensor(perm[start:start+config.batch_size])
            optimizer.zero_grad()
            loss = -torch.mean(_batch_elbo(model, X[idx]))
            if(not torch.isfinite(loss)):
                raise NonFiniteLossError(
                    f'The loss became non-finite in epoch {epoch+1}! Consider '
                    'a smaller learning rate.')
            loss.backward()
            optimizer.step()
            epoch_loss += float(loss) * len(idx)
        loss_trace.append(epoch_loss / M)
        if(tracing):
            logger.debug('DGM2 epoch %d: loss=%.8g', epoch+1, loss_trace[-1])

    with torch.no_grad():
        elbo_final = float(torch.mean(_batch_elbo(model, X)))

    report = TrainReport(
        loss_trace=loss_trace,
        elbo_initial=elbo_initial,
        elbo_final=elbo_final,
        wall_clock_seconds=time.perf_counter() - t_start,
        n_epochs=config.n_epochs)

    logger.info(
        'DGM2 training with K=%d on M=%d individuals: %d epochs, ELBO '
        '%.6g -> %.6g, %.3f sec.', K, M, config.n_epochs, elbo_initial,
        elbo_final, report.wall_clock_seconds)

    return (model, report)


def _filter_history(model, X):
    """Runs both networks over the (B, T_h, d) history.

    Returns
    -------
    q : (B, T_h, K) tensor
        The posterior probabilities.
    psi : (B, T_h, K) tensor
        The adjusted prior probabilities.
    z_last : (B, K) tensor
        The component probabilities that drive the next transition step.
    h : the transition state before the next transition step
    """
    (B, T, _) = X.shape
    (q, _) = _filter(model, X)
    base = model.mixture.base_probs
    (p_trans, h) = _initial_transition(model, B)
    psi_list = []
    for t in range(T):
        if(t > 0):
            (p_trans, h) = _transition_step(model, q[:, t-1], h)
        psi_list.append(dynamic_mixture_adjust(p_trans, base, model.gamma))
    psi = (torch.stack(psi_list, dim=1) if T > 0
           else torch.zeros((B, 0, model.K), dtype=DTYPE))
    z_last = q[:, -1] if T > 0 else None
    return (q, psi, z_last, h)


def _draw(rng, probs):
    cum = np.cumsum(probs, axis=-1)
    u = rng.random_sample(probs.shape[:-1])
    idx = np.sum(cum <= u[..., None]*cum[..., -1:], axis=-1)
    return np.minimum(idx, probs.shape[-1]-1)


def _expected_rollout(model, z_prev, h, M, horizon, max_branches):
    """Rolls the transition network forward over every path of drawn
    components and returns the (M, horizon, K) path-averaged adjusted prior
    probabilities.

    The first step consumes ``z_prev``. Every later step branches on the
    one-hot component drawn from the transition probabilities, each branch
    carrying its path probability. Beyond ``max_branches`` paths per
    individual only the most probable ones are kept and renormalized.
    """
    K = model.K
    base = model.mixture.base_probs
    eye = np.eye(K)
    psi_future = np.empty((M, horizon, K))
    # Branches are stored individual-major, i.e. row m*B + b.
    B = 1
    w = np.ones((M, 1))
    z_b = z_prev
    for s in range(horizon):
        if(z_b is None):
            (p_trans, h) = _initial_transition(model, M)
        else:
            (p_trans, h) = _transition_step(model, z_b, h)
        psi = dynamic_mixture_adjust(p_trans, base, model.gamma).numpy()
        psi_future[:, s] = np.einsum('mb,mbk->mk', w, psi.reshape(M, B, K))
        if(s + 1 == horizon):
            break

        w = (w[:, :, None] * p_trans.numpy().reshape(M, B, K)).reshape(
            M, B*K)
        rows = np.repeat(np.arange(M*B), K)
        z_idx = np.tile(np.arange(K), M*B)
        B *= K
        if(B > max_branches):
            keep = np.sort(
                np.argsort(-w, axis=1, kind='stable')[:, :max_branches],
                axis=1)
            w = np.take_along_axis(w, keep, axis=1)
            w /= np.sum(w, axis=1, keepdims=True)
            flat = (np.arange(M)[:, None]*B + keep).ravel()
            rows = rows[flat]
            z_idx = z_idx[flat]
            B = max_branches
            if(is_tracing_enabled()):
                logger.debug(
                    'Soft forecast step %d: pruned to the %d most probable '
                    'component paths.', s+2, B)
        index = torch.as_tensor(rows)
        h = tuple(v[index] for v in h)
        z_b = torch.as_tensor(eye[z_idx])

    return psi_future


def forecast(model, history, horizon, mode='soft', n_samples=1000, rss=None,
             grid=None, max_branches=None):
    """Forecasts the next ``horizon`` time points of every individual.

    The inference network filters the history. The transition network is then
    rolled forward. The soft mode computes the expectation over the paths of
    drawn components exactly, by following every path with its probability,
    and reports the mixture mean and variance. The sample mode averages
    ``n_samples`` ancestral rollouts and reports their empirical variance.
    Both modes feed the last posterior probabilities of the history into the
    first forecast step.

    Parameters
    ----------
    model : DGM2Model
    history : TimeSeriesSet | (d, T_h) | (M, d, T_h)-shaped array_like
        The completely observed history.
    horizon : int
        The number of forecast steps >= 0.
    mode : str
        Either 'soft' or 'sample'.
    n_samples : int
        The number of rollouts of the sample mode.
    rss : RandomStateService | int | None
        The random state of the sample mode.
    grid : TimeGrid | None
        The forecast time points. If None, they continue the history grid.
    max_branches : int | None
        The number of component paths per individual the soft mode follows at
        most. The expectation is exact as long as ``K**(horizon-1)`` does not
        exceed it. None takes ``CFG['dgm2']['forecast_max_branches']``.

    Returns
    -------
    result : ForecastResult
        The forecast. Its trajectories cover the history (argmax of q) and the
        forecast steps (argmax of psi).
    """
    horizon = positive_int_cast(
        horizon, 'The horizon must be an int >= 0!', allow_zero=True)
    if(mode not in ('soft', 'sample')):
        raise ValueError(f'The mode must be "soft" or "sample"! Got "{mode}".')

    X = _as_batch(history)
    (M, T_h, d) = X.shape
    if(grid is None and horizon > 0):
        last = (history.grid.points[-1] if isinstance(history, TimeSeriesSet)
                else T_h)
        grid = TimeGrid(np.arange(last+1, last+1+horizon))

    mix = model.mixture
    with torch.no_grad():
        (q, _, z_prev, h) = _filter_history(model, X)
        base = mix.base_probs
        mu = mix.mu.numpy()
        var = mix.var.numpy()

        psi_future = np.empty((M, horizon, model.K))
        mean = np.empty((M, d, horizon))
        variance = np.empty((M, d, horizon))

        if(mode == 'soft'):
            if(max_branches is None):
                max_branches = CFG['dgm2']['forecast_max_branches']
            max_branches = positive_int_cast(
                max_branches, 'max_branches must be an int >= 1!')
            psi_future = _expected_rollout(
                model, z_prev, h, M, horizon, max_branches)
            for s in range(horizon):
                psi_np = psi_future[:, s]
                m = psi_np @ mu
                second = psi_np @ (mu**2) + var[None, :]
                mean[:, :, s] = m
                variance[:, :, s] = np.clip(second - m**2, 0, None)
        elif(horizon > 0):
            rng = make_rss(rss).random
            S = positive_int_cast(n_samples, 'n_samples must be an int >= 1!')
            eye = np.eye(model.K)
            h_s = tuple(v.repeat_interleave(S, dim=0) for v in h)
            z_s = (z_prev.repeat_interleave(S, dim=0)
                   if z_prev is not None else None)
            x_sum = np.zeros((M, d, horizon))
            x_sq = np.zeros((M, d, horizon))
            psi_sum = np.zeros((M, horizon, model.K))
            for s in range(horizon):
                if(z_s is None):
                    (p_trans, h_s) = _initial_transition(model, M*S)
                else:
                    (p_trans, h_s) = _transition_step(model, z_s, h_s)
                psi = dynamic_mixture_adjust(
                    p_trans, base, model.gamma).numpy()
                z = _draw(rng, p_trans.numpy())
                z_tilde = _draw(rng, psi)
                x = mu[z_tilde] + np.sqrt(var)[None, :] * \
                    rng.standard_normal((M*S, d))
                x = x.reshape(M, S, d)
                x_sum[:, :, s] = x.sum(axis=1)
                x_sq[:, :, s] = (x**2).sum(axis=1)
                psi_sum[:, s] = psi.reshape(M, S, model.K).mean(axis=1)
                z_s = torch.as_tensor(eye[z])
            mean = x_sum / S
            variance = np.clip(x_sq / S - mean**2, 0, None) * S / max(S-1, 1)
            psi_future = psi_sum

    q_np = q.numpy()
    trajectories = [
        ClusterTrajectory(np.concatenate((q_np[i], psi_future[i]), axis=0))
        for i in range(M)
    ]
    return ForecastResult(
        grid, mean, variance, trajectories=trajectories)


def cluster_trajectory(model, series):
    """Computes the per-timestep cluster trajectory of one completely observed
    (d, T) series: the posterior probabilities q_t and their argmax labels.
    """
    X = _as_batch(series)
    with torch.no_grad():
        (q, _) = _filter(model, X)
    return ClusterTrajectory(q[0].numpy())


def batch_cluster_trajectories(model, data):
    """Computes the cluster trajectories of every individual of a data set.

    Returns
    -------
    trajectories : list of ClusterTrajectory
    """
    X = _as_batch(data)
    with torch.no_grad():
        (q, _) = _filter(model, X)
    q = q.numpy()
    return [ClusterTrajectory(q[i]) for i in range(q.shape[0])]
