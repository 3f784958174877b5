"""Binary DyBM: spiking neurons as an online logit model.

Two parameterizations are provided.

:class:`OriginalBinaryDyBM` keeps LTP weights ``U`` and LTD weights ``V`` tied
to the three eligibility traces (synaptic ``alpha``, neural ``gamma`` and the
in-flight summary ``beta``) and learns with the STDP rules.

:class:`BinaryDyBM` is the relaxed form with free lag matrices ``W[delta]`` and
one weight matrix per synaptic trace decay. Its negative energy ``m`` is the
logit of the firing probability, so learning it is logistic regression on the
features ``(x[t-1], ..., x[t-d+1], alpha_1, ..., alpha_L)``.
:meth:`OriginalBinaryDyBM.to_general` maps one onto the other.
"""

import numpy as np

from ._mean import linear_mean
from .errors import DimensionError, DomainError, InvalidParameterError
from .traces import DelayLine, TraceVector, compute_beta


def sigmoid(m):
    """Numerically stable logistic function."""
    m = np.asarray(m, dtype=float)
    z = np.exp(-np.abs(m))
    return np.where(m >= 0, 1.0 / (1.0 + z), z / (1.0 + z))


def firing_probability(m, x=None):
    """Probability of each neuron's value given its negative energy ``m``.

    Returns ``P(x_j = 1)`` when ``x`` is omitted, otherwise ``P(x_j)`` for the
    given binary ``x``. ``P(0) + P(1)`` is exactly one in floating point: the
    smaller of the two is computed directly and the larger as its complement.
    """
    m = np.asarray(m, dtype=float)
    small = sigmoid(-np.abs(m))
    p1 = np.where(m >= 0, 1.0 - small, small)
    if x is None:
        return p1
    x = _check_binary(x, m.shape)
    p0 = np.where(m >= 0, small, 1.0 - small)
    return np.where(x == 1, p1, p0)


def log_probability(m, x):
    """``sum_j log P_j(x_j)`` computed as ``m x - log(1 + exp(m))`` in log space."""
    m = np.asarray(m, dtype=float)
    x = _check_binary(x, m.shape)
    return np.sum(m * x - np.logaddexp(0.0, m), axis=-1)


def _check_binary(x, shape=None):
    x = np.asarray(x, dtype=float)
    if shape is not None and x.shape != shape:
        raise DimensionError(f"expected binary pattern of shape {shape}, got {x.shape}")
    if not np.all((x == 0) | (x == 1)):
        raise DomainError("binary DyBM patterns must contain only 0 and 1")
    return x


class BinaryDyBM:
    """Relaxed binary DyBM with lag matrices and ``L`` synaptic trace decays.

    Parameters
    ----------
    n : int
        Number of neurons.
    d : int
        Conduction delay.
    decays : sequence of float
        ``lambda_l`` for each synaptic trace.
    """

    def __init__(self, n, d, decays=()):
        self.n = int(n)
        self.d = int(d)
        self.line = DelayLine(n, d)
        self.traces = [TraceVector(n, lam) for lam in decays]
        self.b = np.zeros(n)
        self.W = np.zeros((self.d - 1, n, n))
        self.U = np.zeros((len(self.traces), n, n))

    @property
    def decays(self):
        return tuple(tr.decay for tr in self.traces)

    @property
    def alphas(self):
        if not self.traces:
            return np.zeros((0, self.n))
        return np.stack([tr.values for tr in self.traces])

    def negative_energy(self):
        """``m[t]``: the logit of each neuron firing at the next step."""
        return linear_mean(self.b, self.W, self.U, self.line.lags, self.alphas)

    def energy(self, x):
        """Total energy ``-m . x`` of the pattern ``x`` at the next step."""
        x = _check_binary(x, (self.n,))
        return -float(self.negative_energy() @ x)

    def firing_probability(self, x=None):
        return firing_probability(self.negative_energy(), x)

    def log_likelihood(self, x):
        return float(log_probability(self.negative_energy(), x))

    def gradient(self, x):
        """Gradient of the log-likelihood of ``x`` w.r.t. ``b``, ``W`` and ``U``."""
        x = _check_binary(x, (self.n,))
        r = x - sigmoid(self.negative_energy())
        return {
            "b": r,
            "W": self.line.lags[:, :, None] * r,
            "U": self.alphas[:, :, None] * r,
        }

    def update(self, x, eta):
        """Gradient-ascent step on ``log P(x | history)``; the state is not advanced."""
        g = self.gradient(x)
        self.b += eta * g["b"]
        self.W += eta * g["W"]
        self.U += eta * g["U"]

    def observe(self, x):
        x = _check_binary(x, (self.n,))
        arriving = self.line.push(x)
        for tr in self.traces:
            tr.update_synaptic(arriving)

    def learn(self, x, eta):
        self.update(x, eta)
        self.observe(x)

    def sample(self, rng):
        """Draw the next pattern, each neuron independently given the history."""
        p = self.firing_probability()
        return (rng.random(self.n) < p).astype(float)


def compute_mean_general(b, W, U, lags, alphas):
    """Negative energy of the relaxed model from explicit parameters and state."""
    return linear_mean(np.asarray(b, float), np.asarray(W, float), np.asarray(U, float),
                       np.asarray(lags, float), np.asarray(alphas, float))


class OriginalBinaryDyBM:
    """DyBM with LTP weights ``U``, LTD weights ``V`` and STDP learning.

    The energy of neuron ``j`` taking value ``x_j`` is

        E_j = -b_j x_j - sum_i u_ij alpha_i x_j + sum_i v_ij beta_i x_j + sum_k v_jk gamma_k x_j

    with ``alpha`` a synaptic trace (decay ``lam``), ``gamma`` a neural trace
    (decay ``mu``) and ``beta`` the ``mu**-delta`` weighted sum over the delay
    line. Self-connections are allowed.
    """

    def __init__(self, n, d, lam, mu):
        mu = float(mu)
        if not 0.0 < mu < 1.0:
            raise InvalidParameterError(f"LTD decay mu must lie in (0, 1), got {mu}")
        self.n = int(n)
        self.d = int(d)
        self.lam = float(lam)
        self.mu = mu
        self.line = DelayLine(n, d)
        self.alpha = TraceVector(n, lam)
        self.gamma = TraceVector(n, mu)
        self.b = np.zeros(n)
        self.U = np.zeros((n, n))
        self.V = np.zeros((n, n))

    @property
    def beta(self):
        return compute_beta(self.line, self.mu)

    def negative_energy(self):
        return self.b + self.alpha.values @ self.U - self.beta @ self.V - self.V @ self.gamma.values

    def energy(self, x):
        """Matrix form ``-b.x - alpha^T U x + beta^T V x + x^T V gamma``."""
        x = _check_binary(x, (self.n,))
        a, g = self.alpha.values, self.gamma.values
        return float(-self.b @ x - a @ self.U @ x + self.beta @ self.V @ x + x @ self.V @ g)

    def firing_probability(self, x=None):
        return firing_probability(self.negative_energy(), x)

    def log_likelihood(self, x):
        return float(log_probability(self.negative_energy(), x))

    def stdp_update(self, x, eta):
        """Apply the LTP/LTD learning rules for the observed pattern ``x``.

        The expected firing ``<X_j>`` is the exact logistic probability under the
        current state. Both LTD contributions to ``v_ij`` are applied together.
        """
        x = _check_binary(x, (self.n,))
        p = sigmoid(self.negative_energy())
        r = x - p
        alpha, beta, gamma = self.alpha.values, self.beta, self.gamma.values
        self.b += eta * r
        self.U += eta * np.outer(alpha, r)
        self.V += eta * (np.outer(beta, -r) + np.outer(-r, gamma))

    def observe(self, x):
        x = _check_binary(x, (self.n,))
        arriving = self.line.push(x)
        self.alpha.update_synaptic(arriving)
        self.gamma.update_neural(x)

    def learn(self, x, eta):
        self.stdp_update(x, eta)
        self.observe(x)

    def sample(self, rng):
        p = self.firing_probability()
        return (rng.random(self.n) < p).astype(float)

    def to_general(self):
        """Equivalent relaxed model (fresh zero state).

        ``W[delta] = -mu**-delta V - mu**delta V^T``, ``U_1 = U`` with decay
        ``lam`` and ``U_2 = -mu**d V^T`` with decay ``mu``. Replaying the same
        history through both models gives identical energies.
        """
        return reduce_original_to_general(self.b, self.U, self.V, self.lam, self.mu, self.d)


def reduce_original_to_general(b, U, V, lam, mu, d):
    """Build a :class:`BinaryDyBM` whose energy equals the original form's."""
    mu = float(mu)
    if mu <= 0:
        raise InvalidParameterError("the reduction needs mu > 0")
    b, U, V = (np.asarray(a, dtype=float) for a in (b, U, V))
    n = b.shape[0]
    if U.shape != (n, n) or V.shape != (n, n):
        raise DimensionError("U and V must be n x n")
    model = BinaryDyBM(n, d, (lam, mu))
    model.b[...] = b
    for k in range(d - 1):
        delta = k + 1
        model.W[k] = -mu ** -delta * V - mu ** delta * V.T
    model.U[0] = U
    model.U[1] = -mu ** d * V.T
    return model
