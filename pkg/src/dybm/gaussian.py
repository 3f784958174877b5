"""Gaussian DyBM: a VAR model extended with eligibility traces.

Each unit ``j`` emits ``x_j[t] ~ N(m_j[t], sigma2_j)`` independently given the
past, with the conditional mean

    m[t] = b + sum_{delta=1}^{d-1} x[t-delta] @ W[delta] + sum_l alpha_l[t-1] @ U[l]

where ``alpha_l`` is a synaptic trace with decay ``decays[l]`` fed by the
pattern leaving a delay line of length ``d - 1``. With a single decay equal to
zero the trace is exactly ``x[t-d]`` and the model is a VAR with ``d`` lags.
"""

import math

import numpy as np

from ._mean import linear_mean
from .errors import DimensionError, InvalidParameterError, NumericalError
from .traces import DelayLine, TraceVector

SIGMA2_FLOOR = 1e-8
_LOG_2PI = math.log(2.0 * math.pi)


def gaussian_log_density(x, m, sigma2):
    """Sum over units of ``log N(x_j; m_j, sigma2_j)`` (last axis)."""
    sigma2 = np.asarray(sigma2, dtype=float)
    if np.any(sigma2 <= 0):
        raise InvalidParameterError("variances must be positive")
    r = np.asarray(x, dtype=float) - m
    return np.sum(-0.5 * r * r / sigma2 - 0.5 * np.log(sigma2) - 0.5 * _LOG_2PI, axis=-1)


class GaussianDyBM:
    """Online Gaussian DyBM with ``n`` units, conduction delay ``d`` and trace decays.

    Parameters
    ----------
    n : int
        Number of units.
    d : int
        Conduction delay; the model has ``d - 1`` lag matrices.
    decays : sequence of float
        One decay rate per synaptic trace (``L = len(decays)``).
    batch_shape : tuple of int
        Train that many independent copies at once (used by the experiment
        runner). Parameters and state all gain these leading dimensions.
    sigma2_floor : float
        Lower bound applied to the variances after every update.

    Attributes
    ----------
    b : ndarray (..., n)
    W : ndarray (..., d-1, n, n)
        ``W[..., delta-1, i, j]`` weighs ``x_i[t-delta]`` in ``m_j``.
    U : ndarray (..., L, n, n)
    sigma2 : ndarray (..., n)
    """

    param_names = ("b", "sigma2", "W", "U")

    def __init__(self, n, d, decays=(), batch_shape=(), sigma2_floor=SIGMA2_FLOOR):
        if n < 1:
            raise InvalidParameterError(f"need at least one unit, got n={n}")
        if sigma2_floor <= 0:
            raise InvalidParameterError("sigma2_floor must be positive")
        self.n = int(n)
        self.d = int(d)
        self.batch_shape = tuple(batch_shape)
        self.sigma2_floor = float(sigma2_floor)
        self.line = DelayLine(n, d, self.batch_shape)
        self.traces = [TraceVector(n, lam, self.batch_shape) for lam in decays]
        bs = self.batch_shape
        self.b = np.zeros(bs + (n,))
        self.W = np.zeros(bs + (self.d - 1, n, n))
        self.U = np.zeros(bs + (len(self.traces), n, n))
        self.sigma2 = np.ones(bs + (n,))
        self.step = 0

    @property
    def decays(self):
        return tuple(tr.decay for tr in self.traces)

    @property
    def L(self):
        return len(self.traces)

    @property
    def alphas(self):
        if not self.traces:
            return np.zeros(self.batch_shape + (0, self.n))
        return np.stack([tr.values for tr in self.traces], axis=-2)

    def _check_x(self, x):
        x = np.asarray(x, dtype=float)
        shape = self.batch_shape + (self.n,)
        if x.shape != shape:
            raise DimensionError(f"expected pattern of shape {shape}, got {x.shape}")
        return x

    # --- prediction -----------------------------------------------------------

    def predict(self):
        """Conditional mean ``m[t]`` of the next pattern given the current state."""
        return linear_mean(self.b, self.W, self.U, self.line.lags, self.alphas)

    def log_density(self, x, m=None):
        """``log p(x[t] | history)`` under the current parameters."""
        x = self._check_x(x)
        if m is None:
            m = self.predict()
        return gaussian_log_density(x, m, self.sigma2)

    # --- gradients ----------------------------------------------------------

    def gradient(self, x, m=None):
        """Gradient of ``log p(x | history)``; the variance part is w.r.t. ``sigma``.

        Returns a dict with keys ``b``, ``sigma``, ``W``, ``U``.
        """
        x = self._check_x(x)
        if m is None:
            m = self.predict()
        r = x - m
        sigma = np.sqrt(self.sigma2)
        scaled = r / self.sigma2
        return {
            "b": scaled,
            "sigma": (r * r / self.sigma2 - 1.0) / sigma,
            "W": self.line.lags[..., :, :, None] * scaled[..., None, None, :],
            "U": self.alphas[..., :, :, None] * scaled[..., None, None, :],
        }

    def natural_direction(self, x, m=None):
        """Inverse-Fisher preconditioned gradient, variance part w.r.t. ``sigma2``.

        Per unit the Fisher matrix in ``(mean, variance)`` coordinates is
        ``diag(1/v, 1/(2 v**2))``; its inverse cancels the ``1/v`` factors so the
        directions are ``r * feature`` and ``r**2 - v``.
        """
        x = self._check_x(x)
        if m is None:
            m = self.predict()
        r = x - m
        return {
            "b": r,
            "sigma2": r * r - self.sigma2,
            "W": self.line.lags[..., :, :, None] * r[..., None, None, :],
            "U": self.alphas[..., :, :, None] * r[..., None, None, :],
        }

    # --- parameter updates (state is not advanced) ----------------------------------

    def _floor_variance(self):
        np.maximum(self.sigma2, self.sigma2_floor, out=self.sigma2)

    def sgd_step(self, x, eta, m=None):
        """Plain gradient ascent; ``sigma`` (not ``sigma2``) is the variance coordinate."""
        g = self.gradient(x, m)
        self.b += eta * g["b"]
        self.W += eta * g["W"]
        self.U += eta * g["U"]
        sigma = np.sqrt(self.sigma2) + eta * g["sigma"]
        self.sigma2 = sigma * sigma
        self._floor_variance()

    def natural_gradient_step(self, x, eta=None, m=None, optimizer=None):
        """Natural-gradient ascent, optionally with per-parameter rates from ``optimizer``.

        With an optimizer (e.g. :class:`dybm.optim.AdaGrad`) ``eta`` is ignored
        and each direction is passed through ``optimizer.scale(name, direction)``.
        """
        g = self.natural_direction(x, m)
        for name in self.param_names:
            if optimizer is not None:
                delta = optimizer.scale(name, g[name])
            else:
                delta = eta * g[name]
            getattr(self, name)[...] += delta
        self._floor_variance()

    # --- state ----------------------------------------------------------------

    def observe(self, x):
        """Push ``x[t]`` into the delay line and advance the traces."""
        x = self._check_x(x)
        arriving = self.line.push(x)
        for tr in self.traces:
            tr.update_synaptic(arriving)
        self.step += 1

    def learn(self, x, eta=None, rule="natural", optimizer=None):
        """One online step: predict, update parameters from the residual, advance state.

        Returns the prediction ``m[t]`` that was made before ``x[t]`` was seen.
        """
        x = self._check_x(x)
        m = self.predict()
        if not np.all(np.isfinite(m)):
            raise NumericalError(f"non-finite prediction at step {self.step}")
        if rule == "natural":
            self.natural_gradient_step(x, eta, m=m, optimizer=optimizer)
        elif rule == "sgd":
            if optimizer is not None:
                raise InvalidParameterError("the sgd rule does not take an optimizer")
            self.sgd_step(x, eta, m=m)
        else:
            raise InvalidParameterError(f"unknown learning rule {rule!r}")
        self.observe(x)
        return m

    def reset_state(self):
        self.line.reset()
        for tr in self.traces:
            tr.reset()
        self.step = 0

    # --- serialization ---------------------------------------------------------

    def state_dict(self):
        if self.batch_shape:
            raise ValueError("only unbatched models can be serialized")
        return {
            "n": self.n,
            "d": self.d,
            "decays": list(self.decays),
            "sigma2_floor": self.sigma2_floor,
            "step": self.step,
            "params": {
                "b": self.b.tolist(),
                "W": self.W.tolist(),
                "U": self.U.tolist(),
                "sigma2": self.sigma2.tolist(),
            },
            "state": {
                "lags": self.line.lags.tolist(),
                "traces": [tr.values.tolist() for tr in self.traces],
            },
        }

    @classmethod
    def from_state_dict(cls, state):
        model = cls(state["n"], state["d"], state["decays"], sigma2_floor=state["sigma2_floor"])
        params = state["params"]
        for name in ("b", "W", "U", "sigma2"):
            value = np.array(params[name], dtype=float).reshape(getattr(model, name).shape)
            setattr(model, name, value)
        model.line.load(np.array(state["state"]["lags"], dtype=float).reshape(model.d - 1, model.n))
        for tr, values in zip(model.traces, state["state"]["traces"], strict=True):
            tr.values[...] = np.array(values, dtype=float)
        model.step = int(state["step"])
        return model


def scalar_model(d, mu, b=0.0, w=None, v=0.0, batch_shape=()):
    """One-unit self-connected model ``m = b + sum_delta w[delta] x[t-delta] + v gamma``.

    ``gamma`` is the trace ``sum_{s>=d} mu**(s-d) x[t-s]``; ``w[k]`` is the
    coefficient of lag ``k + 1``. With ``mu = 0`` this is an AR(d) model.
    """
    model = GaussianDyBM(1, d, (mu,), batch_shape=batch_shape)
    model.b[...] = b
    if w is not None:
        w = np.asarray(w, dtype=float)
        if w.shape[-1] != d - 1:
            raise DimensionError(f"need {d - 1} lag coefficients, got {w.shape[-1]}")
        model.W[..., :, 0, 0] = w
    model.U[..., 0, 0, 0] = v
    return model


def var_baseline(d, n=1, batch_shape=()):
    """VAR(d) as the degenerate Gaussian DyBM whose only trace has decay 0."""
    if d < 1:
        raise InvalidParameterError(f"VAR order must be >= 1, got {d}")
    return GaussianDyBM(n, d, (0.0,), batch_shape=batch_shape)


def lagged_trace_step(gamma, mu, x_lag_d):
    """``gamma <- mu * gamma + x[t-d]``: the recursive form of ``sum_{s>=d} mu**(s-d) x[t-s]``."""
    if not 0.0 <= mu < 1.0:
        raise InvalidParameterError(f"decay must lie in [0, 1), got {mu}")
    return mu * gamma + x_lag_d
