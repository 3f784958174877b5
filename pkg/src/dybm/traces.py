"""Eligibility traces and FIFO delay lines.

These hold all of the recursive state of a DyBM. Every container accepts an
optional ``batch_shape`` so that many independent streams (e.g. the runs of an
experiment) can be advanced with a single set of array operations; the values
for one stream never depend on the other streams in the batch.

Two trace recursions are used:

* synaptic (arrival) traces, ``alpha <- decay * alpha + arriving``, fed with the
  pattern leaving the delay line. After step ``t`` the value is
  ``sum_{s <= t-d+1} decay**(t-d+1-s) * x[s]``, so with ``decay = 0`` it is just
  the pattern ``x[t-d+1]``.
* neural traces, ``gamma <- decay * (gamma + fired)``, fed with the neuron's own
  pattern. After step ``t`` the value is ``sum_{s <= t} decay**(t+1-s) * x[s]``.
"""

import numpy as np

from .errors import DimensionError, InvalidParameterError


def _check_decay(decay):
    decay = float(decay)
    if not 0.0 <= decay < 1.0:
        raise InvalidParameterError(f"decay rate must lie in [0, 1), got {decay}")
    return decay


def _as_pattern(pattern, shape):
    pattern = np.asarray(pattern, dtype=float)
    if pattern.shape != shape:
        if pattern.shape[-1:] != shape[-1:]:
            raise DimensionError(f"expected pattern of shape {shape}, got {pattern.shape}")
        try:
            pattern = np.broadcast_to(pattern, shape)
        except ValueError:
            raise DimensionError(f"expected pattern of shape {shape}, got {pattern.shape}") from None
    return pattern


class TraceVector:
    """Exponentially decayed history of one value per neuron.

    Parameters
    ----------
    n : int
        Number of neurons.
    decay : float
        Decay rate in ``[0, 1)``.
    batch_shape : tuple of int
        Leading shape for independent streams.
    """

    def __init__(self, n, decay, batch_shape=(), values=None):
        self.n = int(n)
        self.decay = _check_decay(decay)
        self.batch_shape = tuple(batch_shape)
        shape = self.batch_shape + (self.n,)
        if values is None:
            self.values = np.zeros(shape)
        else:
            values = np.array(values, dtype=float)
            if values.shape != shape:
                raise DimensionError(f"trace values must have shape {shape}, got {values.shape}")
            self.values = values

    @property
    def shape(self):
        return self.values.shape

    def update_synaptic(self, arriving):
        """Decay the trace and add the pattern that just left the delay line."""
        arriving = _as_pattern(arriving, self.values.shape)
        self.values *= self.decay
        self.values += arriving
        return self.values

    def update_neural(self, fired):
        """Add the neuron's own pattern, then decay."""
        fired = _as_pattern(fired, self.values.shape)
        self.values += fired
        self.values *= self.decay
        return self.values

    def reset(self):
        self.values[...] = 0.0

    def copy(self):
        return TraceVector(self.n, self.decay, self.batch_shape, self.values.copy())

    def __repr__(self):
        return f"TraceVector(n={self.n}, decay={self.decay}, batch_shape={self.batch_shape})"


def update_synaptic_trace(trace, arriving):
    """Return a new trace advanced by one synaptic (arrival) step."""
    new = trace.copy()
    new.update_synaptic(arriving)
    return new


def update_neural_trace(trace, fired):
    """Return a new trace advanced by one neural (firing) step."""
    new = trace.copy()
    new.update_neural(fired)
    return new


class DelayLine:
    """FIFO queue of the last ``d - 1`` patterns, implemented as a ring buffer.

    Slot ``k`` (``1 <= k <= d - 1``) holds the pattern pushed ``k`` pushes ago,
    i.e. ``x[t-k]`` when the line has absorbed everything up to ``x[t-1]``.
    A line with ``d = 1`` has no slots and passes patterns straight through.

    Every pattern is stored twice, ``d - 1`` positions apart, so the slots in
    order are always one contiguous slice of the buffer.
    """

    def __init__(self, n, d, batch_shape=()):
        d = int(d)
        if d < 1:
            raise InvalidParameterError(f"conduction delay must be >= 1, got {d}")
        self.n = int(n)
        self.d = d
        self.capacity = d - 1
        self.batch_shape = tuple(batch_shape)
        self._buffer = np.zeros(self.batch_shape + (2 * self.capacity, self.n))
        # position of the most recent slot
        self._head = 0

    def push(self, pattern):
        """Insert ``pattern`` and return the evicted (oldest) pattern."""
        pattern = _as_pattern(pattern, self.batch_shape + (self.n,))
        if self.capacity == 0:
            return np.array(pattern, dtype=float)
        # the oldest slot sits just before the current head (mod capacity)
        h = self._head = (self._head - 1) % self.capacity
        evicted = self._buffer[..., h, :].copy()
        self._buffer[..., h, :] = pattern
        self._buffer[..., h + self.capacity, :] = pattern
        return evicted

    def slot(self, k):
        """Pattern pushed ``k`` steps ago (``1 <= k <= d - 1``)."""
        if not 1 <= k <= self.capacity:
            raise IndexError(f"slot {k} outside 1..{self.capacity}")
        return self._buffer[..., self._head + k - 1, :].copy()

    @property
    def lags(self):
        """Read-only view of all slots, most recent first: ``batch_shape + (d-1, n)``.

        The view is only valid until the next :meth:`push`.
        """
        view = self._buffer[..., self._head:self._head + self.capacity, :]
        view.flags.writeable = False
        return view

    def load(self, lags):
        """Overwrite the contents from an array ordered most recent first."""
        lags = np.asarray(lags, dtype=float)
        shape = self.batch_shape + (self.capacity, self.n)
        if lags.shape != shape:
            raise DimensionError(f"expected lags of shape {shape}, got {lags.shape}")
        self._head = 0
        self._buffer[..., :self.capacity, :] = lags
        self._buffer[..., self.capacity:, :] = lags

    def reset(self):
        self._buffer[...] = 0.0
        self._head = 0

    def copy(self):
        new = DelayLine(self.n, self.d, self.batch_shape)
        new._buffer = self._buffer.copy()
        new._head = self._head
        return new

    def __len__(self):
        return self.capacity

    def __repr__(self):
        return f"DelayLine(n={self.n}, d={self.d}, batch_shape={self.batch_shape})"


def push_delay_line(line, pattern):
    """Functional form of :meth:`DelayLine.push`: returns ``(new_line, evicted)``."""
    new = line.copy()
    evicted = new.push(pattern)
    return new, evicted


def compute_beta(line, mu):
    """Summary of spikes still travelling in the delay line.

    ``beta_i = sum_{delta=1}^{d-1} mu**(-delta) * x_i[t-delta]``. The weights grow
    with the lag; this is the literal exponent convention of the original
    DyBM energy and is only used by :class:`dybm.binary.OriginalBinaryDyBM`.
    """
    mu = float(mu)
    if not 0.0 < mu < 1.0:
        raise InvalidParameterError(f"beta needs mu in (0, 1), got {mu}")
    if line.capacity == 0:
        return np.zeros(line.batch_shape + (line.n,))
    weights = mu ** -np.arange(1.0, line.capacity + 1)
    return np.einsum("k,...ki->...i", weights, line.lags)
