"""AdaGrad per-parameter learning rates."""

import numpy as np

from .errors import InvalidParameterError, NumericalError


class AdaGrad:
    """Scale raw update directions by ``eta0 / (sqrt(sum of squares) + epsilon)``.

    One accumulator is kept per scalar parameter, keyed by parameter name and
    created lazily with the shape of the first direction seen for that name.
    Directions are *ascent* directions; the caller adds the scaled result.

    Parameters
    ----------
    eta0 : float
        Initial learning rate.
    epsilon : float
        Stabilizer added to the root of the accumulator.
    accumulate : bool
        With ``accumulate=False`` the accumulators stay at zero, so that
        ``epsilon=1`` turns the optimizer into plain SGD with rate ``eta0``.
    """

    def __init__(self, eta0=0.001, epsilon=1e-8, accumulate=True):
        if eta0 < 0:
            raise InvalidParameterError(f"eta0 must be >= 0, got {eta0}")
        if epsilon <= 0:
            raise InvalidParameterError(f"epsilon must be > 0, got {epsilon}")
        self.eta0 = float(eta0)
        self.epsilon = float(epsilon)
        self.accumulate = accumulate
        self.accum = {}

    def scale(self, name, raw):
        raw = np.asarray(raw, dtype=float)
        if not np.all(np.isfinite(raw)):
            raise NumericalError(f"non-finite update direction for {name!r}")
        acc = self.accum.get(name)
        if acc is None:
            acc = self.accum[name] = np.zeros(raw.shape)
        if self.accumulate:
            acc += raw * raw
        return self.eta0 * raw / (np.sqrt(acc) + self.epsilon)

    def effective_rate(self, name):
        """Current ``eta0 / (sqrt(accum) + epsilon)`` for every entry of ``name``."""
        return self.eta0 / (np.sqrt(self.accum[name]) + self.epsilon)

    def state_dict(self):
        return {
            "eta0": self.eta0,
            "epsilon": self.epsilon,
            "accumulate": self.accumulate,
            "accum": {k: v.tolist() for k, v in self.accum.items()},
        }

    @classmethod
    def from_state_dict(cls, state):
        opt = cls(state["eta0"], state["epsilon"], state.get("accumulate", True))
        opt.accum = {k: np.array(v, dtype=float) for k, v in state["accum"].items()}
        return opt


def adagrad_scale(state, raw, name="theta"):
    """Functional wrapper: ``(state, scaled)`` after one AdaGrad step."""
    scaled = state.scale(name, raw)
    return state, scaled
