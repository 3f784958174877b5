"""Online noisy-sine experiments: data, train-predict loop, rolling MSE, timing.

Runs are independent: each gets its own generator spawned from the master
seed and its own model and optimizer. For speed, runs are processed in fixed
chunks of :data:`CHUNK_SIZE`, each chunk as one batched model, and chunks are
spread over a thread pool. The chunking never depends on the number of
threads, so results are bit-identical for any ``DYBM_THREADS``.
"""

import dataclasses
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import BoundaryError, ConfigError, DimensionError, DivergenceError, NumericalError
from .gaussian import GaussianDyBM
from .optim import AdaGrad

logger = logging.getLogger(__name__)

CHUNK_SIZE = 25
MODELS = ("gaussian-dybm", "var")
RULES = ("natural", "sgd")


@dataclasses.dataclass(frozen=True)
class NoisySine:
    """``x[t] = amplitude * sin(2 pi t / period) + noise_std * eps[t]``."""

    period: float = 100.0
    amplitude: float = 1.0
    noise_std: float = 1.0

    def __post_init__(self):
        if self.period <= 0:
            raise ConfigError(f"period must be positive, got {self.period}")
        if self.noise_std < 0:
            raise ConfigError(f"noise_std must be >= 0, got {self.noise_std}")

    def clean(self, t):
        return self.amplitude * np.sin(2.0 * np.pi * np.asarray(t, dtype=float) / self.period)

    def series(self, steps, rng):
        """Values for ``t = 1 .. steps``."""
        t = np.arange(1, steps + 1)
        return self.clean(t) + self.noise_std * rng.standard_normal(steps)


def generate_noisy_sine(spec, t, rng):
    """A single draw of ``x[t]``."""
    if t < 1:
        raise ValueError("time index starts at 1")
    return float(spec.clean(t) + spec.noise_std * rng.standard_normal())


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    """One cell of the experiment grid.

    ``model="var"`` forces the trace decay to zero. The single trace (``L=1``)
    matches the one-unit experiment; the library itself supports any ``L``.
    """

    d: int
    model: str = "gaussian-dybm"
    mu: float = 0.9
    eta0: float = 0.001
    steps: int = 10_000
    runs: int = 100
    mse_window: int = 100
    seed: int = 0
    rule: str = "natural"
    period: float = 100.0
    noise_std: float = 1.0

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.rule not in RULES:
            raise ConfigError(f"rule must be one of {RULES}, got {self.rule!r}")
        if int(self.d) != self.d or self.d < 1:
            raise ConfigError(f"d must be a positive integer, got {self.d}")
        if not 0.0 <= self.mu < 1.0:
            raise ConfigError(f"mu must lie in [0, 1), got {self.mu}")
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if self.mse_window < 2 or self.mse_window % 2:
            raise ConfigError("mse_window must be a positive even number")
        if self.steps <= self.mse_window:
            raise ConfigError(f"steps ({self.steps}) must exceed mse_window ({self.mse_window})")
        if self.eta0 < 0:
            raise ConfigError("eta0 must be >= 0")
        NoisySine(self.period, 1.0, self.noise_std)

    @property
    def decay(self):
        return 0.0 if self.model == "var" else self.mu

    @property
    def signal(self):
        return NoisySine(self.period, 1.0, self.noise_std)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


@dataclasses.dataclass
class RunRecord:
    """Per-step predictions, targets and squared errors of one run."""

    run: int
    predictions: np.ndarray
    targets: np.ndarray
    seconds: float = float("nan")

    def __post_init__(self):
        if self.predictions.shape != self.targets.shape:
            raise DimensionError("predictions and targets must have equal shapes")

    @property
    def sq_errors(self):
        err = self.predictions - self.targets
        if err.ndim == 1:
            return err * err
        return np.sum(err * err, axis=-1)

    @property
    def steps(self):
        return len(self.targets)


def run_seeds(seed, runs):
    """Independent child seeds, one per run, derived from the master seed."""
    return np.random.SeedSequence(seed).spawn(runs)


def make_data(config, run):
    rng = np.random.default_rng(run_seeds(config.seed, config.runs)[run])
    return config.signal.series(config.steps, rng)


def thread_count():
    """Worker count from ``DYBM_THREADS`` (default: number of CPUs)."""
    raw = os.environ.get("DYBM_THREADS")
    if raw is None or raw == "":
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"DYBM_THREADS must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise ConfigError(f"DYBM_THREADS must be a positive integer, got {raw!r}")
    return value


def _train_batch(config, data, model=None, optimizer=None, first_run=0):
    """Online loop over ``data`` of shape ``(steps, batch, n)``.

    Returns ``(predictions, seconds)``; ``seconds`` covers the learning loop only.
    """
    steps, batch, n = data.shape
    if model is None:
        model = GaussianDyBM(n, config.d, (config.decay,), batch_shape=(batch,))
    if optimizer is None and config.rule == "natural":
        optimizer = AdaGrad(config.eta0)
    eta = None if config.rule == "natural" else config.eta0
    preds = np.empty_like(data)
    start = time.perf_counter()
    for t in range(steps):
        try:
            # overflow is detected and reported below, not warned about
            with np.errstate(over="ignore", invalid="ignore"):
                m = model.learn(data[t], eta=eta, rule=config.rule, optimizer=optimizer)
        except NumericalError as exc:
            bad = ~np.all(np.isfinite(model.predict()), axis=-1)
            run = first_run + (int(np.argmax(bad)) if np.any(bad) else 0)
            raise DivergenceError(run, t + 1) from exc
        preds[t] = m
    return preds, time.perf_counter() - start


def _run_chunk(config, runs, data=None):
    if data is None:
        data = np.stack([make_data(config, r) for r in runs], axis=1)[..., None]
    else:
        data = np.broadcast_to(data[:, None, :], (data.shape[0], len(runs), data.shape[1])).copy()
    preds, seconds = _train_batch(config, data, first_run=runs[0])
    per_run = seconds / len(runs)
    records = []
    for k, r in enumerate(runs):
        p, x = preds[:, k], data[:, k]
        if x.shape[-1] == 1:
            p, x = p[:, 0], x[:, 0]
        records.append(RunRecord(r, p.copy(), x.copy(), per_run))
    return records


def run_online(config, data=None, threads=None):
    """Train and predict online for every run of ``config``.

    Each step feeds ``x[t]`` (parameters updated from the prediction made
    before it was seen, then traces and delay line advanced) and records that
    prediction. ``data`` optionally replaces the synthetic stream with a user
    array of shape ``(steps,)`` or ``(steps, n)``, shared by all runs.

    Returns one :class:`RunRecord` per run, ordered by run index.
    """
    if data is not None:
        data = np.asarray(data, dtype=float)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2:
            raise DimensionError("user data must be (steps,) or (steps, n)")
    chunks = [list(range(s, min(s + CHUNK_SIZE, config.runs))) for s in range(0, config.runs, CHUNK_SIZE)]
    threads = thread_count() if threads is None else threads
    workers = max(1, min(threads, len(chunks)))
    logger.debug("running %d runs in %d chunks on %d threads", config.runs, len(chunks), workers)
    if workers == 1:
        results = [_run_chunk(config, c, data) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda c: _run_chunk(config, c, data), chunks))
    return [rec for chunk in results for rec in chunk]


def rolling_mse(sq_errors, t, window=100):
    """Mean of the ``window`` squared errors centred on index ``t``.

    The window covers ``t - window//2 .. t + window//2 - 1`` (0-based).
    """
    sq_errors = np.asarray(sq_errors, dtype=float)
    half = window // 2
    if t - half < 0 or t + half > len(sq_errors):
        raise BoundaryError(f"index {t} too close to the edge for a {window}-step window")
    return float(np.mean(sq_errors[t - half:t + half]))


def rolling_mse_curve(sq_errors, window=100):
    """Rolling MSE at every index; ``nan`` where the window does not fit."""
    sq_errors = np.asarray(sq_errors, dtype=float)
    half = window // 2
    out = np.full(len(sq_errors), np.nan)
    if len(sq_errors) >= window:
        windows = np.lib.stride_tricks.sliding_window_view(sq_errors, window)
        out[half:half + len(windows)] = windows.mean(axis=1)
    return out


def average_curves(curves):
    """Pointwise mean of equally long curves."""
    curves = [np.asarray(c, dtype=float) for c in curves]
    if not curves:
        raise ValueError("need at least one curve")
    if len({c.shape for c in curves}) != 1:
        raise DimensionError("curves have different lengths")
    return np.mean(np.stack(curves), axis=0)


def average_runs(records, window=100):
    """Run-averaged rolling MSE curve."""
    return average_curves([rolling_mse_curve(r.sq_errors, window) for r in records])


def converged_mse(curve, fraction=0.1):
    """Mean of a rolling MSE curve over the final ``fraction`` of steps (valid entries only)."""
    curve = np.asarray(curve, dtype=float)
    start = int(math.floor(len(curve) * (1.0 - fraction)))
    tail = curve[start:]
    tail = tail[np.isfinite(tail)]
    if tail.size == 0:
        raise BoundaryError("no valid rolling MSE values in the final segment")
    return float(tail.mean())


@dataclasses.dataclass
class Summary:
    model: str
    d: int
    mu: float
    runs: int
    steps: int
    converged_mse: float
    std_error: float
    seconds_per_1000_steps: float
    improvement_vs_var: float = float("nan")
    curve: np.ndarray = dataclasses.field(default=None, repr=False)


def summarize(config, records):
    """Converged MSE (mean and standard error over runs) and timing for one cell."""
    curves = [rolling_mse_curve(r.sq_errors, config.mse_window) for r in records]
    try:
        per_run = np.array([converged_mse(c) for c in curves])
    except BoundaryError:
        logger.warning("%d steps leave no full %d-step window in the final tenth; converged MSE is nan",
                       config.steps, config.mse_window)
        per_run = np.full(len(curves), np.nan)
    se = float(per_run.std(ddof=1) / math.sqrt(len(per_run))) if len(per_run) > 1 else float("nan")
    seconds = float(np.mean([r.seconds for r in records])) * 1000.0 / config.steps
    return Summary(
        model=config.model,
        d=config.d,
        mu=config.decay,
        runs=len(records),
        steps=config.steps,
        converged_mse=float(per_run.mean()),
        std_error=se,
        seconds_per_1000_steps=seconds,
        curve=average_curves(curves),
    )


def improvement(mse, mse_var):
    """Relative error reduction ``1 - mse / mse_var``."""
    return 1.0 - mse / mse_var


def time_per_run(config, repeats=5):
    """Wall-clock seconds of the learning loop for one run of ``config.steps`` steps.

    Data generation is excluded. The loop is executed ``repeats`` times on a
    batch of ``config.runs`` runs; the fastest repetition divided by the batch
    size is reported.
    """
    data = np.stack([make_data(config, r) for r in range(config.runs)], axis=1)[..., None]
    best = math.inf
    for _ in range(repeats):
        _, seconds = _train_batch(config, data)
        best = min(best, seconds)
    return best / config.runs


def planted_lag_model(d, lag, weight, batch_shape=()):
    """Untrained one-unit model whose only nonzero parameter is ``w[lag]``."""
    model = GaussianDyBM(1, d, (0.0,), batch_shape=batch_shape)
    model.W[..., lag - 1, 0, 0] = weight
    return model


def evaluate_frozen(model, config):
    """Run a fixed model over the runs of ``config`` without updating parameters."""
    data = np.stack([make_data(config, r) for r in range(config.runs)], axis=1)[..., None]
    preds = np.empty_like(data)
    for t in range(config.steps):
        preds[t] = model.predict()
        model.observe(data[t])
    return [RunRecord(r, preds[:, r, 0].copy(), data[:, r, 0].copy()) for r in range(config.runs)]
