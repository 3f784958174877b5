"""Model snapshots and CSV input/output."""

import csv
import dataclasses
import json
import math
from pathlib import Path

import numpy as np

from .errors import ConfigError, SnapshotError
from .experiment import NoisySine
from .gaussian import GaussianDyBM
from .optim import AdaGrad

SNAPSHOT_VERSION = 1
STEP_COLUMNS = ("step", "target", "prediction", "sq_error", "rolling_mse")
SUMMARY_COLUMNS = (
    "model", "d", "mu", "runs", "steps", "converged_mse", "improvement_vs_var", "seconds_per_1000_steps",
)


def fmt(value):
    """Round-trip exact text for a float (17 significant digits)."""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    if isinstance(value, str):
        return value
    value = float(value)
    if math.isnan(value):
        return "nan"
    return format(value, ".17g")


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def read_series_csv(path):
    """Read a user time series: one column per unit, optional header row."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise ConfigError(f"{path}: empty data file")
    try:
        [float(v) for v in rows[0]]
    except ValueError:
        rows = rows[1:]
    try:
        data = np.array([[float(v) for v in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise ConfigError(f"{path}: non-numeric value ({exc})") from None
    if data.ndim != 2 or data.shape[0] == 0:
        raise ConfigError(f"{path}: ragged or empty data")
    if not np.all(np.isfinite(data)):
        raise ConfigError(f"{path}: non-finite values")
    return data


class SineStream:
    """Noisy sine values produced one at a time from a seeded generator."""

    def __init__(self, signal, seed, t=0, rng=None):
        self.signal = signal
        self.seed = seed
        self.t = t
        self.rng = rng if rng is not None else np.random.default_rng(seed)

    def next(self):
        self.t += 1
        return float(self.signal.clean(self.t) + self.signal.noise_std * self.rng.standard_normal())

    def state_dict(self):
        return {
            "type": "noisy-sine",
            "period": self.signal.period,
            "amplitude": self.signal.amplitude,
            "noise_std": self.signal.noise_std,
            "seed": self.seed,
            "t": self.t,
            "bit_generator": self.rng.bit_generator.state,
        }

    @classmethod
    def from_state_dict(cls, state):
        signal = NoisySine(state["period"], state["amplitude"], state["noise_std"])
        bg_state = state["bit_generator"]
        bit_gen = getattr(np.random, bg_state["bit_generator"])()
        bit_gen.state = bg_state
        return cls(signal, state["seed"], state["t"], np.random.Generator(bit_gen))


@dataclasses.dataclass
class Snapshot:
    model: GaussianDyBM
    optimizer: AdaGrad
    stream: SineStream = None
    rule: str = "natural"
    kind: str = "gaussian-dybm"

    @property
    def step(self):
        return self.model.step


def save_snapshot(path, snapshot):
    doc = {
        "format_version": SNAPSHOT_VERSION,
        "kind": snapshot.kind,
        "rule": snapshot.rule,
        "step": snapshot.model.step,
        "model": snapshot.model.state_dict(),
        "optimizer": snapshot.optimizer.state_dict(),
        "source": snapshot.stream.state_dict() if snapshot.stream is not None else None,
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_snapshot(path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise SnapshotError(f"{path}: no such snapshot") from None
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SnapshotError(f"{path}: corrupt snapshot ({exc})") from None
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise SnapshotError(f"{path}: corrupt snapshot (no format_version)")
    if doc["format_version"] != SNAPSHOT_VERSION:
        raise SnapshotError(
            f"{path}: snapshot format version {doc['format_version']!r} is not supported "
            f"(expected {SNAPSHOT_VERSION})"
        )
    try:
        if doc["kind"] != "gaussian-dybm":
            raise SnapshotError(f"{path}: unsupported model kind {doc['kind']!r}")
        model = GaussianDyBM.from_state_dict(doc["model"])
        optimizer = AdaGrad.from_state_dict(doc["optimizer"])
        stream = SineStream.from_state_dict(doc["source"]) if doc.get("source") else None
        rule = doc.get("rule", "natural")
    except SnapshotError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise SnapshotError(f"{path}: corrupt snapshot ({exc!r})") from None
    return Snapshot(model, optimizer, stream, rule, doc["kind"])
