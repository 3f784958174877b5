"""Command-line interface: ``dybm train``, ``dybm sweep``, ``dybm snapshot``.

Exit codes: 0 success, 2 configuration error, 3 numeric divergence,
4 snapshot error.
"""

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiment as ex
from .errors import ConfigError, DivergenceError, NumericalError, SnapshotError
from .gaussian import GaussianDyBM
from .optim import AdaGrad
from .persist import (
    STEP_COLUMNS, SUMMARY_COLUMNS, SineStream, Snapshot, load_snapshot, read_series_csv, save_snapshot,
    write_csv,
)

logger = logging.getLogger("dybm")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_SNAPSHOT = 0, 2, 3, 4

TRAIN_KEYS = {
    "model": "gaussian-dybm", "d": None, "mu": 0.9, "eta0": 0.001, "steps": 10_000, "runs": 100,
    "seed": 0, "rule": "natural", "period": 100.0, "noise_std": 1.0, "mse_window": 100,
    "out": None, "summary": None, "data": None, "timing": True,
}
SWEEP_KEYS = {
    "mus": [0.0, 0.1, 0.3, 0.5, 0.7, 0.9], "ds": [1], "eta0": 0.001, "steps": 10_000, "runs": 100,
    "seed": 0, "rule": "natural", "period": 100.0, "noise_std": 1.0, "mse_window": 100,
    "out_dir": None, "timing": True,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser():
    parser = _Parser(prog="dybm", description="Online Gaussian DyBM / VAR experiments on a noisy sine.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    train = sub.add_parser("train", help="train one configuration over several runs")
    train.add_argument("--config", type=Path, help="JSON file with defaults for the flags below")
    train.add_argument("--model", choices=ex.MODELS)
    train.add_argument("--d", type=int)
    train.add_argument("--mu", type=float)
    train.add_argument("--steps", type=int)
    train.add_argument("--runs", type=int)
    train.add_argument("--eta0", type=float)
    train.add_argument("--seed", type=int)
    train.add_argument("--rule", choices=ex.RULES)
    train.add_argument("--period", type=float)
    train.add_argument("--noise-std", dest="noise_std", type=float)
    train.add_argument("--mse-window", dest="mse_window", type=int)
    train.add_argument("--data", type=Path, help="CSV time series, one column per unit")
    train.add_argument("--out", type=Path, help="per-step CSV")
    train.add_argument("--summary", type=Path, help="summary CSV (default: <out>.summary.csv)")
    train.add_argument("--no-timing", dest="timing", action="store_false", default=None,
                       help="skip timing; write nan so output is reproducible byte for byte")

    sweep = sub.add_parser("sweep", help="grid over decay rates and delays")
    sweep.add_argument("--config", type=Path)
    sweep.add_argument("--mus", type=_floats)
    sweep.add_argument("--ds", type=_ints)
    sweep.add_argument("--steps", type=int)
    sweep.add_argument("--runs", type=int)
    sweep.add_argument("--eta0", type=float)
    sweep.add_argument("--seed", type=int)
    sweep.add_argument("--rule", choices=ex.RULES)
    sweep.add_argument("--period", type=float)
    sweep.add_argument("--noise-std", dest="noise_std", type=float)
    sweep.add_argument("--mse-window", dest="mse_window", type=int)
    sweep.add_argument("--out-dir", dest="out_dir", type=Path)
    sweep.add_argument("--no-timing", dest="timing", action="store_false", default=None)

    snap = sub.add_parser("snapshot", help="save or resume a single online model")
    snap_sub = snap.add_subparsers(dest="action", required=True, parser_class=_Parser)
    save = snap_sub.add_parser("save", help="train on the noisy sine, then save the model")
    save.add_argument("path", type=Path)
    save.add_argument("--d", type=int, required=True)
    save.add_argument("--mu", type=float, default=0.9)
    save.add_argument("--steps", type=int, default=1000)
    save.add_argument("--eta0", type=float, default=0.001)
    save.add_argument("--seed", type=int, default=0)
    save.add_argument("--period", type=float, default=100.0)
    save.add_argument("--noise-std", dest="noise_std", type=float, default=1.0)
    save.add_argument("--out", type=Path, help="per-step CSV of the training steps")
    load = snap_sub.add_parser("load", help="restore a snapshot and continue training")
    load.add_argument("path", type=Path)
    load.add_argument("--steps", type=int, default=100)
    load.add_argument("--out", type=Path, help="per-step CSV of the resumed steps")
    load.add_argument("--save", type=Path, help="write a new snapshot afterwards")
    parser.subcommands = {"train": train, "sweep": sweep, "snapshot": snap}
    return parser


def _merge(args, keys, required):
    """Config file values overridden by explicit flags; defaults filled with a notice."""
    values = {}
    if getattr(args, "config", None) is not None:
        try:
            doc = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = sorted(set(doc) - set(keys))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        values.update(doc)
    for key in keys:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    for key in required:
        if values.get(key) is None:
            raise ConfigError(f"--{key.replace('_', '-')} is required")
    for key, default in keys.items():
        if key not in values:
            if default is not None:
                logger.info("%s not given; using default %r", key, default)
            values[key] = default
    return values


def _config(values, **override):
    fields = ("model", "d", "mu", "eta0", "steps", "runs", "seed", "rule", "period", "noise_std", "mse_window")
    kw = {k: values[k] for k in fields if k in values}
    kw.update(override)
    try:
        return ex.ExperimentConfig(**kw)
    except TypeError as exc:
        raise ConfigError(f"bad configuration value: {exc}") from None


def _step_rows(records, window):
    """Run-averaged per-step values (identical to the single run when runs == 1)."""
    targets = np.mean([r.targets for r in records], axis=0)
    preds = np.mean([r.predictions for r in records], axis=0)
    sq = np.mean([r.sq_errors for r in records], axis=0)
    rolling = ex.average_runs(records, window)
    if targets.ndim == 1:
        header = STEP_COLUMNS
        rows = [(t + 1, targets[t], preds[t], sq[t], rolling[t]) for t in range(len(sq))]
    else:
        n = targets.shape[1]
        header = ("step", *[f"target_{k}" for k in range(n)], *[f"prediction_{k}" for k in range(n)],
                  "sq_error", "rolling_mse")
        rows = [(t + 1, *targets[t], *preds[t], sq[t], rolling[t]) for t in range(len(sq))]
    return header, rows


def _summary_row(s):
    return (s.model, s.d, s.mu, s.runs, s.steps, s.converged_mse, s.improvement_vs_var, s.seconds_per_1000_steps)


def _timed_summary(config, records, timing):
    s = ex.summarize(config, records)
    s.seconds_per_1000_steps = (
        ex.time_per_run(config.replace(steps=1000))
        if timing else float("nan")
    )
    return s


def cmd_train(args):
    values = _merge(args, TRAIN_KEYS, required=("d",))
    data = read_series_csv(values["data"]) if values["data"] else None
    if data is not None:
        values["steps"] = len(data)
    config = _config(values)
    records = ex.run_online(config, data=data)
    s = _timed_summary(config, records, values["timing"])
    if config.model == "var":
        s.improvement_vs_var = 0.0
    else:
        var_records = ex.run_online(config.replace(model="var"), data=data)
        s.improvement_vs_var = ex.improvement(s.converged_mse, ex.summarize(config, var_records).converged_mse)
    out = values["out"]
    if out is not None:
        header, rows = _step_rows(records, config.mse_window)
        write_csv(out, header, rows)
    summary_path = values["summary"] or (Path(out).with_suffix(".summary.csv") if out else None)
    if summary_path is not None:
        write_csv(summary_path, SUMMARY_COLUMNS, [_summary_row(s)])
    print(f"{s.model} d={s.d} mu={s.mu}: converged MSE {s.converged_mse:.4f} "
          f"(+/- {s.std_error:.4f}), improvement vs VAR {s.improvement_vs_var:+.1%}")
    return EXIT_OK


def _mu_label(mu):
    return format(mu, "g")


def cmd_sweep(args):
    values = _merge(args, SWEEP_KEYS, required=("out_dir",))
    out_dir = Path(values["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    mus, ds = list(values["mus"]), list(values["ds"])
    if not mus or not ds:
        raise ConfigError("need at least one mu and one d")
    summaries = []
    timing_rows = []
    for d in ds:
        var_cfg = _config(values, model="var", d=d, mu=0.0)
        var_summary = _timed_summary(var_cfg, ex.run_online(var_cfg), values["timing"])
        row = [d]
        for mu in mus:
            if mu == 0:
                s = dataclasses.replace(var_summary)
            else:
                cfg = _config(values, model="gaussian-dybm", d=d, mu=mu)
                s = _timed_summary(cfg, ex.run_online(cfg), values["timing"])
            s.improvement_vs_var = ex.improvement(s.converged_mse, var_summary.converged_mse)
            summaries.append(s)
            row.append(s.seconds_per_1000_steps)
            write_csv(out_dir / f"curve_d{d}_mu{_mu_label(mu)}.csv", ("step", "rolling_mse"),
                      [(t + 1, v) for t, v in enumerate(s.curve)])
            logger.info("d=%d mu=%g converged MSE %.4f", d, mu, s.converged_mse)
        timing_rows.append(row)
    write_csv(out_dir / "summary.csv", SUMMARY_COLUMNS, [_summary_row(s) for s in summaries])
    write_csv(out_dir / "timing.csv", ("d", *[f"mu={_mu_label(mu)}" for mu in mus]), timing_rows)
    for s in summaries:
        print(f"d={s.d:3d} mu={s.mu:<4g} MSE {s.converged_mse:.4f} improvement {s.improvement_vs_var:+.1%}")
    return EXIT_OK


def _advance(snapshot, steps):
    model, opt, stream = snapshot.model, snapshot.optimizer, snapshot.stream
    rows = []
    for _ in range(steps):
        x = np.array([stream.next()])
        try:
            m = model.learn(x, eta=opt.eta0, rule=snapshot.rule,
                            optimizer=opt if snapshot.rule == "natural" else None)
        except NumericalError as exc:
            raise DivergenceError(0, model.step + 1) from exc
        err = float(m[0] - x[0])
        rows.append((model.step, x[0], m[0], err * err, float("nan")))
    return rows


def cmd_snapshot(args):
    if args.action == "save":
        if args.d is None or args.d < 1:
            raise ConfigError("--d must be a positive integer")
        if not 0.0 <= args.mu < 1.0:
            raise ConfigError("--mu must lie in [0, 1)")
        signal = ex.NoisySine(args.period, 1.0, args.noise_std)
        snap = Snapshot(GaussianDyBM(1, args.d, (args.mu,)), AdaGrad(args.eta0), SineStream(signal, args.seed))
        rows = _advance(snap, args.steps)
        save_snapshot(args.path, snap)
    else:
        snap = load_snapshot(args.path)
        if snap.stream is None:
            raise SnapshotError(f"{args.path}: snapshot has no data source to resume")
        rows = _advance(snap, args.steps)
        if args.save is not None:
            save_snapshot(args.save, snap)
    if args.out is not None:
        write_csv(args.out, STEP_COLUMNS, rows)
    print(f"snapshot {args.action}: step {snap.step}")
    return EXIT_OK


COMMANDS = {"train": cmd_train, "sweep": cmd_sweep, "snapshot": cmd_snapshot}


def main(argv=None):
    parser = build_parser()
    args = None
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        if args is not None:
            parser.subcommands[args.command].print_usage(sys.stderr)
        print(f"dybm: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"dybm: numeric divergence: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except SnapshotError as exc:
        print(f"dybm: snapshot error: {exc}", file=sys.stderr)
        return EXIT_SNAPSHOT


if __name__ == "__main__":
    sys.exit(main())
