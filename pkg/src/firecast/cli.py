"""Command-line surface: stats, train, evaluate, forecast, plot.

Every command exits 0 on success and 2 with a one-line diagnostic on
failure; output files are written atomically so failures leave nothing
partial behind.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import tempfile

from . import __version__, backend, persistence, svg
from .dataset import describe, load_csv, parse_month
from .errors import FirecastError, ParseError
from .forecast import forecast as run_forecast
from .forecast import write_forecast_csv
from .training import (Loss, TrainConfig, evaluate as run_evaluate, train as run_train,
                       write_history_csv)


def _atomic_write(path: str, write_fn) -> None:
    """Call write_fn(temp_path), then rename the temp file over path."""
    directory = os.path.dirname(os.fspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".out-", suffix=".tmp")
    os.close(fd)
    umask = os.umask(0)
    os.umask(umask)
    os.chmod(tmp, 0o666 & ~umask)
    try:
        write_fn(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _history_path(out: str) -> str:
    base, ext = os.path.splitext(out)
    return (base if ext == ".ckpt" else out) + ".history.csv"


def cmd_stats(args) -> int:
    series = load_csv(args.csv)
    stats = describe(series)
    if args.json:
        print(json.dumps({"months": len(series), "min": stats.min,
                          "mean": stats.mean, "max": stats.max,
                          "stddev": stats.stddev, "variance": stats.variance}))
    else:
        print(f"months    {len(series)}")
        print(f"min       {stats.min:.3f}")
        print(f"mean      {stats.mean:.3f}")
        print(f"max       {stats.max:.3f}")
        print(f"stddev    {stats.stddev:.3f}")
        print(f"variance  {stats.variance:.3f}")
    return 0


def cmd_train(args) -> int:
    series = load_csv(args.csv)
    cfg = TrainConfig(epochs=args.epochs, seed=args.seed, loss=Loss(args.loss),
                      batch_size=args.batch, hidden=args.hidden, window=args.window)
    mode = "full-data (selection: training MAE)" if args.full_data \
        else "split 279/24/12-style (selection: validation MAE)"
    print(f"backend: {backend.active_backend()}")
    print(f"mode: {mode}")

    def log(rec):
        if rec.epoch == 1 or rec.epoch % args.log_every == 0 or rec.epoch == cfg.epochs:
            val = "" if rec.val_mae is None else f"  val_mae={rec.val_mae:.3f}"
            print(f"epoch {rec.epoch:4d}  loss={rec.loss:.6f}  "
                  f"train_mae={rec.train_mae:.3f}{val}")

    ckpt = run_train(series, cfg, use_full_data=args.full_data, log=log)
    persistence.save(ckpt, args.out)  # save is already atomic
    history_path = _history_path(args.out)
    _atomic_write(history_path, lambda tmp: write_history_csv(ckpt.history, tmp))
    best = ckpt.history[ckpt.best_epoch - 1]
    val = "" if best.val_mae is None else f"  val_mae={best.val_mae:.3f}  val_rmse={best.val_rmse:.3f}"
    print(f"best epoch {ckpt.best_epoch}: train_mae={best.train_mae:.3f}  "
          f"train_rmse={best.train_rmse:.3f}{val}")
    print(f"checkpoint: {args.out}")
    print(f"history:    {history_path}")
    return 0


def cmd_evaluate(args) -> int:
    ckpt = persistence.load(args.checkpoint)
    series = load_csv(args.csv)
    result = run_evaluate(ckpt, series, args.split)

    def write(tmp):
        with open(tmp, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["month", "actual", "predicted"])
            for month, actual, pred in zip(result.months, result.actual,
                                           result.predicted):
                writer.writerow([month, repr(float(actual)), repr(float(pred))])

    out = args.out or f"predictions_{args.split}.csv"
    _atomic_write(out, write)
    print(f"split: {args.split} ({len(result.months)} targets)")
    print(f"MAE:  {result.mae:.3f}")
    print(f"RMSE: {result.rmse:.3f}")
    print(f"predictions: {out}")
    return 0


def cmd_forecast(args) -> int:
    ckpt = persistence.load(args.checkpoint)
    series = load_csv(args.csv)
    result = run_forecast(ckpt, series, horizon=args.horizon,
                          clamp=not args.no_clamp)
    _atomic_write(args.out, lambda tmp: write_forecast_csv(result, tmp))
    for month, value in zip(result.months(), result.values):
        print(f"{month}  {value:.1f}")
    print(f"forecast: {args.out}")
    return 0


def _read_forecast_csv(path) -> list[tuple[str, float]]:
    rows = []
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if lineno == 1:
                if [c.strip().lower() for c in row] != ["month", "predicted_count"]:
                    raise ParseError("header must be 'month,predicted_count'", line=1)
                continue
            if len(row) != 2:
                raise ParseError(f"expected 2 fields, got {len(row)}", line=lineno)
            try:
                month = parse_month(row[0])
                value = float(row[1])
            except (ParseError, ValueError):
                raise ParseError(f"bad forecast row {row!r}", line=lineno) from None
            rows.append((f"{month[0]:04d}-{month[1]:02d}", value))
    return rows


def _read_history_csv(path) -> list[tuple[int, float]]:
    rows = []
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if lineno == 1:
                if len(row) < 2 or row[0].strip().lower() != "epoch":
                    raise ParseError("header must start with 'epoch,loss'", line=1)
                continue
            try:
                rows.append((int(row[0]), float(row[1])))
            except (ValueError, IndexError):
                raise ParseError(f"bad history row {row!r}", line=lineno) from None
    return rows


def cmd_plot(args) -> int:
    series = load_csv(args.csv)
    points = list(zip(series.months(), series.values.tolist()))
    fc = _read_forecast_csv(args.forecast) if args.forecast else None
    loss = _read_history_csv(args.history) if args.history else None
    content = svg.render_chart(points, forecast=fc, loss=loss, title=args.title)

    def write(tmp):
        with open(tmp, "w", encoding="utf-8", newline="") as fh:
            fh.write(content)

    _atomic_write(args.out, write)
    print(f"plot: {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="firecast",
        description="Train, evaluate, and forecast a monthly fire-count series "
                    "with a stacked LSTM+GRU model.")
    parser.add_argument("--version", action="version", version=f"firecast {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="descriptive statistics of a series CSV")
    p.add_argument("csv", help="input CSV (month,count)")
    p.add_argument("--json", action="store_true", help="emit machine-readable JSON")
    p.set_defaults(fn=cmd_stats)

    p = sub.add_parser("train", help="train a model and write a checkpoint")
    p.add_argument("csv", help="input CSV (month,count)")
    p.add_argument("--seed", type=int, default=2024, help="PRNG seed (default 2024)")
    p.add_argument("--epochs", type=int, default=1000, help="training epochs (default 1000)")
    p.add_argument("--hidden", type=int, default=256, help="hidden width (default 256)")
    p.add_argument("--window", type=int, default=12, help="input window length (default 12)")
    p.add_argument("--batch", type=int, default=32, help="mini-batch size (default 32)")
    p.add_argument("--loss", choices=[kind.value for kind in Loss], default="mae",
                   help="training loss (default mae)")
    p.add_argument("--full-data", action="store_true",
                   help="train on every window (no validation/test split)")
    p.add_argument("--out", default="model.ckpt", help="checkpoint path (default model.ckpt)")
    p.add_argument("--log-every", type=int, default=25,
                   help="print an epoch line every N epochs (default 25)")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("evaluate", help="one-step-ahead metrics on a split")
    p.add_argument("checkpoint", help="trained checkpoint file")
    p.add_argument("csv", help="input CSV (month,count)")
    p.add_argument("--split", choices=["train", "validation", "test"], default="test",
                   help="which chronological split to score (default test)")
    p.add_argument("--out", default=None,
                   help="per-month prediction CSV (default predictions_<split>.csv)")
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("forecast", help="recursive multi-step forecast")
    p.add_argument("checkpoint", help="trained checkpoint file")
    p.add_argument("csv", help="input CSV (month,count)")
    p.add_argument("--horizon", type=int, default=12, help="months ahead (default 12)")
    p.add_argument("--no-clamp", action="store_true",
                   help="keep raw predictions (no clamp at zero)")
    p.add_argument("--out", default="forecast.csv", help="output CSV (default forecast.csv)")
    p.set_defaults(fn=cmd_forecast)

    p = sub.add_parser("plot", help="render a deterministic SVG chart")
    p.add_argument("csv", help="series CSV (month,count)")
    p.add_argument("--forecast", default=None, help="forecast CSV to overlay")
    p.add_argument("--history", default=None, help="epoch-history CSV for a loss panel")
    p.add_argument("--title", default="Monthly fire spots", help="chart title")
    p.add_argument("--out", default="chart.svg", help="output SVG (default chart.svg)")
    p.set_defaults(fn=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (FirecastError, ValueError, OSError) as exc:
        print(f"firecast: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
