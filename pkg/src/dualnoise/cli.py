"""Command-line harness: ``dualnoise run <config>`` and ``dualnoise sweep <config> --grid <file>``.

Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import csv
import itertools
import logging
import sys
import warnings
from pathlib import Path

from .config import RunConfig, _read_pairs, format_config, parse_config, resolve_output_dir, set_key
from .errors import ConfigError, DualNoiseError
from .noise import Dataset, apply_noise, make_blobs, make_grid_digits
from .trainer import RunRecord, run

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2
METRICS_COLUMNS = ("epoch", "train_acc", "val_acc", "auroc_l", "auroc_m", "mean_model_unc", "n_filtered")
SWEEP_RESULT_COLUMNS = ("status", "best_val_acc", "last_val_acc", "final_auroc_l", "final_auroc_m",
                        "final_n_filtered", "error")


def build_datasets(cfg: RunConfig) -> tuple[Dataset, Dataset]:
    """Noisy train split and clean validation split; validation uses seed ``dataset.seed + 1``."""
    d = cfg.dataset
    if d.kind == "grid_digits":
        train = make_grid_digits(d.side, d.classes, d.per_class, seed=d.seed, jitter=d.jitter)
        val = make_grid_digits(d.side, d.classes, d.val_per_class, seed=d.seed + 1, jitter=d.jitter, split="val")
    else:
        if cfg.noise.x_rate > 0:
            raise ConfigError("noise.x_rate: image corruptions need dataset.kind = grid_digits")
        train = make_blobs(d.classes, d.per_class, d.dim, d.spread, seed=d.seed)
        val = make_blobs(d.classes, d.val_per_class, d.dim, d.spread, seed=d.seed + 1, split="val")
    return apply_noise(train, cfg.noise), val


def run_config(cfg: RunConfig) -> RunRecord:
    train, val = build_datasets(cfg)
    return run(cfg.train, train, val)


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


def write_run(out: Path, cfg: RunConfig, record: RunRecord) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "metrics.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(METRICS_COLUMNS)
        for e in record.epochs:
            w.writerow([e.epoch, _fmt(e.train_acc), _fmt(e.val_acc), _fmt(e.auroc_l), _fmt(e.auroc_m),
                        _fmt(e.mean_model_unc), e.n_filtered])
    (out / "summary.txt").write_text(
        f"variant = {cfg.variant}\n"
        f"epochs = {len(record.epochs)}\n"
        f"best_val_acc = {record.best_val_acc!r}\n"
        f"last_val_acc = {record.last_val_acc!r}\n"
    )
    (out / "config.txt").write_text(format_config(cfg))


def execute(cfg: RunConfig) -> int:
    """Run one configuration and write ``metrics.csv``, ``summary.txt`` and ``config.txt``."""
    out = resolve_output_dir(cfg.output_dir)
    try:
        record = run_config(cfg)
        write_run(out, cfg, record)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DualNoiseError, ArithmeticError, OSError, ValueError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    log.info("%s: best %.4f last %.4f -> %s", cfg.variant, record.best_val_acc, record.last_val_acc, out)
    return EXIT_OK


def parse_grid(text: str) -> dict[str, list[str]]:
    """``key = v1, v2, ...`` per line; the sweep is the Cartesian product."""
    pairs, errs = _read_pairs(text)
    if errs:
        raise ConfigError(errs)
    grid = {k: [t.strip() for t in v.split(",") if t.strip()] for k, v in pairs.items()}
    empty = [k for k, v in grid.items() if not v]
    if not grid or empty:
        raise ConfigError(f"grid must list at least one value per key (empty: {empty})" if empty
                          else "grid is empty")
    return grid


def sweep(cfg: RunConfig, grid: dict[str, list[str]]) -> list[dict]:
    """One run per grid cell under ``<output_dir>/cell_NNN``; rows also written to ``sweep.csv``.

    A failing cell is recorded with ``status = error`` and the sweep moves on.
    """
    if not grid:
        raise ConfigError("grid is empty")
    keys = list(grid)
    root = resolve_output_dir(cfg.output_dir)
    rows = []
    for i, combo in enumerate(itertools.product(*(grid[k] for k in keys))):
        row = dict(zip(keys, combo), cell=f"cell_{i:03d}")
        try:
            cell = cfg
            for k, v in zip(keys, combo):
                cell = set_key(cell, k, v)
            out = root / row["cell"]
            cell = set_key(cell, "output_dir", str(out))
            record = run_config(cell)
            write_run(out, cell, record)
            last = record.epochs[-1] if record.epochs else None
            row.update(status="ok", best_val_acc=record.best_val_acc, last_val_acc=record.last_val_acc,
                       final_auroc_l=last.auroc_l if last else "", final_auroc_m=last.auroc_m if last else "",
                       final_n_filtered=last.n_filtered if last else "", error="")
        except (DualNoiseError, ArithmeticError, ValueError, OSError) as exc:
            log.warning("sweep cell %s failed: %s", row["cell"], exc)
            row.update({c: "" for c in SWEEP_RESULT_COLUMNS}, status="error", error=str(exc))
        rows.append(row)
    root.mkdir(parents=True, exist_ok=True)
    with open(root / "sweep.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["cell", *keys, *SWEEP_RESULT_COLUMNS])
        w.writeheader()
        for row in rows:
            w.writerow({k: _fmt(v) for k, v in row.items()})
    return rows


def _load_config(path) -> RunConfig:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        cfg = parse_config(Path(path).read_text())
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return cfg


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="dualnoise", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="train one configuration")
    p_run.add_argument("config")
    p_sweep = sub.add_parser("sweep", help="train every cell of a parameter grid")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--grid", required=True)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")

    try:
        cfg = _load_config(args.config)
        if args.command == "run":
            return execute(cfg)
        grid = parse_grid(Path(args.grid).read_text())
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    rows = sweep(cfg, grid)
    return EXIT_RUNTIME if any(r["status"] != "ok" for r in rows) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
