"""Grid search over configuration fields.

A grid file lists comma-separated candidate values per ``section.key``::

    [grid]
    train.lr = 2e-4, 6e-4, 1e-3
    train.batch_size = 32, 64

Cells are the cartesian product in file order (last key varies fastest) and
are numbered from 0. Cell i runs in ``<out>/cell-XXX`` with seed
``derive_seed(seed, "grid", i)`` unless the grid itself sets
``experiment.seed``. The summary table contains no timing data, so rerunning
a grid reproduces it byte for byte.
"""

from __future__ import annotations

import configparser
import csv
import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from ..numerics import derive_seed
from .config import ConfigError, ExperimentConfig, apply_overrides, config_fields
from .runner import format_value, run_experiment

log = logging.getLogger(__name__)

SUMMARY_COLUMNS_HEAD = ["cell", "status", "seed"]
SUMMARY_COLUMNS_TAIL = ["epochs", "train_loss", "test_loss", "test_accuracy", "val_loss", "val_accuracy",
                        "selected", "error"]


def parse_grid(text: str, source: str = "<grid>") -> List[Tuple[str, List[str]]]:
    p = configparser.ConfigParser(interpolation=None)
    p.optionxform = str
    try:
        p.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError([f"{source}: {exc}"]) from exc
    if not p.has_section("grid"):
        raise ConfigError([f"{source}: missing [grid] section"])
    known = set(config_fields())
    dims, errors = [], []
    for key, raw in p["grid"].items():
        values = [v.strip() for v in raw.split(",") if v.strip()]
        if key not in known:
            errors.append(f"grid key {key!r} is not a configuration field")
        elif not values:
            errors.append(f"grid key {key!r} has no values")
        dims.append((key, values))
    if errors:
        raise ConfigError(errors)
    return dims


def load_grid(path) -> List[Tuple[str, List[str]]]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([f"cannot read grid file {path}: {exc.strerror}"]) from exc
    return parse_grid(text, str(path))


def grid_cells(template: ExperimentConfig, dims: Sequence[Tuple[str, List[str]]],
               out) -> List[Tuple[Dict[str, str], ExperimentConfig]]:
    """Resolve every cell's config up front so that bad values fail before any training."""
    keys = [k for k, _ in dims]
    cells, errors = [], []
    for index, combo in enumerate(itertools.product(*(v for _, v in dims))):
        point = dict(zip(keys, combo))
        overrides = [f"{k}={v}" for k, v in point.items()]
        if "experiment.seed" not in point:
            overrides.append(f"experiment.seed={derive_seed(template.seed, 'grid', index)}")
        overrides.append(f"experiment.out={Path(out) / f'cell-{index:03d}'}")
        try:
            cells.append((point, apply_overrides(template, overrides)))
        except ConfigError as exc:
            errors += [f"cell {index} ({', '.join(overrides[:len(point)])}): {e}" for e in exc.errors]
    if errors:
        raise ConfigError(errors)
    return cells


@dataclass
class CellResult:
    index: int
    status: str
    seed: int
    epochs: int = 0
    train_loss: float = math.nan
    test_loss: float = math.nan
    test_accuracy: float = math.nan
    val_loss: float = math.nan
    val_accuracy: float = math.nan
    error: str = ""


def _run_cell(args) -> CellResult:
    index, cfg, dataset_root = args
    try:
        result = run_experiment(cfg, dataset_root=dataset_root)
    except Exception as exc:  # a failed cell must not stop the grid
        log.warning("grid cell %d failed: %s", index, exc)
        return CellResult(index, "failed", cfg.seed, error=f"{type(exc).__name__}: {exc}")
    r = result.final
    if r is None:
        return CellResult(index, "ok", cfg.seed)
    return CellResult(index, "ok", cfg.seed, r.epoch, r.train_loss, r.test_loss, r.test_accuracy,
                      r.val_loss, r.val_accuracy)


def select_best(results: Sequence[CellResult], task: str) -> Optional[int]:
    """Index of the best cell by validation score: accuracy for classification, loss for regression.

    Ties go to the lower cell index; cells without a finite score are ignored.
    """
    best, best_key = None, None
    for r in results:
        if r.status != "ok":
            continue
        if task == "regression":
            key = (r.val_loss,) if math.isfinite(r.val_loss) else None
        else:
            key = (-r.val_accuracy, r.val_loss if math.isfinite(r.val_loss) else math.inf) \
                if math.isfinite(r.val_accuracy) else None
        if key is not None and (best_key is None or key < best_key):
            best, best_key = r.index, key
    return best


@dataclass
class GridResult:
    keys: List[str]
    points: List[Dict[str, str]]
    results: List[CellResult]
    best: Optional[int]
    summary_path: Path

    @property
    def failures(self) -> int:
        return sum(r.status != "ok" for r in self.results)


def run_grid(template: ExperimentConfig, dims: Sequence[Tuple[str, List[str]]], out=None,
             dataset_root=None, workers: int = 1) -> GridResult:
    """Run every grid cell (in ``workers`` processes if > 1) and write ``summary.csv``."""
    out = Path(out if out is not None else template.out)
    cells = grid_cells(template, dims, out)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(i, cfg, dataset_root) for i, (_, cfg) in enumerate(cells)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell, jobs))
    else:
        results = [_run_cell(job) for job in jobs]

    task = "regression" if template.dataset.name == "adding" else "classification"
    best = select_best(results, task)
    keys = [k for k, _ in dims]
    summary = out / "summary.csv"
    with open(summary, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS_HEAD + keys + SUMMARY_COLUMNS_TAIL)
        for (point, _), r in zip(cells, results):
            writer.writerow([r.index, r.status, r.seed] + [point[k] for k in keys] + [
                r.epochs, format_value(r.train_loss), format_value(r.test_loss), format_value(r.test_accuracy),
                format_value(r.val_loss), format_value(r.val_accuracy), int(r.index == best), r.error])
    return GridResult(keys, [p for p, _ in cells], results, best, summary)
