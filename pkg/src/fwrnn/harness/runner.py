"""Single-run driver: config -> dataset -> model -> trainer -> files on disk.

A run directory holds

* ``config.resolved``  the exact configuration used (see :mod:`.config`)
* ``metrics.csv``      one row per epoch, columns as in ``METRIC_COLUMNS``
* ``model.ckpt``       final parameters (binary checkpoint format)
* ``curves.svg``       loss and accuracy against epoch

Floats in the CSV are written with ``repr`` so they round-trip exactly. Only
the columns listed in ``TIMING_COLUMNS`` depend on the machine; everything
else is a function of (config, seed).
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import astuple, dataclass
from pathlib import Path
from typing import List, Optional

from ..data import Dataset, build_dataset
from ..models import ModelSpec, ParamSet
from ..models import checkpoint
from ..optim import TIMING_COLUMNS, TrainingAborted, TrainRecord, train
from .config import ExperimentConfig
from .plot import emit_plot

log = logging.getLogger(__name__)

METRIC_COLUMNS = TrainRecord.columns()


@dataclass
class RunResult:
    out_dir: Path
    config: ExperimentConfig
    params: ParamSet
    records: List[TrainRecord]

    @property
    def final(self) -> Optional[TrainRecord]:
        return self.records[-1] if self.records else None


def format_value(value) -> str:
    if isinstance(value, float):
        return "nan" if math.isnan(value) else repr(value)
    return str(value)


def metrics_row(record: TrainRecord) -> List[str]:
    return [format_value(v) for v in astuple(record)]


def strip_timing(text: str) -> str:
    """metrics.csv content with the timing columns removed, for determinism checks."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        return ""
    keep = [i for i, name in enumerate(rows[0]) if name not in TIMING_COLUMNS]
    return "\n".join(",".join(row[i] for i in keep) for row in rows) + "\n"


def model_spec_for(cfg: ExperimentConfig, dataset: Dataset) -> ModelSpec:
    return ModelSpec(cfg.model.cell, dataset.train.features, cfg.model.hidden, dataset.output_dim, cfg.model.layers)


def run_experiment(cfg: ExperimentConfig, out=None, dataset_root=None, dataset: Optional[Dataset] = None,
                   plot: bool = True) -> RunResult:
    """Run one experiment and write its artifacts into ``out`` (default ``cfg.out``).

    ``dataset`` short-circuits loading, e.g. when a grid shares one copy.
    Raises ``DataError`` for missing files and ``TrainingAborted`` on a
    non-finite value; in the latter case the metrics of the completed epochs
    are already on disk.
    """
    out_dir = Path(out if out is not None else cfg.out)
    cfg = cfg.replace(out=str(out_dir))
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg.save(out_dir / "config.resolved")

    if dataset is None:
        dataset = build_dataset(cfg.dataset, dataset_root, cfg.seed)
    spec = model_spec_for(cfg, dataset)
    log.info("run %s: %s on %s (%d train / %d test), %d parameters", out_dir, cfg.train.optimizer,
             dataset.name, dataset.train.size, dataset.test.size, sum(math.prod(s) for _, s in spec.shapes()))

    metrics_path = out_dir / "metrics.csv"
    with open(metrics_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(METRIC_COLUMNS)
        fh.flush()

        def on_epoch(record: TrainRecord, _params) -> None:
            writer.writerow(metrics_row(record))
            fh.flush()

        try:
            params, records = train(spec, dataset, cfg.train, cfg.seed, on_epoch=on_epoch)
        except TrainingAborted:
            fh.flush()
            if plot:
                emit_plot([metrics_path], [out_dir.name], out_dir / "curves.svg")
            raise

    checkpoint.save(params, out_dir / "model.ckpt")
    if plot:
        emit_plot([metrics_path], [out_dir.name], out_dir / "curves.svg")
    return RunResult(out_dir, cfg, params, records)
