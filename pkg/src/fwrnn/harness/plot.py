"""Loss / accuracy curves from one or more metrics.csv files, rendered to SVG.

Output is a pure function of the inputs: matplotlib's SVG id salt is fixed,
the date stamp is dropped and glyphs are emitted as paths, so no external
fonts are referenced and repeated renders are byte-identical.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import matplotlib

matplotlib.use("Agg")

from matplotlib.figure import Figure  # noqa: E402

_RC = {"svg.hashsalt": "fwrnn", "svg.fonttype": "path", "path.simplify": False}


class PlotError(ValueError):
    pass


def read_metrics(path) -> Dict[str, List[float]]:
    """Columns of a metrics CSV as float lists; an empty file gives {}."""
    text = Path(path).read_text(encoding="utf-8")
    if not text.strip():
        return {}
    rows = list(csv.reader(text.splitlines()))
    header, body = rows[0], rows[1:]
    cols: Dict[str, List[float]] = {name: [] for name in header}
    for line_no, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise PlotError(f"{path}:{line_no}: expected {len(header)} fields, found {len(row)}")
        for name, value in zip(header, row):
            try:
                cols[name].append(float(value))
            except ValueError:
                cols[name].append(math.nan)
    return cols


def _finite(xs, ys):
    pairs = [(x, y) for x, y in zip(xs, ys) if math.isfinite(y)]
    return [p[0] for p in pairs], [p[1] for p in pairs]


def emit_plot(paths: Sequence, labels: Optional[Sequence[str]] = None, out="curves.svg") -> Path:
    """Write a two-panel SVG (loss, accuracy vs epoch) with one series group per input file."""
    paths = [Path(p) for p in paths]
    labels = list(labels) if labels is not None else [p.parent.name or p.stem for p in paths]
    if len(labels) != len(paths):
        raise PlotError(f"{len(paths)} metrics files but {len(labels)} labels")
    tables = [read_metrics(p) for p in paths]
    headers = {tuple(t) for t in tables if t}
    if len(headers) > 1:
        raise PlotError("metrics files do not share a column schema")
    if headers and not {"epoch", "train_loss"} <= set(next(iter(headers))):
        raise PlotError("metrics files need at least 'epoch' and 'train_loss' columns")

    with matplotlib.rc_context(_RC):
        fig = Figure(figsize=(10, 4))
        ax_loss, ax_acc = fig.subplots(1, 2)
        for label, cols in zip(labels, tables):
            if not cols or not cols["epoch"]:
                continue
            epoch = cols["epoch"]
            for name, style in (("train_loss", "-"), ("test_loss", "--")):
                x, y = _finite(epoch, cols.get(name, []))
                if y:
                    ax_loss.plot(x, y, style, marker="o" if len(y) == 1 else None,
                                 label=f"{label} {name.split('_')[0]}")
            for name, style in (("test_accuracy", "-"), ("val_accuracy", ":")):
                x, y = _finite(epoch, cols.get(name, []))
                if y:
                    ax_acc.plot(x, y, style, marker="o" if len(y) == 1 else None,
                                label=f"{label} {name.split('_')[0]}")
        ax_loss.set(xlabel="epoch", ylabel="loss", title="loss")
        ax_acc.set(xlabel="epoch", ylabel="accuracy", title="accuracy")
        for ax in (ax_loss, ax_acc):
            ax.grid(True, alpha=0.3)
            if ax.get_legend_handles_labels()[0]:
                ax.legend(fontsize="small")
        fig.tight_layout()
        out = Path(out)
        out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out, format="svg", metadata={"Date": None})
    return out
