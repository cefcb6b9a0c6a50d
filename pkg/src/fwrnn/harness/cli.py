"""Command line entry point: ``fwrnn {train,grid,plot,diag,gen-data,eval}``.

Exit codes: 0 success, 1 configuration error, 2 data error (missing or
corrupt dataset / checkpoint files), 3 numeric abort (non-finite value during
training or evaluation).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from ..data import DataError, build_dataset, save_adding_cache
from ..diagnostics import angle_probe, estimate_curvature, lambda_bound
from ..models import bptt, forward, init_params
from ..models import checkpoint
from ..models.checkpoint import CheckpointError
from ..numerics import NonFiniteError, Rng, derive_seed
from ..optim import TrainingAborted, evaluate, fw_inner_loop
from .config import ConfigError, ExperimentConfig, apply_overrides, load_config
from .grid import load_grid, run_grid
from .plot import PlotError, emit_plot
from .runner import model_spec_for, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("fwrnn")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="experiment config file (defaults apply when omitted)")
    p.add_argument("--seed", type=int, help="override experiment.seed")
    p.add_argument("--out", help="output directory (overrides experiment.out)")
    p.add_argument("--dataset-root", default=os.environ.get("FWRNN_DATASET_ROOT"),
                   help="directory with MNIST / UCI HAR files (default: $FWRNN_DATASET_ROOT)")
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                   help="set a config field, e.g. fw.K=5 (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fwrnn", description="Frank-Wolfe training of recurrent networks.")
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run one experiment")
    _common(p)
    p.add_argument("--print-config", action="store_true", help="print the resolved config and exit")

    p = sub.add_parser("grid", help="run a grid of experiments")
    _common(p)
    p.add_argument("--grid", required=True, help="grid file with a [grid] section")
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes")

    p = sub.add_parser("plot", help="render metrics.csv files to one SVG")
    p.add_argument("metrics", nargs="*", help="metrics.csv paths")
    p.add_argument("--labels", nargs="*", help="one legend label per file")
    p.add_argument("--out", default="curves.svg")

    p = sub.add_parser("diag", help="angle, curvature and lambda probes at a checkpoint")
    _common(p)
    p.add_argument("--checkpoint", help="model.ckpt (default: freshly initialised weights)")
    p.add_argument("--points", type=int, default=256, help="training points in the probe batch")
    p.add_argument("--samples", type=int, default=200, help="Monte-Carlo samples for the curvature estimate")

    p = sub.add_parser("gen-data", help="export the adding-task splits as binary caches")
    _common(p)

    p = sub.add_parser("eval", help="evaluate a checkpoint on the test (and validation) split")
    _common(p)
    p.add_argument("--checkpoint", required=True)
    return parser


def resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    overrides = list(args.override)
    if args.seed is not None:
        overrides.append(f"experiment.seed={args.seed}")
    if args.out is not None:
        overrides.append(f"experiment.out={args.out}")
    return apply_overrides(cfg, overrides)


def _load_params(path, spec):
    params = checkpoint.load(path)
    if params.spec != spec:
        raise CheckpointError(f"{path} holds a {params.spec} model, config describes {spec}")
    return params


def cmd_train(args) -> int:
    cfg = resolve_config(args)
    if args.print_config:
        sys.stdout.write(cfg.to_text())
        return EXIT_OK
    result = run_experiment(cfg, dataset_root=args.dataset_root)
    final = result.final
    if final is not None:
        print(f"epoch {final.epoch}: train_loss={final.train_loss!r} test_loss={final.test_loss!r} "
              f"test_accuracy={final.test_accuracy!r}")
    print(f"wrote {result.out_dir}")
    return EXIT_OK


def cmd_grid(args) -> int:
    cfg = resolve_config(args)
    result = run_grid(cfg, load_grid(args.grid), dataset_root=args.dataset_root, workers=args.workers)
    print(f"{len(result.results)} cells, {result.failures} failed, best cell: {result.best}")
    print(f"wrote {result.summary_path}")
    return EXIT_OK


def cmd_plot(args) -> int:
    out = emit_plot(args.metrics, args.labels, args.out)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_diag(args) -> int:
    cfg = resolve_config(args)
    ds = build_dataset(cfg.dataset, args.dataset_root, cfg.seed)
    spec = model_spec_for(cfg, ds)
    params = _load_params(args.checkpoint, spec) if args.checkpoint else \
        init_params(spec, Rng(derive_seed(cfg.seed, "init")))
    rng = Rng(derive_seed(cfg.seed, "diag"))
    n = min(args.points, ds.train.size)
    batch = ds.train.take(np.sort(rng.permutation(ds.train.size)[:n]))

    fw = cfg.fw
    _, grad = bptt(params, batch)
    d, report = fw_inner_loop(params, batch, fw, 1, fw.delta0)
    angle = angle_probe(grad.flatten(), d)

    def f(flat):
        p = params.unflatten(flat)
        loss, g = bptt(p, batch)
        return loss, g.flatten()

    curv = estimate_curvature(f, params.flatten(), fw.delta0, fw.p, args.samples, rng)
    lam = lambda_bound(fw.delta0, curv.value, report.grad_norms) if curv.value > 0 else float("nan")
    lines = [
        f"points = {n}",
        f"loss = {forward(params, batch).loss!r}",
        f"grad_norm = {float(np.linalg.norm(grad.flatten()))!r}",
        f"angle_degrees = {angle.degrees!r}",
        f"radius = {fw.delta0!r}",
        f"p = {fw.p!r}",
        f"curvature = {curv.value!r}",
        f"curvature_samples = {curv.samples}",
        f"curvature_skipped = {curv.skipped}",
        f"lambda = {lam!r}",
    ]
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "diag.txt").write_text(text, encoding="utf-8")
    return EXIT_OK


def cmd_gen_data(args) -> int:
    cfg = resolve_config(args)
    if cfg.dataset.name != "adding":
        raise ConfigError([f"gen-data only exports the adding task (dataset.name is {cfg.dataset.name!r})"])
    ds = build_dataset(cfg.dataset, None, cfg.seed)
    seed = cfg.seed if cfg.dataset.seed is None else cfg.dataset.seed
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    for split, batch in (("train", ds.train), ("test", ds.test)):
        path = out / f"adding-{split}.bin"
        save_adding_cache(batch, seed, cfg.dataset.label_mode, path)
        print(f"wrote {path} ({batch.size} x {batch.steps})")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = resolve_config(args)
    ds = build_dataset(cfg.dataset, args.dataset_root, cfg.seed)
    params = _load_params(args.checkpoint, model_spec_for(cfg, ds))
    for split, batch in (("test", ds.test), ("val", ds.val)):
        if batch is not None:
            loss, acc = evaluate(params, batch)
            print(f"{split}_loss = {loss!r}")
            print(f"{split}_accuracy = {acc!r}")
    return EXIT_OK


COMMANDS = {"train": cmd_train, "grid": cmd_grid, "plot": cmd_plot, "diag": cmd_diag,
            "gen-data": cmd_gen_data, "eval": cmd_eval}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, PlotError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, CheckpointError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (TrainingAborted, NonFiniteError) as exc:
        print(f"numeric abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
