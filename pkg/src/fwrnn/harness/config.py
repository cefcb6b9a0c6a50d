"""Experiment configuration and its text format.

The file is INI-like, one ``key = value`` per line grouped in sections::

    [meta]
    format = fwrnn-config
    version = 1

    [experiment]
    seed = 0
    out = runs/adding-fw

    [dataset]  name, steps, n_train, n_test, label_mode, downsample,
               permute_seed, noise_variance, val_fraction, seed
    [model]    cell, hidden, layers
    [train]    optimizer, epochs, batch_size, lr, lr_decay, decay_every, clip,
               segment_len, adam_beta1, adam_beta2, adam_eps, probe_angles,
               probe_samples, angles_per_epoch
    [fw]       p, delta0, K, T, eta, outer_mode, batch_mode, step_rule,
               radius_schedule

Floats are written with ``repr`` (shortest round-trip form), so writing and
re-reading a config is lossless. ``none`` stands for an unset optional value,
``inf`` for infinity and ``true``/``false`` for booleans. Keys are case
sensitive. Every field is always written, so a resolved config is a complete
record of what a run used. Overrides address fields as ``section.key``.
"""

from __future__ import annotations

import configparser
import dataclasses
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

from ..data import DatasetSpec
from ..optim import FwConfig, TrainConfig

FORMAT_NAME = "fwrnn-config"
FORMAT_VERSION = 1


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists every offending field."""

    def __init__(self, errors: List[str]):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))


@dataclass(frozen=True)
class ModelConfig:
    cell: str = "rnn"
    hidden: int = 128
    layers: int = 1

    def validate(self) -> List[str]:
        errors = []
        if self.cell not in ("rnn", "indrnn"):
            errors.append(f"model.cell must be 'rnn' or 'indrnn' (got {self.cell!r})")
        if self.hidden < 1:
            errors.append("model.hidden must be >= 1")
        if self.layers < 1:
            errors.append("model.layers must be >= 1")
        if self.cell == "rnn" and self.layers != 1:
            errors.append("model.layers must be 1 for the vanilla rnn cell")
        return errors


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    out: str = "runs/default"
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)

    @property
    def fw(self) -> FwConfig:
        return self.train.fw

    def validate(self) -> List[str]:
        return self.dataset.validate() + self.model.validate() + self.train.validate()

    def replace(self, **sections) -> "ExperimentConfig":
        return dataclasses.replace(self, **sections)

    def to_text(self) -> str:
        return dump_config(self)

    def save(self, path) -> None:
        Path(path).write_text(dump_config(self), encoding="utf-8")


# Section name -> (dataclass, how to pull the instance out of an ExperimentConfig).
_SECTIONS = {
    "dataset": (DatasetSpec, lambda c: c.dataset),
    "model": (ModelConfig, lambda c: c.model),
    "train": (TrainConfig, lambda c: c.train),
    "fw": (FwConfig, lambda c: c.train.fw),
}
_EXPERIMENT_KEYS = {"seed": int, "out": str}


def _section_fields(cls) -> List[Tuple[str, object]]:
    hints = typing.get_type_hints(cls)
    return [(f.name, hints[f.name]) for f in dataclasses.fields(cls) if f.name != "fw"]


def _format(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(text: str, hint):
    text = text.strip()
    args = typing.get_args(hint)
    if typing.get_origin(hint) is typing.Union and type(None) in args:
        if text.lower() == "none":
            return None
        hint = next(a for a in args if a is not type(None))
    if hint is bool:
        low = text.lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ValueError(f"expected true or false, got {text!r}")
    if hint is int:
        return int(text)
    if hint is float:
        return float(text)
    return text


def dump_config(cfg: ExperimentConfig) -> str:
    lines = ["# fwrnn experiment configuration", "",
             "[meta]", f"format = {FORMAT_NAME}", f"version = {FORMAT_VERSION}", "",
             "[experiment]", f"seed = {cfg.seed}", f"out = {cfg.out}"]
    for section, (cls, getter) in _SECTIONS.items():
        obj = getter(cfg)
        lines += ["", f"[{section}]"]
        lines += [f"{name} = {_format(getattr(obj, name))}" for name, _ in _section_fields(cls)]
    return "\n".join(lines) + "\n"


def _parser() -> configparser.ConfigParser:
    p = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=None)
    p.optionxform = str
    return p


def _values_from_text(text: str, source: str) -> Dict[str, str]:
    p = _parser()
    try:
        p.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError([f"{source}: {exc}"]) from exc
    errors = []
    if p.has_section("meta"):
        fmt = p["meta"].get("format", FORMAT_NAME)
        version = p["meta"].get("version", str(FORMAT_VERSION))
        if fmt != FORMAT_NAME:
            errors.append(f"meta.format must be {FORMAT_NAME!r} (got {fmt!r})")
        if version != str(FORMAT_VERSION):
            errors.append(f"meta.version {version!r} is not supported (expected {FORMAT_VERSION})")
    if errors:
        raise ConfigError(errors)
    return {f"{s}.{k}": v for s in p.sections() if s != "meta" for k, v in p[s].items()}


def _split_override(item: str) -> Tuple[str, str]:
    if "=" not in item:
        raise ConfigError([f"override {item!r} is not of the form section.key=value"])
    key, value = item.split("=", 1)
    return key.strip(), value.strip()


def build_config(values: Dict[str, str], base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    """Apply ``{"section.key": text}`` to ``base`` (defaults if None), checking every field."""
    base = base or ExperimentConfig()
    errors: List[str] = []
    known = {f"experiment.{k}" for k in _EXPERIMENT_KEYS}
    for section, (cls, _) in _SECTIONS.items():
        known |= {f"{section}.{name}" for name, _ in _section_fields(cls)}
    errors += [f"unknown key {key!r}" for key in values if key not in known]

    def collect(section, cls, current):
        out = {}
        for name, hint in _section_fields(cls):
            key = f"{section}.{name}"
            if key in values:
                try:
                    out[name] = _parse(values[key], hint)
                    continue
                except ValueError as exc:
                    errors.append(f"{key}: {exc}")
            out[name] = getattr(current, name)
        return out

    exp = {}
    for name, kind in _EXPERIMENT_KEYS.items():
        key = f"experiment.{name}"
        exp[name] = getattr(base, name)
        if key in values:
            try:
                exp[name] = kind(values[key])
            except ValueError as exc:
                errors.append(f"{key}: {exc}")

    fw_kw = collect("fw", FwConfig, base.train.fw)
    train_kw = collect("train", TrainConfig, base.train)
    data_kw = collect("dataset", DatasetSpec, base.dataset)
    model_kw = collect("model", ModelConfig, base.model)

    try:
        fw = FwConfig(**fw_kw)
    except ValueError as exc:
        errors += [f"fw.{e}" for e in str(exc).split("; ")]
        fw = base.train.fw
    cfg = ExperimentConfig(exp["seed"], exp["out"], DatasetSpec(**data_kw), ModelConfig(**model_kw),
                           TrainConfig(fw=fw, **train_kw))
    errors += cfg.validate()
    if errors:
        raise ConfigError(errors)
    return cfg


def parse_config(text: str, overrides: Iterable[str] = (), source: str = "<config>") -> ExperimentConfig:
    values = _values_from_text(text, source)
    for item in overrides:
        key, value = _split_override(item)
        values[key] = value
    return build_config(values)


def load_config(path, overrides: Iterable[str] = ()) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([f"cannot read config {path}: {exc.strerror}"]) from exc
    return parse_config(text, overrides, str(path))


def apply_overrides(cfg: ExperimentConfig, overrides: Iterable[str]) -> ExperimentConfig:
    values = dict(_split_override(item) for item in overrides)
    return build_config(values, cfg) if values else cfg


def config_fields() -> List[str]:
    """Every addressable ``section.key``, in file order."""
    keys = [f"experiment.{k}" for k in _EXPERIMENT_KEYS]
    for section, (cls, _) in _SECTIONS.items():
        keys += [f"{section}.{name}" for name, _ in _section_fields(cls)]
    return keys

