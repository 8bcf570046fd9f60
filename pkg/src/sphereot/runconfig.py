"""Run configuration: an INI-style document with strict key validation.

Sections: [task], [train], [synthetic], [data], [plot], [output]. Unknown
sections or keys are errors so typos fail loudly. Every artifact a run
produces embeds the configuration hash.
"""

import configparser
import hashlib
import os
from dataclasses import dataclass, field

import numpy as np

from .distributions import (
    TWO_EIGHTH_SPHERE_BANDS,
    VmfParams,
    four_mode_mixture,
    make_sampler,
    sample_band_union,
    sample_mixture,
    sample_vmf,
    six_mode_mixture,
)
from .errors import ConfigError
from .trainer import TrainConfig

TASK_KINDS = ("synthetic-1", "synthetic-2", "feature-align", "custom")

_SCHEMA = {
    "task": {"kind": str},
    "train": {
        "learning_rate": float,
        "lambda_fidelity": float,
        "batch_size": int,
        "total_outer_iters": int,
        "inner_f_steps": int,
        "seed": int,
        "eval_every": int,
        "beta1": float,
        "beta2": float,
        "adam_eps": float,
        "grad_clip": float,
        "epsilon_den": float,
        "epsilon_cost": float,
        "hidden_dim": int,
        "num_hidden_layers": int,
        "eval_batch_size": int,
        "convexity_triples": int,
    },
    "synthetic": {"kappa": float, "n_train": int},
    "data": {"source": str, "target": str, "paired": bool, "renormalize": bool},
    "plot": {"projection": str, "central_meridian": float},
    "output": {"dir": str},
}


@dataclass
class RunConfig:
    kind: str
    train: TrainConfig
    kappa: float = 50.0
    source_path: str = None
    target_path: str = None
    paired: bool = False
    renormalize: bool = False
    projection: str = "mollweide"
    central_meridian: float = 0.0
    output_dir: str = "."
    config_hash: str = ""
    raw_items: dict = field(default_factory=dict)


def _coerce(section, key, value):
    want = _SCHEMA[section][key]
    try:
        if want is bool:
            low = value.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {value!r}")
        return want(value)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: {exc}") from exc


def parse_config(path) -> RunConfig:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    items = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, value in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            items[(section, key)] = _coerce(section, key, value)

    kind = items.get(("task", "kind"))
    if kind not in TASK_KINDS:
        raise ConfigError(f"[task] kind must be one of {TASK_KINDS}, got {kind!r}")

    train_kwargs = {k: v for (s, k), v in items.items() if s == "train"}
    if "total_outer_iters" not in train_kwargs:
        raise ConfigError("[train] total_outer_iters is required")
    if kind == "feature-align":
        if ("data", "source") not in items or ("data", "target") not in items:
            raise ConfigError("[data] source and target are required for feature-align")
        train_kwargs.setdefault("lambda_fidelity", 1.0)
    else:
        train_kwargs.setdefault("lambda_fidelity", 0.0)
    try:
        train = TrainConfig(**train_kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[train]: {exc}") from exc

    canonical = "\n".join(f"{s}.{k}={items[(s, k)]}" for s, k in sorted(items))
    cfg_hash = hashlib.sha256(canonical.encode()).hexdigest()[:12]

    return RunConfig(
        kind=kind,
        train=train,
        kappa=items.get(("synthetic", "kappa"), 50.0),
        source_path=items.get(("data", "source")),
        target_path=items.get(("data", "target")),
        paired=items.get(("data", "paired"), kind == "feature-align"),
        renormalize=items.get(("data", "renormalize"), False),
        projection=items.get(("plot", "projection"), "mollweide"),
        central_meridian=items.get(("plot", "central_meridian"), 0.0),
        output_dir=items.get(("output", "dir"), "."),
        config_hash=cfg_hash,
        raw_items=items,
    )


def task_samplers(cfg: RunConfig):
    """(source_sampler, target_sampler) for the synthetic task kinds."""
    if cfg.kind == "synthetic-1":
        return (make_sampler(sample_mixture, four_mode_mixture(cfg.kappa)),
                make_sampler(sample_band_union, TWO_EIGHTH_SPHERE_BANDS))
    if cfg.kind == "synthetic-2":
        return (make_sampler(sample_vmf, VmfParams(np.array([1.0, 0.0, 0.0]), cfg.kappa)),
                make_sampler(sample_mixture, six_mode_mixture(cfg.kappa)))
    raise ConfigError(f"task kind {cfg.kind!r} has no synthetic samplers")


def task_target_support(cfg: RunConfig):
    """Band supports for coverage, where the task defines them exactly."""
    if cfg.kind == "synthetic-1":
        return list(TWO_EIGHTH_SPHERE_BANDS)
    return None
