"""Strict JSON run configs.

The config file is the source of truth for a run; command-line flags only
pick the command, paths, and an optional seed override. Unknown keys are
rejected by name so typos cannot silently fall back to defaults.
"""

from __future__ import annotations

import json

from .data import RingMixtureSpec
from .losses import DiversityConfig, ObjectiveConfig
from .optim import AdamHyper
from .training import TrainConfig

__all__ = ["ConfigError", "parse_run_config", "load_run_config", "TASK_DEFAULTS"]

ALLOWED_TOP = {
    "task", "z_dim", "batch_size", "steps", "seed", "lambda", "tau", "norm",
    "space", "beta", "g_loss_form", "lr", "beta1", "beta2", "eval_every",
    "ring", "warm_start_discriminator",
}
ALLOWED_RING = {"n_modes", "radius", "std"}

# per-task defaults for the knobs the tasks disagree on
TASK_DEFAULTS = {
    "ring": {"lambda": 0.1, "z_dim": 2, "space": "output"},
    "conditional_ring": {"lambda": 1.0, "z_dim": 8, "space": "output"},
    "trajectory": {"lambda": 10.0, "z_dim": 8, "space": "sequence"},
}


class ConfigError(ValueError):
    """Config file failed validation; the message names the offending keys."""


def parse_run_config(doc: dict) -> TrainConfig:
    if not isinstance(doc, dict):
        raise ConfigError(f"config root must be an object, got {type(doc).__name__}")
    unknown = [k for k in doc if k not in ALLOWED_TOP]
    ring_doc = doc.get("ring", {})
    if not isinstance(ring_doc, dict):
        raise ConfigError("config key 'ring' must be an object")
    unknown += [f"ring.{k}" for k in ring_doc if k not in ALLOWED_RING]
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")

    task = doc.get("task", "ring")
    if task not in TASK_DEFAULTS:
        raise ConfigError(f"task: expected one of {sorted(TASK_DEFAULTS)}, got {task!r}")
    defaults = TASK_DEFAULTS[task]

    try:
        ring = RingMixtureSpec(
            n_modes=int(ring_doc.get("n_modes", 8)),
            radius=float(ring_doc.get("radius", 2.0)),
            std=float(ring_doc.get("std", 0.02)),
        )
        tau = doc.get("tau", 10.0)
        diversity = DiversityConfig(
            weight=float(doc.get("lambda", defaults["lambda"])),
            tau=None if tau is None else float(tau),
            norm=doc.get("norm", "l1"),
            space=doc.get("space", defaults["space"]),
        )
        objective = ObjectiveConfig(
            beta=float(doc.get("beta", 0.0)),
            g_loss_form=doc.get("g_loss_form", "non_saturating"),
            diversity=diversity,
        )
        adam = AdamHyper(
            lr=float(doc.get("lr", 2e-4)),
            beta1=float(doc.get("beta1", 0.5)),
            beta2=float(doc.get("beta2", 0.999)),
        )
        return TrainConfig(
            task=task,
            objective=objective,
            ring=ring,
            z_dim=int(doc.get("z_dim", defaults["z_dim"])),
            batch_size=int(doc.get("batch_size", 128)),
            steps=int(doc.get("steps", 30000)),
            adam=adam,
            seed=int(doc.get("seed", 0)),
            eval_every=int(doc.get("eval_every", 1000)),
            warm_start_discriminator=doc.get("warm_start_discriminator"),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_run_config(path) -> TrainConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return parse_run_config(doc)
