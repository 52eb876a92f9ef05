"""Command-line entry point.

Commands: train, eval, sweep, verify, interp. The JSON config file is the
source of truth; flags select the command, paths, and a seed override.
Exit codes: 0 success, 1 verification failed, 2 config error, 3 training
divergence, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace

import numpy as np

from .autodiff import ShapeMismatch, Var, backward
from .config import ConfigError, load_run_config
from .metrics import latent_interpolation
from .nets import NetworkParams, mlp_forward_vars, mlp_init
from .optim import AdamHyper, adam_init, adam_step
from .theory import attraction_check, bound_suite
from .training import (
    CheckpointError,
    DivergenceError,
    evaluate_generator,
    load_checkpoint,
    rows_to_csv,
    sweep,
    task_specs,
    train,
)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_IO = 4


def _write(path, data) -> None:
    mode = "wb" if isinstance(data, bytes) else "w"
    with open(path, mode) as fh:
        fh.write(data)


def _load_config(args):
    if not args.config:
        raise ConfigError("missing --config")
    cfg = load_run_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def cmd_train(args) -> int:
    try:
        cfg = _load_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        os.makedirs(args.out, exist_ok=True)
        try:
            result = train(cfg)
        except DivergenceError as exc:
            _write(os.path.join(args.out, "metrics.csv"), rows_to_csv(exc.rows))
            print(f"divergence: {exc}", file=sys.stderr)
            return EXIT_DIVERGED
        _write(os.path.join(args.out, "metrics.csv"), rows_to_csv(result.rows))
        _write(os.path.join(args.out, "final.ckpt.json"), result.final_checkpoint)
        _write(os.path.join(args.out, "best.ckpt.json"), result.best_checkpoint)
        _write(os.path.join(args.out, "eval.json"), result.eval_report.to_json())
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def cmd_eval(args) -> int:
    try:
        cfg = _load_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        with open(args.checkpoint, "rb") as fh:
            state = load_checkpoint(fh.read())
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except CheckpointError as exc:
        print(f"checkpoint error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    g_spec, d_spec = task_specs(cfg)
    if state.params_G.spec != g_spec or state.params_D.spec != d_spec:
        print(
            f"config error: checkpoint specs do not match the config's task "
            f"(checkpoint G {state.params_G.spec.layer_dims}, config G {g_spec.layer_dims})",
            file=sys.stderr,
        )
        return EXIT_CONFIG
    report = evaluate_generator(state.params_G, cfg)
    try:
        _write(args.out, report.to_json())
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def cmd_sweep(args) -> int:
    try:
        cfg = _load_config(args)
        lambdas = [float(s) for s in args.lambdas.split(",") if s.strip() != ""]
        if not lambdas:
            raise ConfigError("--lambdas must name at least one value")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"config error: bad --lambdas: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    entries = sweep(cfg, lambdas, jobs=max(1, args.jobs))
    try:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "summary.csv"), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["lambda", "modes", "hq_frac", "diversity", "frechet"])
            for e in entries:
                if e.report is None:
                    writer.writerow([e.weight, "", "", "", ""])
                else:
                    writer.writerow([
                        e.weight, e.report.modes_captured, e.report.hq_fraction,
                        e.report.pairwise_diversity, e.report.frechet2,
                    ])
        doc = [
            {
                "lambda": e.weight,
                "report": None if e.report is None else json.loads(e.report.to_json()),
                "error": e.error,
            }
            for e in entries
        ]
        _write(os.path.join(args.out, "sweep.json"), json.dumps(doc, indent=2))
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def _target_distance_step(params_G, y_star, z1, adam_hyper):
    """One optimizer step pulling G(z1) toward y_star; returns new params."""
    gvars = [Var(p) for p in params_G.flat()]
    out, _ = mlp_forward_vars(gvars, params_G.spec, z1[None, :])
    dist = (out - Var(y_star[None, :])).square().sum().sqrt()
    backward(dist)
    new_flat, _ = adam_step(params_G.flat(), [v.grad for v in gvars],
                            adam_init(params_G.flat()), adam_hyper)
    return NetworkParams.from_flat(params_G.spec, new_flat)


def cmd_verify(args) -> int:
    """Gradient-bound suite on random pairs plus one attraction scenario."""
    try:
        with open(args.target, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except json.JSONDecodeError as exc:
        print(f"config error: target is not valid JSON: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    seed = args.seed if args.seed is not None else 0
    if isinstance(doc, dict) and "version" in doc:
        try:
            with open(args.target, "rb") as fh:
                params_G = load_checkpoint(fh.read()).params_G
        except CheckpointError as exc:
            print(f"checkpoint error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        z_dim = params_G.spec.input_dim
    else:
        try:
            cfg = load_run_config(args.target)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        if cfg.task != "ring":
            print("config error: verify expects an unconditional (ring) generator",
                  file=sys.stderr)
            return EXIT_CONFIG
        g_spec, _ = task_specs(cfg)
        params_G = mlp_init(g_spec, seed)
        z_dim = cfg.z_dim

    rng = np.random.default_rng(seed)
    bound = bound_suite(params_G, n_pairs=args.pairs, rng=rng, z_dim=z_dim)

    attraction = None
    for _ in range(8):  # rare: a step that fails to decrease the distance
        z1 = rng.standard_normal(z_dim)
        y_star = rng.standard_normal(params_G.spec.output_dim)
        params_t1 = _target_distance_step(params_G, y_star, z1, AdamHyper())
        try:
            attraction = attraction_check(params_G, params_t1, z1, y_star,
                                          probes=args.probes, rng=rng).summary()
            break
        except ValueError:
            continue
    if attraction is None:
        print("verify: could not construct an attracted scenario", file=sys.stderr)
        return EXIT_VERIFY_FAILED

    passed = bound["passed"] and attraction["passed"]
    report = {"gradient_bound": bound, "attraction": attraction, "passed": passed}
    try:
        _write(args.out, json.dumps(report, indent=2))
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(json.dumps(report, indent=2))
    return EXIT_OK if passed else EXIT_VERIFY_FAILED


def cmd_interp(args) -> int:
    try:
        with open(args.checkpoint, "rb") as fh:
            state = load_checkpoint(fh.read())
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except CheckpointError as exc:
        print(f"checkpoint error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    params_G = state.params_G
    z_dim = params_G.spec.input_dim
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    z_a = rng.standard_normal(z_dim)
    z_b = rng.standard_normal(z_dim)
    try:
        res = latent_interpolation(params_G, z_a, z_b, steps=args.steps, mode=args.mode)
    except (ValueError, ShapeMismatch) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            zcols = [f"z{i}" for i in range(z_dim)]
            ycols = [f"y{i}" for i in range(params_G.spec.output_dim)]
            writer.writerow(["step"] + zcols + ycols + ["slerp_fallback"])
            for i in range(args.steps):
                writer.writerow(
                    [i] + [repr(float(v)) for v in res.latents[i]]
                    + [repr(float(v)) for v in res.outputs[i]]
                    + [int(res.slerp_fallback)]
                )
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="divgan")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint with the config's protocol")
    p.add_argument("checkpoint")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="independent runs over a list of lambda values")
    p.add_argument("--config", required=True)
    p.add_argument("--lambdas", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="numerical checks of the gradient bound and attraction")
    p.add_argument("target", help="run config or checkpoint JSON")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--pairs", type=int, default=100)
    p.add_argument("--probes", type=int, default=2000)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("interp", help="latent interpolation through a checkpointed generator")
    p.add_argument("checkpoint")
    p.add_argument("--out", required=True)
    p.add_argument("--steps", type=int, default=9)
    p.add_argument("--mode", choices=("linear", "slerp"), default="slerp")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_interp)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
