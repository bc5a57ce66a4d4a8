"""Command-line interface.

Exit codes: 0 success, 1 verification failure, 2 usage or input error,
3 numerical failure. The resolved configuration goes to stderr before each
command runs; results go to stdout or to the files named by the flags.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from .circle import CircleConfig, EmotionDistribution, InvalidDistributionError, map_batch
from .config import ConfigError, check_keys, format_config, read_config
from .data import INGEST_TOL, DataFormatError, load_csv, save_csv, split, synth_generate
from .experiments import ablate, ablation_csv, sweep_csv, sweep_mu
from .gradcheck import gradcheck
from .losses import LossConfig
from .metrics import evaluate_all
from .model import (
    NonFiniteLossError,
    TrainConfig,
    load_checkpoint,
    predict,
    save_checkpoint,
    train,
)

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _show_config(**sections) -> None:
    print("# resolved configuration", file=sys.stderr)
    for name, values in sections.items():
        print(f"# [{name}]", file=sys.stderr)
        sys.stderr.write(format_config(values))


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _float_list(text: str, what: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"cannot parse {what} {text!r}") from None
    if not values:
        raise UsageError(f"empty {what}")
    return values


def _resolve(args) -> tuple[CircleConfig, TrainConfig]:
    values = read_config(args.config) if getattr(args, "config", None) else {}
    check_keys(values, set(CircleConfig.KEYS) | set(LossConfig.KEYS) | set(TrainConfig.KEYS))
    circle = CircleConfig.from_mapping(values)
    cfg = TrainConfig.from_mapping(values)
    if circle.degeneracy_threshold != cfg.loss.degeneracy_threshold:
        # one threshold per run: whichever the file set wins for both
        thr = float(values["degeneracy_threshold"]) if "degeneracy_threshold" in values else (
            circle.degeneracy_threshold)
        circle = dataclasses.replace(circle, degeneracy_threshold=thr)
    overrides = {}
    for flag, key in (("seed", "seed"), ("epochs", "epochs"), ("learning_rate", "learning_rate")):
        if getattr(args, flag, None) is not None:
            overrides[key] = getattr(args, flag)
    loss_overrides = {}
    if getattr(args, "mu", None) is not None:
        loss_overrides["mu"] = args.mu
    if getattr(args, "angle_difference", None) is not None:
        loss_overrides["angle_difference"] = args.angle_difference
    if loss_overrides:
        overrides["loss"] = dataclasses.replace(cfg.loss, **loss_overrides)
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    return circle, cfg


def _format_vector(v) -> str:
    return (f"p={v.polarity} theta={v.angle:.6f} r={v.intensity:.6f} "
            f"degenerate={'true' if v.degenerate else 'false'}")


# -- commands -----------------------------------------------------------


def cmd_map(args) -> int:
    circle, _ = _resolve(args)
    _show_config(circle=circle.to_mapping())
    if (args.dist is None) == (args.input is None):
        raise UsageError("give exactly one of --dist or --input")
    if args.dist is not None:
        values = np.array(_float_list(args.dist, "distribution"))
        if len(values) != circle.category_count:
            raise UsageError(f"expected {circle.category_count} degrees, got {len(values)}")
        if np.any(values < 0) or abs(values.sum() - 1.0) > INGEST_TOL:
            raise UsageError("degrees must be nonnegative and sum to 1")
        d = EmotionDistribution.normalized(values)
        vec = map_batch(d.degrees, circle)[0]
        _emit(_format_vector(vec) + "\n", args.out)
        return EXIT_OK
    ds = load_csv(args.input, circle)
    vecs = map_batch(ds.distributions, circle)
    lines = ["id,p,theta,r,degenerate"]
    for i, sid in enumerate(ds.ids):
        v = vecs[i]
        lines.append(f"{sid},{v.polarity},{v.angle:.6f},{v.intensity:.6f},"
                     f"{'true' if v.degenerate else 'false'}")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_train(args) -> int:
    circle, cfg = _resolve(args)
    _show_config(circle=circle.to_mapping(), train=cfg.to_mapping(),
                 run={"data": args.data, "train_fraction": args.train_fraction})
    ds = load_csv(args.data, circle)
    train_set, test_set = split(ds, args.train_fraction, cfg.seed)
    state = load_checkpoint(args.resume) if args.resume else None
    if state is not None and state.epoch >= cfg.epochs:
        raise UsageError(f"checkpoint already at epoch {state.epoch} >= epochs={cfg.epochs}")
    model, trace, state = train(train_set, cfg, circle, eval_set=test_set, state=state)
    report = evaluate_all(test_set.distributions, predict(model, test_set.features))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_checkpoint(out / "model.ckpt", state)
    (out / "trace.csv").write_text(trace.to_csv(), encoding="utf-8")
    (out / "eval.csv").write_text(report.to_csv(), encoding="utf-8")
    (out / "config.txt").write_text(
        format_config(circle.to_mapping() | cfg.to_mapping()), encoding="utf-8"
    )
    print(report.table())
    return EXIT_OK


def cmd_eval(args) -> int:
    circle, _ = _resolve(args)
    _show_config(circle=circle.to_mapping(), run={"data": args.data, "model": args.model})
    ds = load_csv(args.data, circle)
    state = load_checkpoint(args.model)
    model = state.model
    if model.feature_dim != ds.feature_dim or model.category_count != ds.category_count:
        raise UsageError(
            f"model is {model.feature_dim} features -> {model.category_count} categories, "
            f"data is {ds.feature_dim} -> {ds.category_count}"
        )
    report = evaluate_all(ds.distributions, predict(model, ds.features))
    print(report.table())
    if args.out:
        Path(args.out).write_text(report.to_csv(), encoding="utf-8")
    else:
        sys.stdout.write(report.to_csv())
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    mus = tuple(_float_list(args.mu, "mu list"))
    if any(not 0 <= m <= 1 for m in mus):
        raise UsageError("mu values must lie in [0, 1]")
    _show_config(gradcheck={
        "seed": args.seed, "points": args.points, "mu": mus,
        "polarity_mode": args.polarity_mode, "angle_difference": args.angle_difference,
        "step": 1e-6, "tolerance": args.tolerance,
    })
    result = gradcheck(args.points, args.seed, mus, args.polarity_mode,
                       args.angle_difference, tolerance=args.tolerance)
    print(result.summary())
    return EXIT_OK if result.passed else EXIT_VERIFY


def cmd_sweep_mu(args) -> int:
    grid = _float_list(args.grid, "grid")
    if any(not 0 <= m <= 1 for m in grid):
        raise UsageError("grid values must lie in [0, 1]")
    if len(set(grid)) != len(grid):
        raise UsageError("grid values must be distinct")
    circle, cfg = _resolve(args)
    _show_config(circle=circle.to_mapping(), train=cfg.to_mapping(),
                 run={"data": args.data, "grid": grid, "train_fraction": args.train_fraction})
    ds = load_csv(args.data, circle)
    rows = sweep_mu(ds, cfg, circle, grid, args.train_fraction)
    _emit(sweep_csv(rows), args.out)
    return EXIT_OK


def cmd_ablate(args) -> int:
    circle, cfg = _resolve(args)
    _show_config(circle=circle.to_mapping(), train=cfg.to_mapping(),
                 run={"data": args.data, "train_fraction": args.train_fraction})
    ds = load_csv(args.data, circle)
    rows = ablate(ds, cfg, circle, args.train_fraction)
    _emit(ablation_csv(rows), args.out)
    return EXIT_OK


def cmd_synth(args) -> int:
    _show_config(synth={
        "n": args.n, "features": args.features, "categories": args.categories,
        "concentration": args.concentration, "noise": args.noise,
        "max_support": args.max_support, "seed": args.seed, "out": args.out,
    })
    ds = synth_generate(args.n, args.features, args.categories, args.concentration,
                        args.noise, args.seed, args.max_support)
    save_csv(ds, args.out)
    return EXIT_OK


# -- parser -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="emocircle", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def training_flags(p):
        p.add_argument("--data", required=True, help="dataset CSV")
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--seed", type=int)
        p.add_argument("--epochs", type=int)
        p.add_argument("--learning-rate", type=float)
        p.add_argument("--angle-difference", choices=("raw", "wrapped"))
        p.add_argument("--train-fraction", type=float, default=0.8)

    p = sub.add_parser("map", help="map distributions to compound emotion vectors")
    p.add_argument("--dist", help="comma-separated description degrees")
    p.add_argument("--input", help="dataset CSV; one output row per sample")
    p.add_argument("--config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("train", help="train a linear-softmax model")
    training_flags(p)
    p.add_argument("--mu", type=float)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--resume", help="checkpoint to continue from")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="finite-difference check of the loss gradients")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--mu", default="0,0.3,0.7,1")
    p.add_argument("--polarity-mode", choices=("soft", "hard_subgradient"), default="soft")
    p.add_argument("--angle-difference", choices=("raw", "wrapped"), default="raw")
    p.add_argument("--tolerance", type=float, default=1e-5)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("sweep-mu", help="train one model per mu and report KL/cosine/accuracy")
    training_flags(p)
    p.add_argument("--grid", default="0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep_mu)

    p = sub.add_parser("ablate", help="the five loss-component variants")
    training_flags(p)
    p.add_argument("--mu", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("synth", help="write a synthetic dataset")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--features", type=int, default=16)
    p.add_argument("--categories", type=int, default=8)
    p.add_argument("--concentration", type=float, default=2.0)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--max-support", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NonFiniteLossError as exc:
        _err(str(exc))
        return EXIT_NUMERIC
    except (UsageError, ConfigError, DataFormatError, InvalidDistributionError,
            ValueError, OSError) as exc:
        _err(str(exc))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
