"""Train/evaluate runs, the mu sweep and the loss-component ablation."""

from __future__ import annotations

import dataclasses
import os
from concurrent.futures import ThreadPoolExecutor

from .circle import CircleConfig
from .data import Dataset, split
from .metrics import EvalReport, evaluate_all
from .model import LinearModel, TrainConfig, TrainTrace, predict, train

SWEEP_HEADER = ("mu", "kl", "cosine", "accuracy")
ABLATION_HEADER = ("variant",) + EvalReport.CSV_HEADER

# (label, use_polar, use_type, use_intensity); the KL-only row runs at mu = 0
ABLATION_VARIANTS = (
    ("L_KL", False, False, False),
    ("L_KL+L_p", True, False, False),
    ("L_KL+L_t", False, True, False),
    ("L_KL+L_p+L_t", True, True, False),
    ("L_KL+L_PC", True, True, True),
)


@dataclasses.dataclass
class RunResult:
    model: LinearModel
    trace: TrainTrace
    report: EvalReport


def run(
    dataset: Dataset,
    config: TrainConfig,
    circle: CircleConfig,
    train_fraction: float = 0.8,
) -> RunResult:
    """Split with the config seed, train, and evaluate on the held-out part."""
    train_set, test_set = split(dataset, train_fraction, config.seed)
    model, trace, _ = train(train_set, config, circle, eval_set=test_set)
    report = evaluate_all(test_set.distributions, predict(model, test_set.features))
    return RunResult(model, trace, report)


def with_loss(config: TrainConfig, **changes) -> TrainConfig:
    return dataclasses.replace(config, loss=dataclasses.replace(config.loss, **changes))


def thread_cap() -> int:
    try:
        return max(1, int(os.environ.get("EMOCIRCLE_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn, items):
    workers = min(thread_cap(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def sweep_mu(dataset, config, circle, grid, train_fraction=0.8) -> list[tuple[float, EvalReport]]:
    grid = sorted(float(mu) for mu in grid)
    reports = _map(
        lambda mu: run(dataset, with_loss(config, mu=mu), circle, train_fraction).report, grid
    )
    return list(zip(grid, reports))


def ablate(dataset, config, circle, train_fraction=0.8) -> list[tuple[str, EvalReport]]:
    def one(variant):
        label, polar, type_, intensity = variant
        if label == "L_KL":
            cfg = with_loss(config, mu=0.0)
        else:
            cfg = with_loss(config, use_polar=polar, use_type=type_, use_intensity=intensity)
        return run(dataset, cfg, circle, train_fraction).report

    reports = _map(one, list(ABLATION_VARIANTS))
    return [(v[0], r) for v, r in zip(ABLATION_VARIANTS, reports)]


def sweep_csv(rows: list[tuple[float, EvalReport]]) -> str:
    lines = [",".join(SWEEP_HEADER)]
    for mu, r in rows:
        lines.append(",".join(repr(float(v)) for v in (mu, r.kl_div, r.cosine, r.top1_accuracy)))
    return "\n".join(lines) + "\n"


def ablation_csv(rows: list[tuple[str, EvalReport]]) -> str:
    lines = [",".join(ABLATION_HEADER)]
    for label, r in rows:
        lines.append(label + "," + r.csv_row())
    return "\n".join(lines) + "\n"
