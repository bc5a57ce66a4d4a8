"""Linear-softmax predictor trained with Adam on the combined objective."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .circle import CircleConfig, InvalidDistributionError
from .config import check_keys, format_config, read_config
from .data import Dataset
from .losses import LossConfig, LossReport, loss_and_grad, softmax_predict
from .metrics import EvalReport, evaluate_all

CHECKPOINT_MAGIC = "emocircle-linear"
CHECKPOINT_VERSION = 1


class NonFiniteLossError(FloatingPointError):
    def __init__(self, epoch: int, detail: str = ""):
        super().__init__(f"non-finite loss in epoch {epoch}{': ' + detail if detail else ''}")
        self.epoch = epoch


@dataclass
class LinearModel:
    weights: np.ndarray  # C x F
    bias: np.ndarray  # C

    @classmethod
    def init(cls, feature_dim: int, category_count: int, seed: int = 0, scale: float = 0.01):
        rng = np.random.default_rng([seed, 0x5EED])
        return cls(scale * rng.normal(size=(category_count, feature_dim)),
                   np.zeros(category_count))

    @classmethod
    def zeros(cls, feature_dim: int, category_count: int):
        return cls(np.zeros((category_count, feature_dim)), np.zeros(category_count))

    @property
    def feature_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def category_count(self) -> int:
        return self.weights.shape[0]

    def copy(self) -> "LinearModel":
        return LinearModel(self.weights.copy(), self.bias.copy())

    def params(self) -> dict[str, np.ndarray]:
        return {"weights": self.weights, "bias": self.bias}

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias)))


def forward(model: LinearModel, features) -> tuple[np.ndarray, np.ndarray]:
    """Logits and softmax predictions for an ``N x F`` feature matrix."""
    f = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if f.shape[1] != model.feature_dim:
        raise ValueError(f"model expects {model.feature_dim} features, got {f.shape[1]}")
    logits = f @ model.weights.T + model.bias
    return logits, softmax_predict(logits)


def backward(
    model: LinearModel,
    features,
    labeled,
    circle: CircleConfig,
    loss: LossConfig,
    weight_decay: float = 0.0,
) -> tuple[dict[str, np.ndarray], LossReport]:
    """Parameter gradients of the combined loss plus coupled weight decay."""
    f = np.atleast_2d(np.asarray(features, dtype=np.float64))
    d = np.atleast_2d(np.asarray(labeled, dtype=np.float64))
    if f.shape[0] != d.shape[0]:
        raise ValueError("features and labels differ in sample count")
    if d.shape[1] != model.category_count:
        raise ValueError(f"model predicts {model.category_count} categories, labels have {d.shape[1]}")
    logits, _ = forward(model, f)
    report, g = loss_and_grad(logits, d, circle, loss)
    grads = {
        "weights": g.T @ f + weight_decay * model.weights,
        "bias": g.sum(axis=0),
    }
    return grads, report


@dataclass
class Adam:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray], lr: float) -> None:
        """One in-place bias-corrected adaptive-moment update."""
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for k, p in params.items():
            g = grads[k]
            if p.shape != g.shape:
                raise ValueError(f"gradient for {k} has shape {g.shape}, expected {p.shape}")
            if k not in self.m:
                self.m[k] = np.zeros_like(p)
                self.v[k] = np.zeros_like(p)
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * (g * g)
            p -= lr * (self.m[k] / bc1) / (np.sqrt(self.v[k] / bc2) + self.eps)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-5
    weight_decay: float = 5e-5
    lr_decay_every: int = 10
    lr_decay_factor: float = 0.1
    epochs: int = 50
    batch_size: int = 32
    seed: int = 0
    init_scale: float = 0.01
    loss: LossConfig = LossConfig()

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.lr_decay_every < 1:
            raise ValueError("lr_decay_every must be at least 1")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be nonnegative")

    KEYS = frozenset({
        "learning_rate", "weight_decay", "lr_decay_every", "lr_decay_factor",
        "epochs", "batch_size", "seed", "init_scale",
    })

    def lr_at(self, epoch: int) -> float:
        """Learning rate for 0-based ``epoch`` under the step schedule."""
        return self.learning_rate * self.lr_decay_factor ** (epoch // self.lr_decay_every)

    @classmethod
    def from_mapping(cls, values: Mapping[str, str]) -> "TrainConfig":
        kw: dict[str, object] = {}
        for key in ("learning_rate", "weight_decay", "lr_decay_factor", "init_scale"):
            if key in values:
                kw[key] = float(values[key])
        for key in ("lr_decay_every", "epochs", "batch_size", "seed"):
            if key in values:
                kw[key] = int(values[key])
        kw["loss"] = LossConfig.from_mapping(values)
        return cls(**kw)

    @classmethod
    def load(cls, path: str | Path) -> "TrainConfig":
        values = read_config(path)
        check_keys(values, set(cls.KEYS) | set(LossConfig.KEYS) | set(CircleConfig.KEYS))
        return cls.from_mapping(values)

    def to_mapping(self) -> dict[str, object]:
        out = {f.name: getattr(self, f.name) for f in dataclasses.fields(self) if f.name != "loss"}
        out.update(self.loss.to_mapping())
        return out

    def dumps(self) -> str:
        return format_config(self.to_mapping())


@dataclass
class TrainTrace:
    losses: list[LossReport] = field(default_factory=list)
    evals: list[EvalReport] = field(default_factory=list)
    learning_rates: list[float] = field(default_factory=list)
    first_epoch: int = 0

    HEADER = ("epoch", "lr") + LossReport.FIELDS + tuple(
        f"eval_{k}" for k in EvalReport.CSV_HEADER
    )

    def __len__(self) -> int:
        return len(self.losses)

    def to_csv(self) -> str:
        rows = [",".join(self.HEADER)]
        for k, (lr, loss, ev) in enumerate(zip(self.learning_rates, self.losses, self.evals)):
            values = [lr] + loss.as_row() + ev.values()
            rows.append(",".join([str(self.first_epoch + k + 1)] + [repr(float(v)) for v in values]))
        return "\n".join(rows) + "\n"


@dataclass
class TrainState:
    """Everything needed to resume training exactly where it stopped."""

    model: LinearModel
    optimizer: Adam
    epoch: int = 0  # completed epochs


def epoch_order(n: int, seed: int, epoch: int) -> np.ndarray:
    return np.random.default_rng([seed, epoch]).permutation(n)


def train(
    train_set: Dataset,
    config: TrainConfig,
    circle: CircleConfig | None = None,
    eval_set: Dataset | None = None,
    state: TrainState | None = None,
) -> tuple[LinearModel, TrainTrace, TrainState]:
    """Mini-batch Adam on the combined loss.

    Evaluation after each epoch uses ``eval_set`` (the training set when
    omitted). Passing a saved ``state`` resumes at its next epoch; the shuffle
    order depends only on ``(seed, epoch)``, so a resumed run repeats the
    uninterrupted one exactly.
    """
    if len(train_set) == 0:
        raise ValueError("empty training set")
    if circle is None:
        circle = CircleConfig.with_count(train_set.category_count,
                                         config.loss.degeneracy_threshold)
    if eval_set is None:
        eval_set = train_set
    if state is None:
        model = LinearModel.init(train_set.feature_dim, train_set.category_count,
                                 config.seed, config.init_scale)
        state = TrainState(model, Adam())
    model = state.model
    if (model.feature_dim, model.category_count) != (train_set.feature_dim, train_set.category_count):
        raise ValueError("model shape does not match the dataset")

    x, y = train_set.features, train_set.distributions
    n = len(train_set)
    trace = TrainTrace(first_epoch=state.epoch)
    for epoch in range(state.epoch, config.epochs):
        lr = config.lr_at(epoch)
        order = epoch_order(n, config.seed, epoch)
        sums = np.zeros(len(LossReport.FIELDS))
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            with np.errstate(over="ignore", invalid="ignore"):
                try:
                    grads, report = backward(model, x[idx], y[idx], circle, config.loss,
                                             config.weight_decay)
                except InvalidDistributionError:
                    raise NonFiniteLossError(epoch + 1, "predictions overflowed") from None
            if not np.isfinite(report.combined) or not all(
                np.all(np.isfinite(g)) for g in grads.values()
            ):
                raise NonFiniteLossError(epoch + 1, f"batch starting at {start}")
            state.optimizer.step(model.params(), grads, lr)
            sums += len(idx) * np.array(report.as_row())
        if not model.is_finite():
            raise NonFiniteLossError(epoch + 1, "parameters became non-finite")
        mean = sums / n
        trace.losses.append(LossReport(*(float(v) for v in mean)))
        trace.learning_rates.append(lr)
        _, pred = forward(model, eval_set.features)
        trace.evals.append(evaluate_all(eval_set.distributions, pred))
        state.epoch = epoch + 1
    return model, trace, state


def predict(model: LinearModel, features) -> np.ndarray:
    return forward(model, features)[1]


# -- checkpoints ---------------------------------------------------------


def _fmt(a: np.ndarray) -> str:
    return " ".join(repr(float(v)) for v in np.ravel(a))


def save_checkpoint(path: str | Path, state: TrainState) -> None:
    """Plain-text checkpoint: header, shapes, row-major weights, bias, optimizer."""
    model, opt = state.model, state.optimizer
    lines = [
        f"{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}",
        f"{model.feature_dim} {model.category_count}",
        _fmt(model.weights),
        _fmt(model.bias),
        f"epoch {state.epoch}",
        f"adam {opt.t} {opt.beta1!r} {opt.beta2!r} {opt.eps!r}",
    ]
    if opt.t:
        for k in ("weights", "bias"):
            lines.append(_fmt(opt.m[k]))
            lines.append(_fmt(opt.v[k]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_checkpoint(path: str | Path) -> TrainState:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    try:
        magic, version = lines[0].split()
        if magic != CHECKPOINT_MAGIC or int(version) != CHECKPOINT_VERSION:
            raise ValueError(f"not a version-{CHECKPOINT_VERSION} checkpoint")
        f_dim, c = (int(v) for v in lines[1].split())

        def arr(line: str, shape) -> np.ndarray:
            values = np.array([float(v) for v in line.split()], dtype=np.float64)
            return values.reshape(shape)

        model = LinearModel(arr(lines[2], (c, f_dim)), arr(lines[3], (c,)))
        epoch = int(lines[4].split()[1])
        _, t, b1, b2, eps = lines[5].split()
        opt = Adam(float(b1), float(b2), float(eps), int(t))
        if opt.t:
            opt.m["weights"] = arr(lines[6], (c, f_dim))
            opt.v["weights"] = arr(lines[7], (c, f_dim))
            opt.m["bias"] = arr(lines[8], (c,))
            opt.v["bias"] = arr(lines[9], (c,))
    except (IndexError, ValueError) as exc:
        raise ValueError(f"malformed checkpoint {path}: {exc}") from None
    return TrainState(model, opt, epoch)
