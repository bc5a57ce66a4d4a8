"""KL loss, the progressive circular loss and their gradients w.r.t. logits.

The circular term compares labeled and predicted compound vectors on the
circle: a polarity penalty, an angle penalty, both weighted by the labeled
intensity. Samples whose labeled vector is degenerate carry no angle and are
left out of the circular term, whose mean runs over the remaining samples.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .circle import (
    CircleConfig,
    CompoundVectors,
    DEFAULT_DEGENERACY,
    InvalidDistributionError,
    jacobian_batch,
    map_batch,
)
from .config import check_keys, format_config, parse_bool, read_config

PROB_FLOOR = 1e-12
POLARITY_MODES = ("soft", "hard_subgradient")
ANGLE_MODES = ("raw", "wrapped")


class DegenerateBatchWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class LossConfig:
    mu: float = 0.7
    polarity_mode: str = "soft"
    angle_difference: str = "raw"
    degeneracy_threshold: float = DEFAULT_DEGENERACY
    # component toggles for the loss ablation
    use_polar: bool = True
    use_type: bool = True
    use_intensity: bool = True

    def __post_init__(self):
        if not 0.0 <= self.mu <= 1.0:
            raise ValueError(f"mu must lie in [0, 1], got {self.mu}")
        if self.polarity_mode not in POLARITY_MODES:
            raise ValueError(f"polarity_mode must be one of {POLARITY_MODES}")
        if self.angle_difference not in ANGLE_MODES:
            raise ValueError(f"angle_difference must be one of {ANGLE_MODES}")
        if not self.degeneracy_threshold > 0:
            raise ValueError("degeneracy_threshold must be positive")

    KEYS = frozenset({
        "mu", "polarity_mode", "angle_difference", "degeneracy_threshold",
        "use_polar", "use_type", "use_intensity",
    })

    @classmethod
    def from_mapping(cls, values: Mapping[str, str]) -> "LossConfig":
        kw: dict[str, object] = {}
        for key in ("mu", "degeneracy_threshold"):
            if key in values:
                kw[key] = float(values[key])
        for key in ("polarity_mode", "angle_difference"):
            if key in values:
                kw[key] = values[key].strip()
        for key in ("use_polar", "use_type", "use_intensity"):
            if key in values:
                kw[key] = parse_bool(values[key])
        return cls(**kw)

    @classmethod
    def load(cls, path: str | Path) -> "LossConfig":
        values = read_config(path)
        check_keys(values, set(cls.KEYS))
        return cls.from_mapping(values)

    def to_mapping(self) -> dict[str, object]:
        return dataclasses.asdict(self)

    def dumps(self) -> str:
        return format_config(self.to_mapping())


@dataclass(frozen=True)
class LossReport:
    kl: float
    polar: float
    type_: float
    pc: float
    combined: float

    FIELDS = ("kl", "polar", "type", "pc", "combined")

    def as_row(self) -> list[float]:
        return [self.kl, self.polar, self.type_, self.pc, self.combined]


@dataclass(frozen=True)
class BatchPrediction:
    logits: np.ndarray
    predicted: np.ndarray
    labeled: np.ndarray

    def __post_init__(self):
        if self.logits.shape != self.predicted.shape or self.logits.shape != self.labeled.shape:
            raise ValueError(
                f"shape mismatch: logits {self.logits.shape}, predicted "
                f"{self.predicted.shape}, labeled {self.labeled.shape}"
            )

    @classmethod
    def from_logits(cls, logits, labeled) -> "BatchPrediction":
        logits = np.atleast_2d(np.asarray(logits, dtype=np.float64))
        labeled = np.atleast_2d(np.asarray(labeled, dtype=np.float64))
        return cls(logits, softmax_predict(logits), labeled)


def softmax_predict(logits) -> np.ndarray:
    z = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def kl_loss(labeled, predicted) -> float:
    """Mean cross-entropy ``-sum d ln d_hat`` over samples.

    Predicted zeros are floored at ``PROB_FLOOR`` before the logarithm.
    """
    d = np.atleast_2d(np.asarray(labeled, dtype=np.float64))
    q = np.atleast_2d(np.asarray(predicted, dtype=np.float64))
    if d.shape != q.shape:
        raise ValueError(f"shape mismatch {d.shape} vs {q.shape}")
    if np.any(~(q >= 0)) or np.any(~np.isfinite(q)):
        raise InvalidDistributionError("predicted distribution must be finite and nonnegative")
    return float(-(d * np.log(np.maximum(q, PROB_FLOOR))).sum() / d.shape[0])


def polar_loss(labeled_p, predicted_p) -> float:
    p = np.asarray(labeled_p, dtype=np.float64)
    q = np.asarray(predicted_p, dtype=np.float64)
    if p.size == 0:
        return 0.0
    return float(np.mean((p - q) ** 2))


def angle_difference(theta, theta_hat, mode: str = "raw"):
    """``theta - theta_hat``; in wrapped mode folded into (-pi, pi]."""
    delta = np.asarray(theta, dtype=np.float64) - np.asarray(theta_hat, dtype=np.float64)
    if mode == "raw":
        return delta
    if mode != "wrapped":
        raise ValueError(f"unknown angle mode {mode!r}")
    wrapped = np.mod(delta + math.pi, 2.0 * math.pi) - math.pi
    return np.where(wrapped == -math.pi, math.pi, wrapped)


def type_loss(labeled_theta, predicted_theta, mode: str = "raw") -> float:
    delta = angle_difference(labeled_theta, predicted_theta, mode)
    if delta.size == 0:
        return 0.0
    return float(np.mean(delta ** 2))


def _circular_terms(
    labeled: CompoundVectors, predicted_p, predicted_theta, config: LossConfig
):
    """Per-sample circular penalties and the mask of samples that count."""
    keep = ~np.asarray(labeled.degenerate, dtype=bool)
    dp2 = (labeled.polarity - np.asarray(predicted_p, dtype=np.float64)) ** 2
    dt2 = angle_difference(labeled.angle, predicted_theta, config.angle_difference) ** 2
    weight = labeled.intensity if config.use_intensity else np.ones_like(labeled.intensity)
    per_sample = weight * (
        (dp2 if config.use_polar else 0.0) + (dt2 if config.use_type else 0.0)
    )
    return per_sample, dp2, dt2, keep


def pc_loss(
    labeled: CompoundVectors, predicted_p, predicted_theta, config: LossConfig = LossConfig()
) -> float:
    """Intensity-weighted polarity + angle penalty, averaged over non-degenerate labels.

    Emits ``DegenerateBatchWarning`` and returns 0 when every label is degenerate.
    """
    per_sample, _, _, keep = _circular_terms(labeled, predicted_p, predicted_theta, config)
    if not keep.any():
        warnings.warn("every labeled sample is degenerate; circular loss is 0",
                      DegenerateBatchWarning, stacklevel=2)
        return 0.0
    return float(per_sample[keep].sum() / keep.sum())


def combined_loss(kl: float, pc: float, mu: float) -> float:
    if not 0.0 <= mu <= 1.0:
        raise ValueError(f"mu must lie in [0, 1], got {mu}")
    return (1.0 - mu) * kl + mu * pc


def _loss_circle(circle: CircleConfig, config: LossConfig) -> CircleConfig:
    if circle.degeneracy_threshold == config.degeneracy_threshold:
        return circle
    return dataclasses.replace(circle, degeneracy_threshold=config.degeneracy_threshold)


def _predicted_polarity(pred: CompoundVectors, predicted: np.ndarray,
                        circle: CircleConfig, config: LossConfig) -> np.ndarray:
    if config.polarity_mode == "soft":
        return predicted @ circle.negative_mask.astype(np.float64)
    return pred.polarity.astype(np.float64)


def loss_and_grad(
    logits, labeled, circle: CircleConfig, config: LossConfig, need_grad: bool = True
) -> tuple[LossReport, np.ndarray | None]:
    """Loss report and gradient of the combined objective w.r.t. ``logits``."""
    batch = BatchPrediction.from_logits(logits, labeled)
    if batch.labeled.shape[1] != circle.category_count:
        raise ValueError(
            f"expected {circle.category_count} categories, got {batch.labeled.shape[1]}"
        )
    n = batch.labeled.shape[0]
    q, d = batch.predicted, batch.labeled
    kl = kl_loss(d, q)

    circ = _loss_circle(circle, config)
    mu = config.mu
    grad = (q - d) / n if need_grad else None

    lab =map_batch(d, circ, validate=False)
    pred = map_batch(q, circ, validate=False)
    p_hat = _predicted_polarity(pred, q, circ, config)
    per_sample, dp2, dt2, keep = _circular_terms(lab, p_hat, pred.angle, config)
    n_keep = int(keep.sum())
    if n_keep:
        pc = float(per_sample[keep].sum() / n_keep)
        polar = float(dp2[keep].mean())
        type_ = float(dt2[keep].mean())
    else:
        pc = polar = type_ = 0.0
    report = LossReport(kl, polar, type_, pc, combined_loss(kl, pc, mu))

    if not need_grad:
        return report, None
    if mu == 0.0:
        return report, grad
    if n_keep == 0:
        return report, (1.0 - mu) * grad

    active = keep & ~pred.degenerate
    g_q = np.zeros_like(q)
    if active.any():
        weight = lab.intensity if config.use_intensity else np.ones(n)
        scale = (weight / n_keep)[:, None]
        if config.use_polar and config.polarity_mode == "soft":
            neg = circ.negative_mask.astype(np.float64)
            g_q += scale * (-2.0 * (lab.polarity - p_hat))[:, None] * neg
        if config.use_type:
            delta = angle_difference(lab.angle, pred.angle, config.angle_difference)
            dtheta, _ = jacobian_batch(q, circ)
            dtheta = np.where(active[:, None], dtheta, 0.0)
            g_q += scale * (-2.0 * delta)[:, None] * dtheta
        g_q[~active] = 0.0
    # chain through the softmax: dz = q * (g - <g, q>)
    g_z = q * (g_q - (g_q * q).sum(axis=1, keepdims=True))
    return report, (1.0 - mu) * grad + mu * g_z


def loss_report(logits, labeled, circle: CircleConfig, config: LossConfig) -> LossReport:
    return loss_and_grad(logits, labeled, circle, config, need_grad=False)[0]


def grad_combined_wrt_logits(
    logits, labeled, circle: CircleConfig, config: LossConfig
) -> np.ndarray:
    return loss_and_grad(logits, labeled, circle, config)[1]
