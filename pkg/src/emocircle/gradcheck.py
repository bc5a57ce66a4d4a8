"""Central finite-difference check of the hand-derived parameter gradients."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .circle import CircleConfig, map_batch
from .losses import LossConfig, angle_difference, loss_report
from .model import LinearModel, backward, forward

# keeps the FD probe clear of the angle branch cut and of tiny resultants
MARGIN = 1e-3
MIN_INTENSITY = 0.05
# entries below this magnitude are compared absolutely; FD roundoff is ~1e-10 there
REL_FLOOR = 1e-4


@dataclass(frozen=True)
class GradcheckResult:
    points: int
    max_rel_error: float
    worst_point: int
    worst_param: str
    worst_index: tuple[int, ...]
    analytic: float
    numeric: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.tolerance

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        line = (f"{verdict} points={self.points} max_rel_error={self.max_rel_error:.3e} "
                f"tolerance={self.tolerance:.0e}")
        if not self.passed:
            line += (f"\nworst: point {self.worst_point} {self.worst_param}{list(self.worst_index)} "
                     f"analytic={self.analytic!r} numeric={self.numeric!r}")
        return line


def relative_error(a, b, floor: float | None = None):
    floor = REL_FLOOR if floor is None else floor
    a, b = np.asarray(a), np.asarray(b)
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)


def _objective(model, x, d, circle, loss, weight_decay) -> float:
    logits, _ = forward(model, x)
    value = loss_report(logits, d, circle, loss).combined
    return value + 0.5 * weight_decay * float(np.sum(model.weights ** 2))


def _well_posed(model, x, d, circle, loss) -> bool:
    lab = map_batch(d, circle, validate=False)
    _, q = forward(model, x)
    pred = map_batch(q, circle, validate=False)
    if np.any(lab.intensity < MIN_INTENSITY) or np.any(pred.intensity < MIN_INTENSITY):
        return False
    theta = pred.angle
    if loss.angle_difference == "raw":
        if np.any(theta < MARGIN) or np.any(theta > 2 * math.pi - MARGIN):
            return False
    else:
        delta = angle_difference(lab.angle, theta, "wrapped")
        if np.any(math.pi - np.abs(delta) < MARGIN):
            return False
    if loss.polarity_mode == "hard_subgradient":
        for edge in (0.5 * math.pi, 1.5 * math.pi):
            if np.any(np.abs(theta - edge) < MARGIN):
                return False
    return True


def random_problem(rng: np.random.Generator, circle: CircleConfig, loss: LossConfig):
    c = circle.category_count
    while True:
        n = int(rng.integers(2, 7))
        f_dim = int(rng.integers(2, 7))
        model = LinearModel(rng.normal(size=(c, f_dim)), rng.normal(size=c))
        x = rng.normal(size=(n, f_dim))
        d = rng.dirichlet(np.full(c, 0.5), size=n)
        if _well_posed(model, x, d, circle, loss):
            return model, x, d


def gradcheck(
    points: int = 100,
    seed: int = 0,
    mus: tuple[float, ...] = (0.0, 0.3, 0.7, 1.0),
    polarity_mode: str = "soft",
    angle_difference_mode: str = "raw",
    step: float = 1e-6,
    tolerance: float = 1e-5,
    circle: CircleConfig | None = None,
    grad_fn: Callable = backward,
) -> GradcheckResult:
    """Compare ``grad_fn`` against central differences at random problems.

    Each point draws a model, features, labels, and a weight decay; mu cycles
    through ``mus``.
    """
    circle = circle or CircleConfig()
    worst = (-1.0, -1, "", (), 0.0, 0.0)
    for k in range(points):
        rng = np.random.default_rng([seed, k])
        loss = LossConfig(mu=mus[k % len(mus)], polarity_mode=polarity_mode,
                          angle_difference=angle_difference_mode,
                          degeneracy_threshold=circle.degeneracy_threshold)
        model, x, d = random_problem(rng, circle, loss)
        wd = float(rng.uniform(0.0, 1e-2))
        grads, _ = grad_fn(model, x, d, circle, loss, wd)
        for name, param in model.params().items():
            for idx in np.ndindex(param.shape):
                orig = param[idx]
                param[idx] = orig + step
                up = _objective(model, x, d, circle, loss, wd)
                param[idx] = orig - step
                down = _objective(model, x, d, circle, loss, wd)
                param[idx] = orig
                numeric = (up - down) / (2 * step)
                analytic = float(grads[name][idx])
                err = float(relative_error(analytic, numeric))
                if err > worst[0]:
                    worst = (err, k, name, tuple(int(i) for i in idx), analytic, numeric)
    return GradcheckResult(points, worst[0], worst[1], worst[2], worst[3],
                           worst[4], worst[5], tolerance)
