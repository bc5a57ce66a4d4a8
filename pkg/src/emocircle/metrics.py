"""Distribution measures for label distribution learning.

Each measure works on a single pair of distributions or row-wise on
``N x C`` matrices. Clark and Canberra treat a 0/0 coordinate as 0 and are
normalized by sqrt(C) and C respectively unless asked otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.stats import rankdata

KL_EPS = 1e-10

# name, higher-is-better; order follows the usual LDL results tables
MEASURES = (
    ("chebyshev", False),
    ("clark", False),
    ("canberra", False),
    ("kl", False),
    ("cosine", True),
    ("intersection", True),
)
HIGHER_IS_BETTER = dict(MEASURES) | {"accuracy": True}


def _pair(d, d_hat):
    d = np.asarray(d, dtype=np.float64)
    d_hat = np.asarray(d_hat, dtype=np.float64)
    if d.shape != d_hat.shape:
        raise ValueError(f"length mismatch: {d.shape} vs {d_hat.shape}")
    return d, d_hat


def _out(v):
    return float(v) if np.ndim(v) == 0 else v


def _ratio(num, den):
    # 0/0 coordinates contribute nothing
    safe = np.where(den > 0, den, 1.0)
    return np.where(den > 0, num / safe, 0.0)


def chebyshev(d, d_hat):
    d, d_hat = _pair(d, d_hat)
    return _out(np.max(np.abs(d - d_hat), axis=-1))


def clark(d, d_hat, normalized: bool = True):
    d, d_hat = _pair(d, d_hat)
    value = np.sqrt(np.sum(_ratio((d - d_hat) ** 2, (d + d_hat) ** 2), axis=-1))
    if normalized:
        value = value / np.sqrt(d.shape[-1])
    return _out(value)


def canberra(d, d_hat, normalized: bool = True):
    d, d_hat = _pair(d, d_hat)
    value = np.sum(_ratio(np.abs(d - d_hat), d + d_hat), axis=-1)
    if normalized:
        value = value / d.shape[-1]
    return _out(value)


def kl_divergence(d, d_hat, eps: float = KL_EPS):
    """``sum d ln(d / (d_hat + eps))`` with ``0 ln 0 = 0``."""
    d, d_hat = _pair(d, d_hat)
    pos = d > 0
    safe = np.where(pos, d, 1.0)
    terms = np.where(pos, d * np.log(safe / (d_hat + eps)), 0.0)
    return _out(np.sum(terms, axis=-1))


def cosine(d, d_hat):
    d, d_hat = _pair(d, d_hat)
    nd = np.linalg.norm(d, axis=-1)
    nq = np.linalg.norm(d_hat, axis=-1)
    if np.any(nd == 0) or np.any(nq == 0):
        raise ValueError("cosine is undefined for a zero vector")
    return _out(np.sum(d * d_hat, axis=-1) / (nd * nq))


def intersection(d, d_hat):
    d, d_hat = _pair(d, d_hat)
    return _out(np.sum(np.minimum(d, d_hat), axis=-1))


def top1_accuracy(labeled, predicted) -> float:
    d, d_hat = _pair(np.atleast_2d(labeled), np.atleast_2d(predicted))
    if d.shape[0] == 0:
        raise ValueError("top-1 accuracy of an empty set")
    # np.argmax returns the lowest index among ties
    return float(np.mean(np.argmax(d, axis=1) == np.argmax(d_hat, axis=1)))


@dataclass(frozen=True)
class EvalReport:
    chebyshev: float
    clark: float
    canberra: float
    kl_div: float
    cosine: float
    intersection: float
    top1_accuracy: float
    sample_count: int

    CSV_HEADER = ("chebyshev", "clark", "canberra", "kl", "cosine", "intersection", "accuracy")

    def values(self) -> list[float]:
        return [self.chebyshev, self.clark, self.canberra, self.kl_div,
                self.cosine, self.intersection, self.top1_accuracy]

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.CSV_HEADER, self.values()))

    def csv_row(self) -> str:
        return ",".join(repr(float(v)) for v in self.values())

    def to_csv(self) -> str:
        return ",".join(self.CSV_HEADER) + "\n" + self.csv_row() + "\n"

    @classmethod
    def from_csv_row(cls, header: list[str], row: list[str], sample_count: int = 0):
        values = dict(zip(header, (float(v) for v in row)))
        return cls(*(values[k] for k in cls.CSV_HEADER), sample_count=sample_count)

    def table(self) -> str:
        arrows = {True: "up", False: "down"}
        lines = [f"{'measure':<20}{'value':>10}"]
        for name, value in self.as_dict().items():
            label = f"{name} ({arrows[HIGHER_IS_BETTER[name]]})"
            lines.append(f"{label:<20}{value:>10.4f}")
        lines.append(f"{'samples':<20}{self.sample_count:>10d}")
        return "\n".join(lines)


def evaluate_all(labeled, predicted) -> EvalReport:
    d, d_hat = _pair(np.atleast_2d(labeled), np.atleast_2d(predicted))
    if d.shape[0] == 0:
        raise ValueError("cannot evaluate an empty prediction set")
    return EvalReport(
        chebyshev=float(np.mean(chebyshev(d, d_hat))),
        clark=float(np.mean(clark(d, d_hat))),
        canberra=float(np.mean(canberra(d, d_hat))),
        kl_div=float(np.mean(kl_divergence(d, d_hat))),
        cosine=float(np.mean(cosine(d, d_hat))),
        intersection=float(np.mean(intersection(d, d_hat))),
        top1_accuracy=top1_accuracy(d, d_hat),
        sample_count=int(d.shape[0]),
    )


def average_rank(
    reports: Mapping[str, EvalReport | Mapping[str, float]],
    metrics: tuple[str, ...] = tuple(name for name, _ in MEASURES),
) -> dict[str, float]:
    """Mean per-metric rank of each method; rank 1 is best, ties share the lower rank."""
    if len(reports) < 2:
        raise ValueError("ranking needs at least two methods")
    tables = {
        name: (r.as_dict() if isinstance(r, EvalReport) else dict(r))
        for name, r in reports.items()
    }
    for name, table in tables.items():
        missing = [m for m in metrics if m not in table]
        if missing:
            raise ValueError(f"method {name!r} lacks metrics {missing}")
    names = list(tables)
    ranks = np.zeros((len(names), len(metrics)))
    for k, metric in enumerate(metrics):
        col = np.array([tables[n][metric] for n in names], dtype=np.float64)
        if HIGHER_IS_BETTER.get(metric, False):
            col = -col
        ranks[:, k] = rankdata(col, method="min")
    return {n: float(v) for n, v in zip(names, ranks.mean(axis=1))}
