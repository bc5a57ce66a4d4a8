"""Datasets: CSV ingestion, the seeded 80/20 split, and a synthetic generator.

CSV layout, one sample per line::

    id,f1,...,fF,d1,...,dC

Ids match ``[A-Za-z0-9_-]+``; floats are written with ``repr`` so files
survive save -> load -> save byte for byte.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .circle import MIKELS_CIRCULAR, SIMPLEX_TOL, CircleConfig

INGEST_TOL = 1e-6
_ID = re.compile(r"^[A-Za-z0-9_-]+$")


class DataFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Sample:
    id: str
    features: np.ndarray
    distribution: np.ndarray


@dataclass(frozen=True)
class Dataset:
    ids: tuple[str, ...]
    features: np.ndarray
    distributions: np.ndarray
    category_names: tuple[str, ...]

    def __post_init__(self):
        ids = tuple(self.ids)
        feats = np.asarray(self.features, dtype=np.float64)
        dists = np.asarray(self.distributions, dtype=np.float64)
        if not ids:
            raise DataFormatError("dataset is empty")
        if feats.ndim != 2 or dists.ndim != 2:
            raise DataFormatError("features and distributions must be 2-D")
        if not (len(ids) == feats.shape[0] == dists.shape[0]):
            raise DataFormatError("ids, features and distributions differ in length")
        if dists.shape[1] != len(self.category_names):
            raise DataFormatError(
                f"{dists.shape[1]} distribution columns but "
                f"{len(self.category_names)} category names"
            )
        if len(set(ids)) != len(ids):
            raise DataFormatError("sample ids are not unique")
        bad = [i for i in ids if not _ID.match(i)]
        if bad:
            raise DataFormatError(f"invalid sample id {bad[0]!r}")
        if not np.all(np.isfinite(feats)) or not np.all(np.isfinite(dists)):
            raise DataFormatError("non-finite values in dataset")
        if np.any(dists < 0) or np.any(np.abs(dists.sum(axis=1) - 1.0) > SIMPLEX_TOL):
            raise DataFormatError("distributions must lie on the simplex")
        feats.setflags(write=False)
        dists.setflags(write=False)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "distributions", dists)
        object.__setattr__(self, "category_names", tuple(self.category_names))

    def __len__(self) -> int:
        return len(self.ids)

    def __getitem__(self, i: int) -> Sample:
        return Sample(self.ids[i], self.features[i], self.distributions[i])

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    @property
    def category_count(self) -> int:
        return self.distributions.shape[1]

    def subset(self, index) -> "Dataset":
        index = np.asarray(index, dtype=np.int64)
        return Dataset(
            tuple(self.ids[i] for i in index),
            self.features[index],
            self.distributions[index],
            self.category_names,
        )


def _names_for(c: int, config: CircleConfig | None) -> tuple[str, ...]:
    if config is not None:
        if config.category_count != c:
            raise DataFormatError(
                f"file has {c} distribution columns, configuration expects "
                f"{config.category_count}"
            )
        return config.category_names
    return CircleConfig.with_count(c).category_names


def _parse_header(line: str) -> tuple[int, int]:
    cols = line.strip().split(",")
    if not cols or cols[0] != "id":
        raise DataFormatError("line 1: header must start with 'id'")
    f_cols = [c for c in cols[1:] if c.startswith("f")]
    d_cols = [c for c in cols[1:] if c.startswith("d")]
    n_f, n_d = len(f_cols), len(d_cols)
    expected = ["id"] + [f"f{k}" for k in range(1, n_f + 1)] + [f"d{k}" for k in range(1, n_d + 1)]
    if cols != expected:
        raise DataFormatError("line 1: header must read id,f1,...,fF,d1,...,dC")
    if n_d < 2:
        raise DataFormatError("line 1: need at least two distribution columns")
    return n_f, n_d


def load_csv(path: str | Path, config: CircleConfig | None = None) -> Dataset:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines:
        raise DataFormatError("file is empty")
    n_f, n_d = _parse_header(lines[0])
    names = _names_for(n_d, config)
    ids, feats, dists = [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cols = line.split(",")
        if len(cols) != 1 + n_f + n_d:
            raise DataFormatError(
                f"line {lineno}: expected {1 + n_f + n_d} columns, got {len(cols)}"
            )
        if not _ID.match(cols[0]):
            raise DataFormatError(f"line {lineno}: invalid id {cols[0]!r}")
        try:
            values = np.array([float(v) for v in cols[1:]], dtype=np.float64)
        except ValueError as exc:
            raise DataFormatError(f"line {lineno}: {exc}") from None
        if not np.all(np.isfinite(values)):
            raise DataFormatError(f"line {lineno}: non-finite value")
        d = values[n_f:]
        if np.any(d < 0):
            raise DataFormatError(f"line {lineno}: negative description degree")
        total = d.sum()
        if abs(total - 1.0) > INGEST_TOL:
            raise DataFormatError(
                f"line {lineno}: degrees sum to {total!r}, off by more than {INGEST_TOL}"
            )
        if abs(total - 1.0) > SIMPLEX_TOL:
            d = d / total
        ids.append(cols[0])
        feats.append(values[:n_f])
        dists.append(d)
    if not ids:
        raise DataFormatError("file has a header but no samples")
    return Dataset(tuple(ids), np.array(feats).reshape(len(ids), n_f), np.array(dists), names)


def format_csv(dataset: Dataset) -> str:
    n_f, n_d = dataset.feature_dim, dataset.category_count
    header = ["id"] + [f"f{k}" for k in range(1, n_f + 1)] + [f"d{k}" for k in range(1, n_d + 1)]
    out = [",".join(header)]
    for i, sid in enumerate(dataset.ids):
        values = list(dataset.features[i]) + list(dataset.distributions[i])
        out.append(",".join([sid] + [repr(float(v)) for v in values]))
    return "\n".join(out) + "\n"


def save_csv(dataset: Dataset, path: str | Path) -> None:
    Path(path).write_text(format_csv(dataset), encoding="utf-8")


def split(dataset: Dataset, train_fraction: float = 0.8, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Seeded uniform shuffle; the first ceil(fraction * N) samples train."""
    n = len(dataset)
    if n < 2:
        raise ValueError("splitting needs at least two samples")
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie in (0, 1)")
    n_train = math.ceil(round(train_fraction * n, 9))
    n_train = min(max(n_train, 1), n - 1)
    order = np.random.default_rng(seed).permutation(n)
    return dataset.subset(order[:n_train]), dataset.subset(order[n_train:])


def synth_generate(
    n: int,
    feature_dim: int,
    category_count: int = 8,
    concentration: float = 2.0,
    noise: float = 0.05,
    seed: int = 0,
    max_support: int = 3,
    contiguous: bool = True,
    category_names: tuple[str, ...] | None = None,
) -> Dataset:
    """Distributions concentrated on 1..max_support circle positions, linear features.

    Each sample picks a support size ``k`` uniformly in ``1..max_support`` and,
    when ``contiguous``, a run of ``k`` adjacent circle positions (otherwise
    ``k`` positions at random). Degrees on the support are drawn from a
    symmetric Dirichlet with the given concentration. Features are a fixed
    random teacher matrix applied to the distribution plus Gaussian noise.
    """
    if n < 1 or feature_dim < 1 or category_count < 2:
        raise ValueError("need n >= 1, feature_dim >= 1, category_count >= 2")
    if not concentration > 0:
        raise ValueError("concentration must be positive")
    if noise < 0:
        raise ValueError("noise must be nonnegative")
    if not 1 <= max_support <= category_count:
        raise ValueError("max_support must lie in 1..category_count")
    if category_names is None:
        category_names = (
            MIKELS_CIRCULAR if category_count == len(MIKELS_CIRCULAR)
            else tuple(f"e{j}" for j in range(1, category_count + 1))
        )

    rng = np.random.default_rng(seed)
    c = category_count
    teacher = rng.normal(size=(feature_dim, c))
    dists = np.zeros((n, c))
    for i in range(n):
        k = int(rng.integers(1, max_support + 1))
        if contiguous:
            start = int(rng.integers(c))
            support = (start + np.arange(k)) % c
        else:
            support = rng.choice(c, size=k, replace=False)
        dists[i, support] = rng.dirichlet(np.full(k, concentration)) if k > 1 else 1.0
    dists /= dists.sum(axis=1, keepdims=True)
    feats = dists @ teacher.T + noise * rng.normal(size=(n, feature_dim))
    width = len(str(n - 1))
    ids = tuple(f"s{i:0{width}d}" for i in range(n))
    return Dataset(ids, feats, dists, tuple(category_names))
