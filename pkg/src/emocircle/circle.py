"""The Emotion Circle: basic unit vectors and the distribution -> vector map.

Category ``j`` sits at circle position ``positions[j]`` (1-based) with angle
``(2 * position - 1) * pi / C``. A distribution is mapped to a compound
vector by weighting each basic unit vector with its description degree and
summing in Cartesian coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Mapping

import numpy as np

from .config import check_keys, format_config, read_config

TWO_PI = 2.0 * math.pi
SIMPLEX_TOL = 1e-9
DEFAULT_DEGENERACY = 1e-9

# Mikel's wheel read counter-clockwise from the first basic angle pi/8.
MIKELS_CIRCULAR = (
    "contentment", "excitement", "anger", "disgust", "fear", "sad", "amusement", "awe",
)
# Label order commonly used by the Flickr_LDL / Twitter_LDL releases.
MIKELS_DATASET_ORDER = (
    "amusement", "awe", "contentment", "excitement", "anger", "disgust", "fear", "sad",
)


class InvalidDistributionError(ValueError):
    pass


class DegenerateInputError(ValueError):
    pass


@dataclass(frozen=True)
class CircleConfig:
    category_names: tuple[str, ...] = MIKELS_CIRCULAR
    positions: tuple[int, ...] | None = None
    degeneracy_threshold: float = DEFAULT_DEGENERACY

    def __post_init__(self):
        names = tuple(self.category_names)
        object.__setattr__(self, "category_names", names)
        c = len(names)
        if c < 2:
            raise ValueError("need at least two categories")
        if len(set(names)) != c:
            raise ValueError("category names must be distinct")
        positions = tuple(range(1, c + 1)) if self.positions is None else tuple(
            int(p) for p in self.positions
        )
        if sorted(positions) != list(range(1, c + 1)):
            raise ValueError(f"positions must be a permutation of 1..{c}, got {positions}")
        object.__setattr__(self, "positions", positions)
        if not self.degeneracy_threshold > 0:
            raise ValueError("degeneracy_threshold must be positive")

    @classmethod
    def mikels(cls, degeneracy_threshold: float = DEFAULT_DEGENERACY) -> "CircleConfig":
        """Dataset label order, each emotion placed at its Mikel's-wheel slot."""
        return cls(MIKELS_DATASET_ORDER, (7, 8, 1, 2, 3, 4, 5, 6), degeneracy_threshold)

    @classmethod
    def with_count(cls, c: int, degeneracy_threshold: float = DEFAULT_DEGENERACY):
        if c == len(MIKELS_CIRCULAR):
            return cls(MIKELS_CIRCULAR, None, degeneracy_threshold)
        return cls(tuple(f"e{j}" for j in range(1, c + 1)), None, degeneracy_threshold)

    @property
    def category_count(self) -> int:
        return len(self.category_names)

    @cached_property
    def angles(self) -> np.ndarray:
        """Angle of each category, in category order."""
        pos = np.asarray(self.positions, dtype=np.float64)
        out = (2.0 * pos - 1.0) * math.pi / self.category_count
        out.setflags(write=False)
        return out

    @cached_property
    def cos(self) -> np.ndarray:
        out = np.cos(self.angles)
        out.setflags(write=False)
        return out

    @cached_property
    def sin(self) -> np.ndarray:
        out = np.sin(self.angles)
        out.setflags(write=False)
        return out

    @cached_property
    def negative_mask(self) -> np.ndarray:
        out = polarity_of_angle(self.angles).astype(bool)
        out.setflags(write=False)
        return out

    def angle_of(self, j: int) -> float:
        """Angle of category ``j`` (1-based)."""
        return float(self.angles[j - 1])

    # -- key = value files -------------------------------------------------

    KEYS = frozenset({"category_count", "category_names", "positions", "degeneracy_threshold"})

    @classmethod
    def from_mapping(cls, values: Mapping[str, str]) -> "CircleConfig":
        own = {k: v for k, v in values.items() if k in cls.KEYS}
        threshold = float(own.get("degeneracy_threshold", DEFAULT_DEGENERACY))
        count = int(own["category_count"]) if "category_count" in own else None
        if "category_names" in own:
            names = tuple(n.strip() for n in own["category_names"].split(",") if n.strip())
        elif count is not None:
            names = cls.with_count(count).category_names
        else:
            names = MIKELS_CIRCULAR
        if count is not None and count != len(names):
            raise ValueError(
                f"category_count={count} but {len(names)} category names given"
            )
        positions = None
        if own.get("positions", "").strip():
            positions = tuple(int(p) for p in own["positions"].split(","))
        return cls(names, positions, threshold)

    @classmethod
    def load(cls, path: str | Path) -> "CircleConfig":
        values = read_config(path)
        check_keys(values, set(cls.KEYS))
        return cls.from_mapping(values)

    def to_mapping(self) -> dict[str, object]:
        out: dict[str, object] = {
            "category_count": self.category_count,
            "category_names": self.category_names,
        }
        if self.positions != tuple(range(1, self.category_count + 1)):
            out["positions"] = self.positions
        out["degeneracy_threshold"] = self.degeneracy_threshold
        return out

    def dumps(self) -> str:
        return format_config(self.to_mapping())


@dataclass(frozen=True)
class EmotionDistribution:
    degrees: np.ndarray

    def __post_init__(self):
        d = np.array(self.degrees, dtype=np.float64)
        check_simplex(d)
        d.setflags(write=False)
        object.__setattr__(self, "degrees", d)

    @classmethod
    def normalized(cls, values) -> "EmotionDistribution":
        d = np.asarray(values, dtype=np.float64)
        if d.ndim != 1 or np.any(~np.isfinite(d)) or np.any(d < 0) or d.sum() <= 0:
            raise InvalidDistributionError(f"cannot normalize {values!r}")
        return cls(d / d.sum())

    def __len__(self) -> int:
        return len(self.degrees)


def check_simplex(d: np.ndarray, tol: float = SIMPLEX_TOL) -> None:
    """Raise unless every row of ``d`` is a point of the probability simplex."""
    d = np.asarray(d)
    if d.ndim not in (1, 2) or d.shape[-1] == 0:
        raise InvalidDistributionError(f"bad distribution shape {d.shape}")
    if not np.all(np.isfinite(d)):
        raise InvalidDistributionError("distribution has non-finite degrees")
    if np.any(d < 0):
        raise InvalidDistributionError("distribution has negative degrees")
    sums = d.sum(axis=-1)
    if np.any(np.abs(sums - 1.0) > tol):
        raise InvalidDistributionError(
            f"degrees must sum to 1 (within {tol}), got {np.atleast_1d(sums).tolist()[:5]}"
        )


@dataclass(frozen=True)
class CartesianEmotion:
    x: float
    y: float


@dataclass(frozen=True)
class EmotionVector:
    polarity: int
    angle: float
    intensity: float
    degenerate: bool = False


@dataclass(frozen=True)
class CompoundVectors:
    """Row-wise compound vectors for a batch of distributions."""

    x: np.ndarray
    y: np.ndarray
    angle: np.ndarray
    intensity: np.ndarray
    polarity: np.ndarray
    degenerate: np.ndarray

    def __len__(self) -> int:
        return len(self.angle)

    def __getitem__(self, i: int) -> EmotionVector:
        return EmotionVector(
            int(self.polarity[i]), float(self.angle[i]),
            float(self.intensity[i]), bool(self.degenerate[i]),
        )


@dataclass(frozen=True)
class MappingJacobian:
    dtheta_dd: np.ndarray
    dr_dd: np.ndarray
    dsoft_polarity_dd: np.ndarray = field(repr=False)


def polarity_of_angle(theta):
    """0 on [0, pi/2) and [3pi/2, 2pi), 1 on [pi/2, 3pi/2)."""
    t = np.asarray(theta, dtype=np.float64)
    if np.any(~(t >= 0.0)) or np.any(t >= TWO_PI):
        raise ValueError("angle must lie in [0, 2pi)")
    p = ((t >= 0.5 * math.pi) & (t < 1.5 * math.pi)).astype(np.int64)
    return int(p) if p.ndim == 0 else p


def to_cartesian(theta, r):
    theta = np.asarray(theta, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    if np.any(r < 0):
        raise ValueError("intensity must be nonnegative")
    x, y = r * np.cos(theta), r * np.sin(theta)
    if x.ndim == 0:
        return CartesianEmotion(float(x), float(y))
    return x, y


def _angle(x, y, r, threshold):
    theta = np.arctan2(y, x)
    theta = np.where(theta < 0.0, theta + TWO_PI, theta)
    # -tiny + 2pi rounds up to exactly 2pi
    theta = np.where(theta >= TWO_PI, 0.0, theta)
    return np.where(r < threshold, 0.0, theta)


def to_polar(c, threshold: float = DEFAULT_DEGENERACY):
    """Quadrant-aware ``(theta, r)`` of a Cartesian point, theta in [0, 2pi)."""
    if isinstance(c, CartesianEmotion):
        x, y = np.float64(c.x), np.float64(c.y)
    else:
        x, y = (np.asarray(v, dtype=np.float64) for v in c)
    r = np.hypot(x, y)
    theta = _angle(x, y, r, threshold)
    if np.ndim(theta) == 0:
        return float(theta), float(r)
    return theta, r


def basic_vectors(config: CircleConfig) -> list[EmotionVector]:
    return [
        EmotionVector(polarity_of_angle(a), float(a), 1.0)
        for a in config.angles
    ]


def resultant(d: np.ndarray, config: CircleConfig) -> tuple[np.ndarray, np.ndarray]:
    """Cartesian sum of the weighted basic vectors; no simplex check."""
    d = np.asarray(d, dtype=np.float64)
    return d @ config.cos, d @ config.sin


def map_batch(d, config: CircleConfig, validate: bool = True) -> CompoundVectors:
    """Map each row of an ``N x C`` matrix of distributions to its compound vector."""
    d = np.atleast_2d(np.asarray(d, dtype=np.float64))
    if d.shape[1] != config.category_count:
        raise InvalidDistributionError(
            f"expected {config.category_count} degrees per row, got {d.shape[1]}"
        )
    if validate:
        check_simplex(d)
    x, y = resultant(d, config)
    r = np.hypot(x, y)
    theta = _angle(x, y, r, config.degeneracy_threshold)
    # a single-category row is its basic vector; skip the atan2 round trip
    single = np.count_nonzero(d, axis=1) == 1
    if single.any():
        j = np.argmax(d[single] != 0, axis=1)
        theta[single] = config.angles[j]
        r[single] = np.abs(d[single, j])
    degenerate = r < config.degeneracy_threshold
    polarity = np.where(degenerate, 0, polarity_of_angle(theta))
    return CompoundVectors(x, y, theta, r, polarity, degenerate)


def map_distribution(d, config: CircleConfig) -> EmotionVector:
    if isinstance(d, EmotionDistribution):
        d = d.degrees
    d = np.asarray(d, dtype=np.float64)
    if d.ndim != 1:
        raise InvalidDistributionError("map_distribution takes a single distribution")
    return map_batch(d[None, :], config)[0]


def soft_polarity(d, config: CircleConfig):
    """Probability mass on negative-half categories (row-wise for matrices)."""
    if isinstance(d, EmotionDistribution):
        d = d.degrees
    out = np.asarray(d, dtype=np.float64) @ config.negative_mask.astype(np.float64)
    return float(out) if np.ndim(out) == 0 else out


def jacobian_batch(d, config: CircleConfig) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise ``(dtheta/dd, dr/dd)``, each ``N x C``.

    Derivatives are with respect to the unconstrained degrees. Rows whose
    resultant is degenerate come back as NaN.
    """
    d = np.atleast_2d(np.asarray(d, dtype=np.float64))
    x, y = resultant(d, config)
    r2 = x * x + y * y
    r = np.sqrt(r2)
    with np.errstate(divide="ignore", invalid="ignore"):
        dtheta = (x[:, None] * config.sin - y[:, None] * config.cos) / r2[:, None]
        dr = (x[:, None] * config.cos + y[:, None] * config.sin) / r[:, None]
    bad = r < config.degeneracy_threshold
    dtheta[bad] = np.nan
    dr[bad] = np.nan
    return dtheta, dr


def mapping_jacobian(d, config: CircleConfig) -> MappingJacobian:
    if isinstance(d, EmotionDistribution):
        d = d.degrees
    d = np.asarray(d, dtype=np.float64)
    check_simplex(d)
    x, y = resultant(d, config)
    if math.hypot(x, y) < config.degeneracy_threshold:
        raise DegenerateInputError("resultant below degeneracy threshold; angle undefined")
    dtheta, dr = jacobian_batch(d[None, :], config)
    return MappingJacobian(dtheta[0], dr[0], config.negative_mask.astype(np.float64))
