"""Domain types, configuration and score normalization."""

from __future__ import annotations

import dataclasses
import enum
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence, Tuple

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SUM_TOL = 1e-9

BBox = Tuple[float, float, float, float]


class BayesRerankError(Exception):
    """Base class for all errors raised by this package."""


class InputContractError(BayesRerankError, ValueError):
    """Input data violates a documented contract."""


class EmptyPool(InputContractError):
    pass


class InvalidMass(InputContractError):
    pass


class OutOfRange(InputContractError):
    pass


class Modality(str, enum.Enum):
    TEXT = "text"
    IMAGE = "image"
    SCREENSHOT = "screenshot"

    @property
    def order(self) -> int:
        return _MODALITY_ORDER[self]


MODALITIES: Tuple[Modality, ...] = (Modality.TEXT, Modality.IMAGE, Modality.SCREENSHOT)
_MODALITY_ORDER = {m: i for i, m in enumerate(MODALITIES)}


def validate_bbox(bbox: Optional[Sequence[float]]) -> Optional[BBox]:
    if bbox is None:
        return None
    if len(bbox) != 4:
        raise InputContractError(f"bbox must have 4 coordinates, got {len(bbox)}")
    x0, y0, x1, y1 = (float(c) for c in bbox)
    if not all(math.isfinite(c) for c in (x0, y0, x1, y1)):
        raise InputContractError("bbox coordinates must be finite")
    if x0 > x1 or y0 > y1:
        raise InputContractError(f"bbox must satisfy x0<=x1 and y0<=y1, got {bbox}")
    return (x0, y0, x1, y1)


@dataclass(frozen=True)
class Candidate:
    """One retrieved chunk together with its similarity to the query."""

    chunk_id: str
    doc_id: str
    modality: Modality
    page: int
    bbox: Optional[BBox] = None
    raw_score: float = 0.0
    norm_score: float = 0.0

    def __post_init__(self) -> None:
        if self.page < 0:
            raise InputContractError(f"page must be non-negative, got {self.page}")
        object.__setattr__(self, "bbox", validate_bbox(self.bbox))
        if math.isnan(self.raw_score):
            raise InputContractError(f"raw_score is NaN for chunk {self.chunk_id!r}")


@dataclass(frozen=True)
class NormalizationStats:
    modality: Modality
    s_min: float
    s_max: float

    def __post_init__(self) -> None:
        if not self.s_min <= self.s_max:
            raise InputContractError(f"s_min must be <= s_max, got {self.s_min} > {self.s_max}")


@dataclass(frozen=True)
class MassFunction:
    """Belief masses over the binary frame {Y, N} plus the ignorance set."""

    m_y: float
    m_n: float
    m_omega: float

    def __post_init__(self) -> None:
        for name in ("m_y", "m_n", "m_omega"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0.0):
                raise InvalidMass(f"{name} must be a finite non-negative number, got {value}")
        total = self.m_y + self.m_n + self.m_omega
        if abs(total - 1.0) > SUM_TOL:
            raise InvalidMass(f"masses must sum to 1, got {total!r}")

    @classmethod
    def vacuous(cls) -> "MassFunction":
        return cls(0.0, 0.0, 1.0)

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.m_y, self.m_n, self.m_omega)


def _default_weights() -> dict:
    return {m: 1.0 / 3.0 for m in MODALITIES}


@dataclass(frozen=True)
class FusionConfig:
    """Every tunable of the fusion pipeline.

    Defaults reproduce the reference setting: alpha=0.7, beta=0.6, a conflict
    cutoff of 0.999, kappa=0.1, tau=2, epsilon=0.1. ``tau_page`` is not pinned
    by the method description; 2 admits the same page and its neighbours.
    """

    alpha: float = 0.7
    beta: float = 0.6
    conflict_threshold: float = 0.999
    kappa: float = 0.1
    tau: float = 2.0
    tau_page: int = 2
    epsilon: float = 0.1
    linear_weights: Mapping[Modality, float] = field(default_factory=_default_weights)
    prior_floor: float = 0.0
    likelihood_floor: float = 0.0
    default_prior: float = 1.0

    def __post_init__(self) -> None:
        weights = {Modality(k): float(v) for k, v in dict(self.linear_weights).items()}
        object.__setattr__(self, "linear_weights", weights)

        def check(cond: bool, msg: str) -> None:
            if not cond:
                raise InputContractError(msg)

        check(0.0 <= self.alpha <= 1.0, f"alpha must lie in [0,1], got {self.alpha}")
        check(0.0 <= self.beta <= 1.0, f"beta must lie in [0,1], got {self.beta}")
        check(0.0 < self.conflict_threshold <= 1.0,
              f"conflict_threshold must lie in (0,1], got {self.conflict_threshold}")
        check(self.kappa > 0.0, f"kappa must be positive, got {self.kappa}")
        check(self.tau > 0.0, f"tau must be positive, got {self.tau}")
        check(isinstance(self.tau_page, int) and not isinstance(self.tau_page, bool)
              and self.tau_page > 0, f"tau_page must be a positive integer, got {self.tau_page!r}")
        check(0.0 < self.epsilon < 1.0, f"epsilon must lie in (0,1), got {self.epsilon}")
        check(all(w >= 0.0 for w in weights.values()), "linear weights must be non-negative")
        check(abs(sum(weights.values()) - 1.0) <= SUM_TOL,
              f"linear weights must sum to 1, got {sum(weights.values())!r}")
        check(0.0 <= self.prior_floor <= 1.0, f"prior_floor must lie in [0,1], got {self.prior_floor}")
        check(0.0 <= self.likelihood_floor <= 1.0,
              f"likelihood_floor must lie in [0,1], got {self.likelihood_floor}")
        check(0.0 < self.default_prior <= 1.0,
              f"default_prior must lie in (0,1], got {self.default_prior}")

    def replace(self, **changes: Any) -> "FusionConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["linear_weights"] = {m.value: w for m, w in sorted(
            self.linear_weights.items(), key=lambda kv: kv[0].order)}
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "FusionConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise InputContractError(f"unknown config keys: {', '.join(unknown)}")
        kwargs = dict(data)
        if "tau_page" in kwargs and isinstance(kwargs["tau_page"], float) \
                and kwargs["tau_page"].is_integer():
            kwargs["tau_page"] = int(kwargs["tau_page"])
        return cls(**kwargs)


def load_config(path: str | Path) -> FusionConfig:
    """Read a JSON or TOML config file; missing keys keep their defaults."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        if path.suffix.lower() == ".json":
            data = json.loads(text)
        else:
            data = tomllib.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise InputContractError(f"{path}: cannot parse config: {exc}") from exc
    if not isinstance(data, dict):
        raise InputContractError(f"{path}: config must be a mapping")
    return FusionConfig.from_dict(data)


def normalize_score(raw: float, stats: NormalizationStats) -> float:
    """Min-max map ``raw`` into [0, 1]; a degenerate range maps to 0.5."""
    span = stats.s_max - stats.s_min
    if span == 0.0:
        return 0.5
    value = (raw - stats.s_min) / span
    return min(1.0, max(0.0, value))


def compute_stats(pool: Iterable[Candidate], modality: Modality) -> NormalizationStats:
    scores = [c.raw_score for c in pool if c.modality == modality]
    if not scores:
        raise EmptyPool(f"no {modality.value} candidates to normalize")
    return NormalizationStats(modality, min(scores), max(scores))


def normalize_pool(pool: Sequence[Candidate],
                   fixed: Optional[Mapping[Modality, NormalizationStats]] = None) -> list:
    """Return copies of ``pool`` with ``norm_score`` filled in.

    Stats are computed per modality over the given pool unless ``fixed``
    supplies corpus-level stats for that modality.
    """
    fixed = fixed or {}
    stats = {}
    for modality in MODALITIES:
        if modality in fixed:
            stats[modality] = fixed[modality]
        elif any(c.modality == modality for c in pool):
            stats[modality] = compute_stats(pool, modality)
    return [dataclasses.replace(c, norm_score=normalize_score(c.raw_score, stats[c.modality]))
            for c in pool]
