"""Query-independent consistency priors for evidence tuples.

Two alternatives are provided: a layout prior that rewards spatially and
page-wise adjacent elements, and a graph prior that rewards chunk triplets
connected in a knowledge graph. They are never combined.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from itertools import combinations
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

from .core import BBox, FusionConfig, InputContractError, validate_bbox


class NegativeWeight(InputContractError):
    pass


class MissingBBoxWarning(UserWarning):
    """Layout prior fell back to epsilon because a bounding box was unavailable."""


class PriorMode(str, enum.Enum):
    GRAPH = "graph"
    LAYOUT = "layout"
    NONE = "none"


@dataclass(frozen=True)
class LayoutRecord:
    chunk_id: str
    page: int
    bbox: Optional[BBox]
    page_width: float
    page_height: float
    doc_id: Optional[str] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "bbox", validate_bbox(self.bbox))
        if not (self.page_width > 0 and self.page_height > 0):
            raise InputContractError(
                f"page dimensions must be positive for chunk {self.chunk_id!r}")

    @property
    def diagonal(self) -> float:
        return math.hypot(self.page_width, self.page_height)

    @property
    def center(self) -> Tuple[float, float]:
        x0, y0, x1, y1 = self.bbox
        return ((x0 + x1) / 2.0, (y0 + y1) / 2.0)


_BELOW_ONE = math.nextafter(1.0, 0.0)


def _pair(u: str, v: str) -> Tuple[str, str]:
    return (u, v) if u <= v else (v, u)


class GraphEdgeStore:
    """Symmetric map from chunk pairs to aggregated relation weight."""

    def __init__(self, weights: Optional[Mapping[Tuple[str, str], float]] = None):
        self._weights: Dict[Tuple[str, str], float] = {}
        for (u, v), w in (weights or {}).items():
            key = _pair(u, v)
            self._weights[key] = self._weights.get(key, 0.0) + float(w)

    def lookup(self, u: str, v: str) -> float:
        return self._weights.get(_pair(u, v), 0.0)

    def __len__(self) -> int:
        return len(self._weights)

    def items(self):
        return sorted(self._weights.items())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GraphEdgeStore):
            return NotImplemented
        return self._weights == other._weights


def aggregate_relation_weights(
        relations: Iterable[Sequence]) -> GraphEdgeStore:
    """Sum relation weights per unordered chunk pair.

    Each relation is ``(u, v)`` or ``(u, v, weight)``; a missing or ``None``
    weight counts as 1.0.
    """
    # fsum is exact, so the total does not depend on relation order
    grouped: Dict[Tuple[str, str], list] = {}
    for rel in relations:
        u, v = rel[0], rel[1]
        w = rel[2] if len(rel) > 2 and rel[2] is not None else 1.0
        w = float(w)
        if not w >= 0.0:
            raise NegativeWeight(f"relation weight must be non-negative, got {w} for ({u}, {v})")
        grouped.setdefault(_pair(u, v), []).append(w)
    return GraphEdgeStore({key: math.fsum(ws) for key, ws in grouped.items()})


def edge_probability(s_uv: float, config: FusionConfig) -> float:
    if s_uv < 0:
        raise NegativeWeight(f"aggregated weight must be non-negative, got {s_uv}")
    # float64 rounds 1 - exp(-x) up to 1.0 once x > ~37; stay strictly below 1
    return min(-math.expm1(-config.kappa * s_uv), _BELOW_ONE)


def graph_prior(e1: str, e2: str, e3: str, store: GraphEdgeStore,
                config: FusionConfig) -> float:
    p12 = edge_probability(store.lookup(e1, e2), config)
    p23 = edge_probability(store.lookup(e2, e3), config)
    p13 = edge_probability(store.lookup(e1, e3), config)
    # fsum keeps the mean exactly permutation-symmetric
    return math.fsum((p12, p23, p13)) / 3.0


def _pages_adjacent(pages: Sequence[int], anchor: int, config: FusionConfig) -> bool:
    return max(abs(p - anchor) for p in pages) < config.tau_page


def _close(t: LayoutRecord, v: LayoutRecord, config: FusionConfig) -> bool:
    (tx, ty), (vx, vy) = t.center, v.center
    return math.hypot(tx - vx, ty - vy) < config.tau * t.diagonal


def layout_prior(t: Optional[LayoutRecord], v: Optional[LayoutRecord],
                 s: Optional[LayoutRecord], config: FusionConfig) -> float:
    """Return 1.0 when text and image are close and near the screenshot page, else epsilon.

    The distance test uses the text element's page diagonal. When one slot is
    absent only the conditions that can still be evaluated are checked: without
    a screenshot the text and image pages are compared directly, and without a
    text or image element the distance test is skipped.
    """
    if t is not None and v is not None:
        if t.bbox is None or v.bbox is None:
            missing = t.chunk_id if t.bbox is None else v.chunk_id
            warnings.warn(f"no bounding box for chunk {missing!r}; layout prior set to epsilon",
                          MissingBBoxWarning, stacklevel=2)
            return config.epsilon
        if not _close(t, v, config):
            return config.epsilon
    present = [r for r in (t, v) if r is not None]
    if s is not None:
        ok = _pages_adjacent([r.page for r in present], s.page, config) if present else True
    elif len(present) == 2:
        ok = abs(t.page - v.page) < config.tau_page
    else:
        ok = True
    return 1.0 if ok else config.epsilon


def partial_graph_prior(ids: Sequence[str], store: GraphEdgeStore,
                        config: FusionConfig) -> float:
    """Mean edge probability over every pair of the given chunk ids."""
    pairs = list(combinations(ids, 2))
    return math.fsum(edge_probability(store.lookup(u, v), config) for u, v in pairs) / len(pairs)


def _layout_record(c, layout: Mapping[str, LayoutRecord]) -> LayoutRecord:
    rec = layout.get(c.chunk_id)
    if rec is not None:
        return rec
    # screenshots only contribute their page; text and image fall into the MissingBBox path
    return LayoutRecord(c.chunk_id, c.page, None, 1.0, 1.0, c.doc_id)


def prior_of_tuple(slots: Sequence, mode: PriorMode, config: FusionConfig,
                   edges: Optional[GraphEdgeStore] = None,
                   layout: Optional[Mapping[str, LayoutRecord]] = None) -> float:
    """Consistency prior of a (text, image, screenshot) slot triple.

    Absent slots are ``None``. Uniform mode always yields 1.0; a tuple with
    fewer than two present slots gets ``config.default_prior``.
    """
    mode = PriorMode(mode)
    if mode is PriorMode.NONE:
        return 1.0
    present = [c for c in slots if c is not None]
    if len(present) < 2:
        return config.default_prior
    if mode is PriorMode.GRAPH:
        if edges is None:
            raise InputContractError("graph prior requires an edge store")
        if len(present) == 3:
            return graph_prior(*(c.chunk_id for c in present), edges, config)
        return partial_graph_prior([c.chunk_id for c in present], edges, config)
    if layout is None:
        raise InputContractError("layout prior requires layout records")
    t, v, s = (_layout_record(c, layout) if c is not None else None for c in slots)
    return layout_prior(t, v, s, config)
