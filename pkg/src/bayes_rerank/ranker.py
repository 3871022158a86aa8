"""Evidence-tuple enumeration and posterior ranking.

A tuple joins at most one text chunk, one image region and one page
screenshot from the same document. Its posterior is ``likelihood * prior``;
the evidence marginal is a ranking constant and is dropped.

Enumeration is grouped per document, so the cost is the sum over documents of
``|T_d| * |V_d| * |S_d|`` rather than the dense cross product. A document
that cannot form a full triple contributes one partial tuple made of its best
candidate in each modality it does have.
"""

from __future__ import annotations

import enum
import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .core import (
    MODALITIES,
    BayesRerankError,
    Candidate,
    FusionConfig,
    InputContractError,
    Modality,
)
from .fusion import likelihood_ds, likelihood_linear
from .priors import GraphEdgeStore, LayoutRecord, PriorMode, prior_of_tuple

Slots = Tuple[Optional[Candidate], Optional[Candidate], Optional[Candidate]]


class EmptyPools(InputContractError):
    pass


class MissingStore(BayesRerankError):
    """The selected prior needs a store that was not supplied."""


class FusionMethod(str, enum.Enum):
    DS = "ds"
    LINEAR = "linear"


def _pool_key(c: Candidate):
    return (-c.norm_score, c.chunk_id)


@dataclass(frozen=True)
class CandidatePool:
    text: Tuple[Candidate, ...] = ()
    image: Tuple[Candidate, ...] = ()
    screenshot: Tuple[Candidate, ...] = ()

    def __post_init__(self) -> None:
        for modality in MODALITIES:
            cands = getattr(self, modality.value)
            for c in cands:
                if c.modality != modality:
                    raise InputContractError(
                        f"chunk {c.chunk_id!r} ({c.modality.value}) placed in the {modality.value} pool")
            object.__setattr__(self, modality.value, tuple(sorted(cands, key=_pool_key)))

    @classmethod
    def from_candidates(cls, candidates: Iterable[Candidate]) -> "CandidatePool":
        by_mod: Dict[Modality, list] = {m: [] for m in MODALITIES}
        for c in candidates:
            by_mod[c.modality].append(c)
        return cls(*(by_mod[m] for m in MODALITIES))

    def of(self, modality: Modality) -> Tuple[Candidate, ...]:
        return getattr(self, Modality(modality).value)

    def all(self) -> List[Candidate]:
        return [*self.text, *self.image, *self.screenshot]

    def is_empty(self) -> bool:
        return not (self.text or self.image or self.screenshot)


@dataclass(frozen=True)
class EvidenceTuple:
    text: Optional[Candidate]
    image: Optional[Candidate]
    screenshot: Optional[Candidate]
    likelihood: float
    prior: float
    posterior: float
    conflict_trace: Tuple[float, ...] = field(default=(), compare=False)
    aborted: bool = field(default=False, compare=False)

    @property
    def slots(self) -> Slots:
        return (self.text, self.image, self.screenshot)

    @property
    def present(self) -> List[Candidate]:
        return [c for c in self.slots if c is not None]

    @property
    def doc_id(self) -> str:
        return self.present[0].doc_id

    def ids(self) -> Tuple[str, str, str]:
        return tuple(c.chunk_id if c is not None else "" for c in self.slots)


def rank_key(t: EvidenceTuple):
    """Posterior, then likelihood, both descending, then slot chunk ids ascending."""
    return (-t.posterior, -t.likelihood, *t.ids())


@dataclass(frozen=True)
class Scorer:
    """Scores slot triples under one fusion and prior variant."""

    config: FusionConfig = field(default_factory=FusionConfig)
    fusion: FusionMethod = FusionMethod.DS
    prior_mode: PriorMode = PriorMode.GRAPH
    edges: Optional[GraphEdgeStore] = None
    layout: Optional[Mapping[str, LayoutRecord]] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "fusion", FusionMethod(self.fusion))
        object.__setattr__(self, "prior_mode", PriorMode(self.prior_mode))
        if self.prior_mode is PriorMode.GRAPH and self.edges is None:
            raise MissingStore("the graph prior needs a knowledge-graph edge store")
        if self.prior_mode is PriorMode.LAYOUT and self.layout is None:
            raise MissingStore("the layout prior needs layout records")

    def likelihood(self, slots: Slots):
        scores = [(c.modality, c.norm_score) for c in slots if c is not None]
        if self.fusion is FusionMethod.DS:
            res = likelihood_ds(scores, self.config)
            return res.value, res.conflict_trace, res.aborted
        return likelihood_linear(scores, self.config), (), False

    def prior(self, slots: Slots) -> float:
        return prior_of_tuple(slots, self.prior_mode, self.config,
                              edges=self.edges, layout=self.layout)

    def score(self, slots: Slots) -> EvidenceTuple:
        value, trace, aborted = self.likelihood(slots)
        prior = self.prior(slots)
        return EvidenceTuple(*slots, likelihood=value, prior=prior, posterior=value * prior,
                             conflict_trace=trace, aborted=aborted)


def score_tuple(slots: Slots, scorer: Scorer) -> EvidenceTuple:
    return scorer.score(slots)


def _group_by_doc(pool: CandidatePool) -> Dict[str, Dict[Modality, List[Candidate]]]:
    groups: Dict[str, Dict[Modality, List[Candidate]]] = {}
    for modality in MODALITIES:
        for c in pool.of(modality):
            groups.setdefault(c.doc_id, {m: [] for m in MODALITIES})[modality].append(c)
    return {doc: groups[doc] for doc in sorted(groups)}


def _doc_tuples(group: Mapping[Modality, List[Candidate]]) -> List[Slots]:
    lists = [group[m] for m in MODALITIES]
    if all(lists):
        return list(itertools.product(*lists))
    # pool order puts the best candidate of each modality first
    return [tuple(lst[0] if lst else None for lst in lists)]


def enumerate_tuples(pool: CandidatePool) -> List[Slots]:
    if pool.is_empty():
        raise EmptyPools("all candidate pools are empty")
    return [slots for group in _group_by_doc(pool).values() for slots in _doc_tuples(group)]


def _score_doc(group, scorer: Scorer) -> List[EvidenceTuple]:
    cfg = scorer.config
    out = []
    for slots in _doc_tuples(group):
        prior = scorer.prior(slots)
        if prior < cfg.prior_floor:
            continue
        value, trace, aborted = scorer.likelihood(slots)
        if value < cfg.likelihood_floor:
            continue
        out.append(EvidenceTuple(*slots, likelihood=value, prior=prior,
                                 posterior=value * prior, conflict_trace=trace, aborted=aborted))
    return out


def rank_top_k(pool: CandidatePool, k: int, scorer: Scorer,
               workers: int = 1) -> List[EvidenceTuple]:
    """Score every same-document tuple, apply the pruning floors and return the best ``k``.

    With ``workers > 1`` documents are scored concurrently; the output is
    identical to the serial run.
    """
    if k < 1:
        raise InputContractError(f"k must be at least 1, got {k}")
    if pool.is_empty():
        raise EmptyPools("all candidate pools are empty")
    groups = list(_group_by_doc(pool).values())
    if workers > 1 and len(groups) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            per_doc = list(ex.map(lambda g: _score_doc(g, scorer), groups))
    else:
        per_doc = [_score_doc(g, scorer) for g in groups]
    scored = [t for doc in per_doc for t in doc]
    scored.sort(key=rank_key)
    return scored[:k]


def brute_force_rank(pool: CandidatePool, k: int, scorer: Scorer) -> List[EvidenceTuple]:
    """Reference ranking by dense enumeration; desk-scale inputs only.

    Every combination over (pool + absent) per slot is generated, then the
    same-document and partial-tuple rules are applied as plain filters.
    No pruning floors.
    """
    options = [list(pool.of(m)) + [None] for m in MODALITIES]
    combos = []
    for slots in itertools.product(*options):
        present = [c for c in slots if c is not None]
        if not present:
            continue
        if len({c.doc_id for c in present}) != 1:
            continue
        combos.append(slots)

    full_docs = {slots[0].doc_id for slots in combos if all(c is not None for c in slots)}

    def best(doc: str, modality: Modality) -> Optional[Candidate]:
        cands = [c for c in pool.of(modality) if c.doc_id == doc]
        return min(cands, key=_pool_key) if cands else None

    kept = []
    for slots in combos:
        present = [c for c in slots if c is not None]
        doc = present[0].doc_id
        if len(present) == 3:
            kept.append(slots)
        elif doc not in full_docs:
            if all(slots[i] is best(doc, m) for i, m in enumerate(MODALITIES)):
                kept.append(slots)

    scored = [scorer.score(slots) for slots in kept]
    scored.sort(key=rank_key)
    return scored[:k]


def baseline_key(c: Candidate):
    return (-c.norm_score, c.modality.order, c.chunk_id)


def rank_baseline_raw(pool: CandidatePool, k: int) -> List[Candidate]:
    """Flat merge of every candidate by normalized score, no fusion."""
    if pool.is_empty():
        raise EmptyPools("all candidate pools are empty")
    return sorted(pool.all(), key=baseline_key)[:k]


def as_tuple(c: Candidate) -> EvidenceTuple:
    """Wrap a single candidate so baseline runs share the tuple evaluation path."""
    slots: List[Optional[Candidate]] = [None, None, None]
    slots[c.modality.order] = c
    return EvidenceTuple(*slots, likelihood=c.norm_score, prior=1.0, posterior=c.norm_score)
