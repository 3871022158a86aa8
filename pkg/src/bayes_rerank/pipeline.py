"""Glue between the index, the ranker and the run-file format."""

from __future__ import annotations

import dataclasses
import logging
from typing import Dict, List, Mapping, Optional

from .core import MODALITIES, Candidate, InputContractError, Modality, NormalizationStats, normalize_pool
from .index import ModalityIndex, ProviderConfig, embed, search_top_k
from .ranker import (
    CandidatePool,
    EvidenceTuple,
    Scorer,
    as_tuple,
    brute_force_rank,
    rank_baseline_raw,
    rank_top_k,
)
from .records import QuerySpec

log = logging.getLogger(__name__)

DEFAULT_POOL_SIZES = {Modality.TEXT: 1024, Modality.IMAGE: 512, Modality.SCREENSHOT: 512}


def query_vector(query: QuerySpec, modality: Modality, index: ModalityIndex,
                 provider: Optional[ProviderConfig]):
    if modality in query.vectors:
        return query.vectors[modality]
    if provider is None:
        return None
    if provider.kind == "offline":
        return embed([query.query_id], provider, index.dimensionality)[0]
    if not query.text:
        return None
    return embed([query.text], provider, index.dimensionality)[0]


def retrieve_pool(indexes: Mapping[Modality, ModalityIndex], query: QuerySpec,
                  pool_sizes: Mapping[Modality, int] = DEFAULT_POOL_SIZES,
                  providers: Optional[Mapping[Modality, ProviderConfig]] = None,
                  fixed_stats: Optional[Mapping[Modality, NormalizationStats]] = None,
                  ) -> CandidatePool:
    """Search every modality index and min-max normalize the per-query pools.

    When the query carries reranker scores they replace the text cosine
    scores, and text candidates the reranker did not score are dropped.
    """
    providers = providers or {}
    candidates: List[Candidate] = []
    for modality in MODALITIES:
        index = indexes.get(modality)
        if index is None or len(index) == 0:
            continue
        vec = query_vector(query, modality, index, providers.get(modality))
        if vec is None:
            log.warning("query %s has no %s vector; modality skipped", query.query_id, modality.value)
            continue
        hits = search_top_k(index, vec, pool_sizes[modality])
        if modality is Modality.TEXT and query.reranked_scores is not None:
            hits = [dataclasses.replace(c, raw_score=query.reranked_scores[c.chunk_id])
                    for c in hits if c.chunk_id in query.reranked_scores]
        candidates.extend(hits)
    if not candidates:
        raise InputContractError(f"query {query.query_id!r} retrieved no candidates")
    by_mod: Dict[Modality, list] = {}
    for modality in MODALITIES:
        group = [c for c in candidates if c.modality is modality]
        if group:
            by_mod[modality] = normalize_pool(group, fixed_stats)
    return CandidatePool(*(by_mod.get(m, ()) for m in MODALITIES))


def rank_pool(pool: CandidatePool, top_k: int, scorer: Optional[Scorer],
              oracle: bool = False, workers: int = 1) -> List[EvidenceTuple]:
    """Rank with the fused posterior, or the flat raw baseline when ``scorer`` is None."""
    if scorer is None:
        return [as_tuple(c) for c in rank_baseline_raw(pool, top_k)]
    if oracle:
        return brute_force_rank(pool, top_k, scorer)
    return rank_top_k(pool, top_k, scorer, workers=workers)


def tuple_record(query_id: str, rank: int, t: EvidenceTuple) -> dict:
    pages = sorted({(c.doc_id, c.page) for c in t.present})
    return {
        "query_id": query_id,
        "rank": rank,
        "doc_id": t.doc_id,
        "text": t.text.chunk_id if t.text else None,
        "image": t.image.chunk_id if t.image else None,
        "screenshot": t.screenshot.chunk_id if t.screenshot else None,
        "pages": [[d, p] for d, p in pages],
        "scores": {c.modality.value: c.norm_score for c in t.present},
        "raw_scores": {c.modality.value: c.raw_score for c in t.present},
        "likelihood": t.likelihood,
        "prior": t.prior,
        "posterior": t.posterior,
        "aborted": t.aborted,
    }


def run_queries(indexes: Mapping[Modality, ModalityIndex], queries: List[QuerySpec],
                top_k: int, scorer: Optional[Scorer],
                pool_sizes: Mapping[Modality, int] = DEFAULT_POOL_SIZES,
                providers: Optional[Mapping[Modality, ProviderConfig]] = None,
                oracle: bool = False, workers: int = 1) -> Dict[str, List[EvidenceTuple]]:
    out = {}
    for q in queries:
        pool = retrieve_pool(indexes, q, pool_sizes, providers)
        out[q.query_id] = rank_pool(pool, top_k, scorer, oracle=oracle, workers=workers)
    return out
