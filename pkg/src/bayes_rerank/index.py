"""Exact per-modality cosine search and embedding providers."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

import httpx
import numpy as np

from .core import BBox, BayesRerankError, Candidate, InputContractError, Modality, validate_bbox

log = logging.getLogger(__name__)

ENDPOINT_ENV = "BAYES_RERANK_EMBED_URL"
TOKEN_ENV = "BAYES_RERANK_EMBED_TOKEN"


class DimensionMismatch(InputContractError):
    pass


class DuplicateChunk(InputContractError):
    pass


class ZeroVector(InputContractError):
    pass


class EmptyIndex(InputContractError):
    pass


class UnknownInput(InputContractError):
    pass


class TransportError(BayesRerankError):
    pass


class MalformedResponse(TransportError):
    pass


@dataclass(frozen=True)
class EmbeddingRecord:
    chunk_id: str
    doc_id: str
    modality: Modality
    page: int
    vector: tuple
    bbox: Optional[BBox] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "modality", Modality(self.modality))
        object.__setattr__(self, "vector", tuple(float(x) for x in self.vector))
        object.__setattr__(self, "bbox", validate_bbox(self.bbox))
        if self.page < 0:
            raise InputContractError(f"page must be non-negative for chunk {self.chunk_id!r}")
        if not self.vector:
            raise DimensionMismatch(f"empty vector for chunk {self.chunk_id!r}")
        if not np.all(np.isfinite(self.vector)):
            raise InputContractError(f"non-finite vector entry for chunk {self.chunk_id!r}")
        if not np.any(self.vector):
            raise ZeroVector(f"zero vector for chunk {self.chunk_id!r}")


@dataclass(frozen=True)
class ModalityIndex:
    modality: Modality
    dimensionality: int
    records: tuple
    _matrix: np.ndarray = field(repr=False, compare=False)
    _norms: np.ndarray = field(repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.records)


def build_index(records: Sequence[EmbeddingRecord],
                modality: Optional[Modality] = None) -> ModalityIndex:
    """Validate ``records`` and assemble an index preserving their order."""
    records = tuple(records)
    if not records:
        if modality is None:
            raise EmptyIndex("cannot infer the modality of an empty index")
        return ModalityIndex(Modality(modality), 0, (), np.zeros((0, 0)), np.zeros(0))
    modality = Modality(modality or records[0].modality)
    dim = len(records[0].vector)
    seen = set()
    for rec in records:
        if rec.modality != modality:
            raise InputContractError(
                f"chunk {rec.chunk_id!r} is {rec.modality.value}, index is {modality.value}")
        if len(rec.vector) != dim:
            raise DimensionMismatch(
                f"chunk {rec.chunk_id!r} has dimension {len(rec.vector)}, expected {dim}")
        if rec.chunk_id in seen:
            raise DuplicateChunk(f"duplicate chunk_id {rec.chunk_id!r}")
        seen.add(rec.chunk_id)
    matrix = np.array([rec.vector for rec in records], dtype=np.float64)
    return ModalityIndex(modality, dim, records, matrix, np.linalg.norm(matrix, axis=1))


def cosine_scores(index: ModalityIndex, query_vector: Sequence[float]) -> np.ndarray:
    q = np.asarray(query_vector, dtype=np.float64)
    if q.ndim != 1 or q.shape[0] != index.dimensionality:
        raise DimensionMismatch(
            f"query has dimension {q.shape[-1] if q.ndim else 0}, "
            f"{index.modality.value} index expects {index.dimensionality}")
    q_norm = np.linalg.norm(q)
    if q_norm == 0.0:
        raise ZeroVector("query vector is zero")
    return (index._matrix @ q) / (index._norms * q_norm)


def search_top_k(index: ModalityIndex, query_vector: Sequence[float], k: int) -> List[Candidate]:
    """Return at most ``k`` candidates by descending cosine similarity.

    Ties keep ingestion order.
    """
    if k < 1:
        raise InputContractError(f"k must be positive, got {k}")
    if len(index) == 0:
        raise EmptyIndex(f"{index.modality.value} index is empty")
    scores = cosine_scores(index, query_vector)
    order = np.argsort(-scores, kind="stable")[:k]
    out = []
    for i in order:
        rec = index.records[i]
        out.append(Candidate(chunk_id=rec.chunk_id, doc_id=rec.doc_id, modality=rec.modality,
                             page=rec.page, bbox=rec.bbox, raw_score=float(scores[i])))
    return out


@dataclass(frozen=True)
class ProviderConfig:
    """Where query vectors come from.

    ``kind`` is ``"offline"`` (``vectors`` maps an input id to its vector) or
    ``"remote"`` (POST to ``endpoint``). The endpoint and token default to the
    ``BAYES_RERANK_EMBED_URL`` and ``BAYES_RERANK_EMBED_TOKEN`` environment
    variables.
    """

    kind: str = "offline"
    vectors: Mapping[str, Sequence[float]] = field(default_factory=dict)
    endpoint: Optional[str] = None
    token: Optional[str] = None
    timeout: float = 30.0
    transport: Optional[httpx.BaseTransport] = field(default=None, compare=False)

    @classmethod
    def remote_from_env(cls, modality: Optional[Modality] = None, **kwargs) -> "ProviderConfig":
        endpoint = None
        if modality is not None:
            endpoint = os.environ.get(f"{ENDPOINT_ENV}_{Modality(modality).value.upper()}")
        endpoint = endpoint or os.environ.get(ENDPOINT_ENV)
        return cls(kind="remote", endpoint=endpoint, token=os.environ.get(TOKEN_ENV), **kwargs)


def _embed_remote(inputs: List[str], provider: ProviderConfig) -> List[List[float]]:
    if not provider.endpoint:
        raise TransportError(f"no embedding endpoint configured (set {ENDPOINT_ENV})")
    headers = {"Authorization": f"Bearer {provider.token}"} if provider.token else {}
    last_exc: Optional[Exception] = None
    response = None
    with httpx.Client(timeout=provider.timeout, transport=provider.transport) as client:
        for attempt in range(2):
            try:
                response = client.post(provider.endpoint, json={"inputs": inputs}, headers=headers)
                response.raise_for_status()
                break
            except httpx.HTTPError as exc:
                log.warning("embedding request failed (attempt %d): %s", attempt + 1, exc)
                last_exc = exc
                response = None
    if response is None:
        raise TransportError(f"embedding request to {provider.endpoint} failed: {last_exc}")
    try:
        body = response.json()
        vectors = body["vectors"]
    except (ValueError, KeyError, TypeError) as exc:
        raise MalformedResponse(f"response lacks a 'vectors' array: {exc}") from exc
    if not isinstance(vectors, list) or len(vectors) != len(inputs):
        got = len(vectors) if isinstance(vectors, list) else type(vectors).__name__
        raise MalformedResponse(f"expected {len(inputs)} vectors, got {got}")
    out = []
    for vec in vectors:
        if not isinstance(vec, list) or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool) for x in vec):
            raise MalformedResponse("every vector must be an array of numbers")
        out.append([float(x) for x in vec])
    return out


def embed(inputs: Sequence[str], provider: ProviderConfig,
          dimensionality: Optional[int] = None) -> List[List[float]]:
    inputs = list(inputs)
    if provider.kind == "offline":
        try:
            vectors = [list(map(float, provider.vectors[i])) for i in inputs]
        except KeyError as exc:
            raise UnknownInput(f"no offline vector for input {exc.args[0]!r}") from None
    elif provider.kind == "remote":
        vectors = _embed_remote(inputs, provider)
    else:
        raise InputContractError(f"unknown provider kind {provider.kind!r}")
    if dimensionality is not None:
        for inp, vec in zip(inputs, vectors):
            if len(vec) != dimensionality:
                raise DimensionMismatch(
                    f"vector for {inp!r} has dimension {len(vec)}, expected {dimensionality}")
    return vectors


def build_indexes(records: Sequence[EmbeddingRecord]) -> Dict[Modality, ModalityIndex]:
    by_mod: Dict[Modality, list] = {}
    for rec in records:
        by_mod.setdefault(rec.modality, []).append(rec)
    return {m: build_index(recs, m) for m, recs in by_mod.items()}

