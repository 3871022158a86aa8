"""Line-delimited JSON record files: parsing, validation and writing.

Every input file holds one JSON object per line; blank lines are skipped.
Validation errors name the file and the 1-based line number.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Any, Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Tuple

from .core import MODALITIES, InputContractError, Modality
from .evaluation import Qrels, load_qrels_records
from .index import EmbeddingRecord, ModalityIndex, build_index
from .priors import GraphEdgeStore, LayoutRecord, aggregate_relation_weights

INDEX_FORMAT = "bayes-rerank-index/1"


class RecordError(InputContractError):
    def __init__(self, path, line: Optional[int], message: str):
        self.path = str(path)
        self.line = line
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {message}")


class EmptyInput(RecordError):
    def __init__(self, path):
        super().__init__(path, None, "file contains no records")


def dumps(record: Mapping[str, Any]) -> str:
    return json.dumps(record, sort_keys=True, ensure_ascii=False, allow_nan=False)


def write_jsonl(out: IO[str], records: Iterable[Mapping[str, Any]]) -> None:
    for rec in records:
        out.write(dumps(rec) + "\n")


def iter_jsonl(path: str | Path) -> Iterator[Tuple[int, dict]]:
    with Path(path).open("r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise RecordError(path, lineno, f"malformed JSON: {exc.msg}") from None
            if not isinstance(obj, dict):
                raise RecordError(path, lineno, "expected a JSON object")
            yield lineno, obj


def read_records(path: str | Path, parse: Callable[[dict], Any],
                 allow_empty: bool = False) -> List[Any]:
    out = []
    for lineno, obj in iter_jsonl(path):
        try:
            out.append(parse(obj))
        except KeyError as exc:
            raise RecordError(path, lineno, f"missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            raise RecordError(path, lineno, str(exc)) from None
    if not out and not allow_empty:
        raise EmptyInput(path)
    return out


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as f:
        for block in iter(lambda: f.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _str(obj: dict, key: str) -> str:
    value = obj[key]
    if not isinstance(value, (str, int)) or isinstance(value, bool):
        raise TypeError(f"field {key!r} must be a string")
    return str(value)


def _int(obj: dict, key: str) -> int:
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise TypeError(f"field {key!r} must be an integer")
    return value


def _number(value: Any, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise TypeError(f"{what} must be a number")
    return float(value)


def _bbox(obj: dict):
    bbox = obj.get("bbox")
    if bbox is None:
        return None
    if not isinstance(bbox, list):
        raise TypeError("field 'bbox' must be an array [x0, y0, x1, y1]")
    return [_number(x, "bbox coordinate") for x in bbox]


def parse_embedding(obj: dict) -> EmbeddingRecord:
    vector = obj["vector"]
    if not isinstance(vector, list):
        raise TypeError("field 'vector' must be an array of numbers")
    return EmbeddingRecord(
        chunk_id=_str(obj, "chunk_id"),
        doc_id=_str(obj, "doc_id"),
        modality=Modality(obj["modality"]),
        page=_int(obj, "page"),
        vector=tuple(_number(x, "vector entry") for x in vector),
        bbox=_bbox(obj),
    )


def parse_edge(obj: dict) -> Tuple[str, str, float]:
    weight = obj.get("weight")
    weight = 1.0 if weight is None else _number(weight, "field 'weight'")
    return (_str(obj, "u"), _str(obj, "v"), weight)


def parse_layout(obj: dict) -> LayoutRecord:
    return LayoutRecord(
        chunk_id=_str(obj, "chunk_id"),
        page=_int(obj, "page"),
        bbox=_bbox(obj),
        page_width=_number(obj["page_width"], "field 'page_width'"),
        page_height=_number(obj["page_height"], "field 'page_height'"),
        doc_id=_str(obj, "doc_id") if "doc_id" in obj else None,
    )


def parse_qrel(obj: dict) -> dict:
    return {"query_id": _str(obj, "query_id"), "doc_id": _str(obj, "doc_id"),
            "page": _int(obj, "page")}


@dataclass(frozen=True)
class QuerySpec:
    """One query: id, optional text, per-modality vectors and optional reranker scores."""

    query_id: str
    text: Optional[str] = None
    vectors: Mapping[Modality, Tuple[float, ...]] = field(default_factory=dict)
    reranked_scores: Optional[Mapping[str, float]] = None


def parse_query(obj: dict) -> QuerySpec:
    vectors = obj.get("vectors") or {}
    if not isinstance(vectors, dict):
        raise TypeError("field 'vectors' must map modality names to arrays")
    parsed = {}
    for name, vec in vectors.items():
        if not isinstance(vec, list):
            raise TypeError(f"vector for {name!r} must be an array of numbers")
        parsed[Modality(name)] = tuple(_number(x, "vector entry") for x in vec)
    reranked = obj.get("reranked_scores")
    if reranked is not None:
        if not isinstance(reranked, dict):
            raise TypeError("field 'reranked_scores' must map chunk ids to numbers")
        reranked = {str(k): _number(v, "reranked score") for k, v in reranked.items()}
    text = obj.get("text")
    if text is not None and not isinstance(text, str):
        raise TypeError("field 'text' must be a string")
    return QuerySpec(_str(obj, "query_id"), text, parsed, reranked)


def load_embeddings(path) -> List[EmbeddingRecord]:
    return read_records(path, parse_embedding)


def load_edges(path) -> GraphEdgeStore:
    return aggregate_relation_weights(read_records(path, parse_edge, allow_empty=True))


def load_layout(path) -> Dict[str, LayoutRecord]:
    out: Dict[str, LayoutRecord] = {}
    for lineno, obj in iter_jsonl(path):
        try:
            rec = parse_layout(obj)
        except KeyError as exc:
            raise RecordError(path, lineno, f"missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            raise RecordError(path, lineno, str(exc)) from None
        if rec.chunk_id in out:
            raise RecordError(path, lineno, f"duplicate chunk_id {rec.chunk_id!r}")
        out[rec.chunk_id] = rec
    return out


def load_qrels(path) -> Qrels:
    return load_qrels_records(read_records(path, parse_qrel))


def load_queries(path) -> List[QuerySpec]:
    queries = read_records(path, parse_query)
    seen = set()
    for q in queries:
        if q.query_id in seen:
            raise RecordError(path, None, f"duplicate query_id {q.query_id!r}")
        seen.add(q.query_id)
    return queries


def save_index(indexes: Mapping[Modality, ModalityIndex], path: str | Path) -> None:
    data = {"format": INDEX_FORMAT, "modalities": {}}
    for modality in MODALITIES:
        if modality not in indexes:
            continue
        idx = indexes[modality]
        data["modalities"][modality.value] = {
            "dimensionality": idx.dimensionality,
            "records": [
                {"chunk_id": r.chunk_id, "doc_id": r.doc_id, "page": r.page,
                 "bbox": list(r.bbox) if r.bbox is not None else None, "vector": list(r.vector)}
                for r in idx.records
            ],
        }
    Path(path).write_text(json.dumps(data, sort_keys=True) + "\n", encoding="utf-8")


def load_index(path: str | Path) -> Dict[Modality, ModalityIndex]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise RecordError(path, exc.lineno, f"malformed index file: {exc.msg}") from None
    if not isinstance(data, dict) or data.get("format") != INDEX_FORMAT:
        raise RecordError(path, None, f"not an index file (expected format {INDEX_FORMAT})")
    out = {}
    try:
        for name, body in data["modalities"].items():
            modality = Modality(name)
            recs = [EmbeddingRecord(modality=modality, **r) for r in body["records"]]
            idx = build_index(recs, modality)
            if recs and idx.dimensionality != body["dimensionality"]:
                raise InputContractError("stored dimensionality does not match vectors")
            out[modality] = idx
    except (KeyError, TypeError, ValueError) as exc:
        raise RecordError(path, None, f"corrupt index: {exc}") from None
    return out


def read_run(path: str | Path) -> Tuple[dict, Dict[str, List[List[Tuple[str, int]]]]]:
    """Return the manifest and, per query, the page lists of its ranked items in rank order."""
    manifest = None
    ranked: Dict[str, list] = {}
    for lineno, obj in iter_jsonl(path):
        if "manifest" in obj:
            if manifest is not None:
                raise RecordError(path, lineno, "second manifest header")
            manifest = obj["manifest"]
            continue
        try:
            qid = _str(obj, "query_id")
            rank = _int(obj, "rank")
            pages = [(str(d), int(p)) for d, p in obj["pages"]]
        except KeyError as exc:
            raise RecordError(path, lineno, f"missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            raise RecordError(path, lineno, str(exc)) from None
        ranked.setdefault(qid, []).append((rank, pages))
    if manifest is None:
        raise RecordError(path, None, "run file lacks a manifest header")
    return manifest, {q: [p for _, p in sorted(items, key=lambda it: it[0])]
                      for q, items in ranked.items()}

