"""Deterministic synthetic corpus with planted distractors.

For every query ``q{i}`` there are two documents:

* ``doc-g{i}`` holds the relevant evidence on page 3: a text chunk, a figure
  directly below it and the page screenshot, all linked in the knowledge
  graph, plus a weakly matching text chunk on page 10 with no links.
* ``doc-d{i}`` holds a distractor triple that matches the query better in
  every modality but has no graph links. For even ``i`` its elements are
  pages apart (the layout prior rejects it); for odd ``i`` they sit together
  on one page (the layout prior accepts it).

Two text-only documents are added so partial tuples occur. Query vectors are
basis directions, and every chunk vector is ``a * e_query + sqrt(1 - a^2) *
e_own`` with a private noise axis, so its cosine to its query is exactly the
planted score ``a`` and zero to every other query.

By construction the flat similarity baseline ranks a distractor first for
every query, the layout prior recovers the even queries only, and the graph
prior recovers all of them.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Dict, List, Optional

from .records import dumps

PAGE_W, PAGE_H = 612.0, 792.0
GT_PAGE = 3

GT_SCORES = {"t": 0.60, "v": 0.55, "s": 0.50}
DISTRACTOR_SCORES = {"t": 0.90, "v": 0.85, "s": 0.80}
WEAK_TEXT_SCORE = 0.30
ORPHAN_SCORE = 0.20

_MODALITY = {"t": "text", "v": "image", "s": "screenshot"}
_FULL_PAGE = [0.0, 0.0, PAGE_W, PAGE_H]


def _chunks(n_queries: int) -> List[dict]:
    chunks = []
    for i in range(n_queries):
        g, d = f"doc-g{i}", f"doc-d{i}"
        chunks += [
            dict(chunk_id=f"g{i}-t", doc_id=g, kind="t", page=GT_PAGE,
                 bbox=[60.0, 100.0, 550.0, 300.0], query=i, score=GT_SCORES["t"]),
            dict(chunk_id=f"g{i}-v", doc_id=g, kind="v", page=GT_PAGE,
                 bbox=[60.0, 320.0, 550.0, 620.0], query=i, score=GT_SCORES["v"]),
            dict(chunk_id=f"g{i}-s", doc_id=g, kind="s", page=GT_PAGE,
                 bbox=list(_FULL_PAGE), query=i, score=GT_SCORES["s"]),
            dict(chunk_id=f"g{i}-t2", doc_id=g, kind="t", page=10,
                 bbox=[60.0, 650.0, 550.0, 760.0], query=i, score=WEAK_TEXT_SCORE),
        ]
        if i % 2 == 0:
            pages = {"t": 1, "v": 8, "s": 4}
        else:
            pages = {"t": 2, "v": 2, "s": 2}
        boxes = {"t": [60.0, 80.0, 550.0, 200.0], "v": [60.0, 220.0, 550.0, 500.0],
                 "s": list(_FULL_PAGE)}
        for kind in ("t", "v", "s"):
            chunks.append(dict(chunk_id=f"d{i}-{kind}", doc_id=d, kind=kind, page=pages[kind],
                               bbox=boxes[kind], query=i, score=DISTRACTOR_SCORES[kind]))
    for j in range(2):
        chunks.append(dict(chunk_id=f"o{j}-t", doc_id=f"doc-o{j}", kind="t", page=0,
                           bbox=[60.0, 60.0, 550.0, 120.0], query=0, score=ORPHAN_SCORE))
    return chunks


def _vector(dim: int, query: int, own_axis: int, score: float) -> List[float]:
    vec = [0.0] * dim
    vec[query] = score
    vec[own_axis] = math.sqrt(1.0 - score * score)
    return vec


def make_corpus(n_queries: int = 10) -> Dict[str, List[dict]]:
    """Return record lists keyed by file name stem."""
    chunks = _chunks(n_queries)
    dim = n_queries + len(chunks)
    embeddings, layout = [], []
    for j, c in enumerate(chunks):
        embeddings.append({
            "chunk_id": c["chunk_id"], "doc_id": c["doc_id"], "modality": _MODALITY[c["kind"]],
            "page": c["page"], "bbox": c["bbox"],
            "vector": _vector(dim, c["query"], n_queries + j, c["score"]),
        })
        layout.append({
            "chunk_id": c["chunk_id"], "doc_id": c["doc_id"], "page": c["page"],
            "bbox": c["bbox"], "page_width": PAGE_W, "page_height": PAGE_H,
        })

    edges, queries, qrels = [], [], []
    for i in range(n_queries):
        t, v, s = f"g{i}-t", f"g{i}-v", f"g{i}-s"
        # text-image: two typed relations; image-screenshot: five default-weight ones
        edges.append({"u": t, "v": v, "weight": 4.0})
        edges.append({"u": v, "v": t, "weight": 6.0})
        edges.extend({"u": v, "v": s} for _ in range(5))
        edges.append({"u": s, "v": t, "weight": 5.0})
        basis = [0.0] * dim
        basis[i] = 1.0
        queries.append({"query_id": f"q{i}", "text": f"synthetic query {i}",
                        "vectors": {m: basis for m in ("text", "image", "screenshot")}})
        qrels.append({"query_id": f"q{i}", "doc_id": f"doc-g{i}", "page": GT_PAGE})

    return {"embeddings": embeddings, "kg_edges": edges, "layout": layout,
            "queries": queries, "qrels": qrels}


def write_corpus(directory: str | Path, n_queries: int = 10,
                 corpus: Optional[Dict[str, List[dict]]] = None) -> Dict[str, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    corpus = corpus or make_corpus(n_queries)
    paths = {}
    for name, records in corpus.items():
        path = directory / f"{name}.jsonl"
        with path.open("w", encoding="utf-8", newline="\n") as f:
            for rec in records:
                f.write(dumps(rec) + "\n")
        paths[name] = path
    return paths
