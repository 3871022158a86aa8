"""Recall@k against page-level relevance judgments."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Mapping, Sequence, Set, Tuple, Union

from .core import InputContractError

Page = Tuple[str, int]
Qrels = Dict[str, Set[Page]]

DEFAULT_KS = (1, 3, 5, 10, 20)


class UnknownQuery(InputContractError):
    pass


class GridMismatch(InputContractError):
    pass


def tuple_pages(t) -> FrozenSet[Page]:
    """Distinct (doc_id, page) pairs covered by the present slots of a tuple."""
    return frozenset((c.doc_id, c.page) for c in t.slots if c is not None)


def _pages(item) -> FrozenSet[Page]:
    if hasattr(item, "slots"):
        return tuple_pages(item)
    return frozenset((str(d), int(p)) for d, p in item)


def query_recall(ranked: Sequence, relevant: Set[Page], ks: Sequence[int],
                 method: str = "hit") -> Dict[int, float]:
    """Per-k score of one ranked list.

    ``hit``: 1.0 when any of the top-k items touches a relevant page.
    ``set``: fraction of relevant pages covered by the top-k items.
    """
    if not relevant:
        raise InputContractError("relevance set is empty")
    if method not in ("hit", "set"):
        raise ValueError(f"unknown recall method {method!r}")
    page_sets = [_pages(item) for item in ranked]
    out = {}
    for k in ks:
        covered = set().union(*page_sets[:k]) & relevant
        if method == "hit":
            out[k] = 1.0 if covered else 0.0
        else:
            out[k] = len(covered) / len(relevant)
    return out


@dataclass
class RecallReport:
    ks: Tuple[int, ...]
    recall: Dict[int, float]
    per_query: Dict[str, Dict[int, float]] = field(default_factory=dict)
    method: str = "hit"

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "ks": list(self.ks),
            "recall": {str(k): self.recall[k] for k in self.ks},
            "per_query": {q: {str(k): v[k] for k in self.ks} for q, v in sorted(self.per_query.items())},
        }


def _check_ks(ks: Iterable[int]) -> Tuple[int, ...]:
    ks = tuple(sorted(set(int(k) for k in ks)))
    if not ks or ks[0] < 1:
        raise InputContractError(f"cutoffs must be positive integers, got {ks}")
    return ks


def recall_at_k(ranked: Mapping[str, Sequence], qrels: Mapping[str, Set[Page]],
                ks: Sequence[int] = DEFAULT_KS, method: str = "hit") -> RecallReport:
    """Mean recall over every judged query.

    ``ranked`` maps query id to its ranked items (tuples or page collections).
    A judged query with no ranked output counts as a miss.
    """
    ks = _check_ks(ks)
    unknown = sorted(set(ranked) - set(qrels))
    if unknown:
        raise UnknownQuery(f"ranked queries without relevance judgments: {', '.join(unknown)}")
    if not qrels:
        raise InputContractError("no judged queries")
    per_query = {q: query_recall(ranked.get(q, ()), set(qrels[q]), ks, method)
                 for q in sorted(qrels)}
    n = len(per_query)
    recall = {k: sum(v[k] for v in per_query.values()) / n for k in ks}
    return RecallReport(ks, recall, per_query, method)


def compare_runs(run_a: RecallReport, run_b: RecallReport) -> Dict[int, float]:
    """Per-k difference ``b - a``."""
    if run_a.ks != run_b.ks:
        raise GridMismatch(f"cutoff grids differ: {list(run_a.ks)} vs {list(run_b.ks)}")
    if set(run_a.per_query) != set(run_b.per_query):
        raise GridMismatch("runs were evaluated on different query sets")
    if run_a.method != run_b.method:
        raise GridMismatch(f"recall methods differ: {run_a.method} vs {run_b.method}")
    return {k: run_b.recall[k] - run_a.recall[k] for k in run_a.ks}


def format_table(reports: Mapping[str, RecallReport],
                 deltas: Union[Mapping[int, float], None] = None) -> str:
    names = list(reports)
    ks = next(iter(reports.values())).ks
    width = max([len(n) for n in names] + [len("delta"), len("run")])
    lines = ["  ".join(["run".ljust(width)] + [f"R@{k}".rjust(7) for k in ks])]
    for name in names:
        rep = reports[name]
        lines.append("  ".join([name.ljust(width)] + [f"{100 * rep.recall[k]:7.1f}" for k in ks]))
    if deltas is not None:
        lines.append("  ".join(["delta".ljust(width)] + [f"{100 * deltas[k]:+7.1f}" for k in ks]))
    return "\n".join(lines)


def load_qrels_records(records: Iterable[Mapping]) -> Qrels:
    qrels: Qrels = {}
    for rec in records:
        qrels.setdefault(str(rec["query_id"]), set()).add((str(rec["doc_id"]), int(rec["page"])))
    return qrels

