import pytest
from hypothesis import given, strategies as st

from bayes_rerank.core import Candidate, Modality
from bayes_rerank.evaluation import (
    GridMismatch,
    RecallReport,
    UnknownQuery,
    compare_runs,
    format_table,
    query_recall,
    recall_at_k,
    tuple_pages,
)
from bayes_rerank.ranker import EvidenceTuple


def page_list(*pages):
    return [("d", p) for p in pages]


def ten_query_fixture():
    """Relevant page found at rank 1, 2, 4, 5, 5, 5, 7, 12 and never for two queries."""
    qrels, ranked = {}, {}
    for i, hit_rank in enumerate([1, 2, 4, 5, 5, 5, 7, 12, None, None]):
        qrels[f"q{i}"] = {("rel", i)}
        items = [[("other", r)] for r in range(20)]
        if hit_rank is not None:
            items[hit_rank - 1] = [("rel", i)]
        ranked[f"q{i}"] = items
    return ranked, qrels


def test_tuple_pages_dedupes():
    t = Candidate("t", "A", Modality.TEXT, 3)
    s = Candidate("s", "A", Modality.SCREENSHOT, 3)
    v = Candidate("v", "A", Modality.IMAGE, 4)
    assert tuple_pages(EvidenceTuple(t, None, s, 1.0, 1.0, 1.0)) == {("A", 3)}
    assert tuple_pages(EvidenceTuple(t, v, s, 1.0, 1.0, 1.0)) == {("A", 3), ("A", 4)}


def test_hit_at_rank_seven():
    items = [[("d", p)] for p in range(10)]
    r = query_recall(items, {("d", 6)}, [5, 10])
    assert r == {5: 0.0, 10: 1.0}


def test_tuple_covering_relevant_page_counts():
    items = [[("d", 1), ("d", 9)]]
    assert query_recall(items, {("d", 9)}, [1]) == {1: 1.0}


def test_ten_query_fixture():
    ranked, qrels = ten_query_fixture()
    rep = recall_at_k(ranked, qrels, [1, 3, 5, 10, 20])
    assert rep.recall[5] == pytest.approx(0.6, abs=1e-12)
    assert rep.recall == pytest.approx({1: 0.1, 3: 0.2, 5: 0.6, 10: 0.7, 20: 0.8})


def test_set_method_fraction():
    items = [[("d", 1)], [("d", 2)], [("d", 3)]]
    r = query_recall(items, {("d", 1), ("d", 3)}, [1, 2, 3], method="set")
    assert r == {1: 0.5, 2: 0.5, 3: 1.0}


def test_missing_judged_query_is_miss():
    rep = recall_at_k({"a": [[("d", 1)]]}, {"a": {("d", 1)}, "b": {("d", 1)}}, [1])
    assert rep.recall[1] == 0.5


def test_unknown_query():
    with pytest.raises(UnknownQuery):
        recall_at_k({"x": []}, {"a": {("d", 1)}}, [1])


def test_bad_inputs():
    with pytest.raises(ValueError):
        recall_at_k({}, {"a": {("d", 1)}}, [0])
    with pytest.raises(ValueError):
        query_recall([], {("d", 1)}, [1], method="mrr")
    with pytest.raises(ValueError):
        query_recall([], set(), [1])


rankings = st.lists(st.lists(st.tuples(st.sampled_from("ab"), st.integers(0, 5)),
                             min_size=1, max_size=3), max_size=25)
relevants = st.sets(st.tuples(st.sampled_from("ab"), st.integers(0, 5)), min_size=1, max_size=4)


@given(rankings, relevants, st.sampled_from(["hit", "set"]))
def test_recall_monotone_and_bounded(items, relevant, method):
    ks = list(range(1, 30))
    r = query_recall(items, relevant, ks, method)
    values = [r[k] for k in ks]
    assert all(0.0 <= x <= 1.0 for x in values)
    assert all(a <= b for a, b in zip(values, values[1:]))


@given(rankings, relevants)
def test_hit_dominates_set(items, relevant):
    ks = [1, 5, 20]
    hit = query_recall(items, relevant, ks, "hit")
    frac = query_recall(items, relevant, ks, "set")
    assert all(frac[k] <= hit[k] for k in ks)


def test_compare_identical_is_zero():
    ranked, qrels = ten_query_fixture()
    rep = recall_at_k(ranked, qrels)
    assert compare_runs(rep, rep) == {k: 0.0 for k in rep.ks}


def test_compare_known_delta():
    ranked, qrels = ten_query_fixture()
    a = recall_at_k(ranked, qrels, [1, 5])
    better = dict(ranked)
    better["q8"] = [[("rel", 8)]]
    b = recall_at_k(better, qrels, [1, 5])
    assert compare_runs(a, b) == pytest.approx({1: 0.1, 5: 0.1})


def test_compare_grid_mismatch():
    ranked, qrels = ten_query_fixture()
    with pytest.raises(GridMismatch):
        compare_runs(recall_at_k(ranked, qrels, [1, 5]), recall_at_k(ranked, qrels, [1, 10]))
    with pytest.raises(GridMismatch):
        compare_runs(recall_at_k(ranked, qrels, [1], "hit"), recall_at_k(ranked, qrels, [1], "set"))


def test_report_and_table():
    ranked, qrels = ten_query_fixture()
    rep = recall_at_k(ranked, qrels)
    d = rep.to_dict()
    assert d["ks"] == [1, 3, 5, 10, 20] and d["recall"]["5"] == pytest.approx(0.6)
    table = format_table({"run": rep}, {k: 0.0 for k in rep.ks}).splitlines()
    assert len(table) == 3
    assert table[0].split()[1:] == ["R@1", "R@3", "R@5", "R@10", "R@20"]
    assert isinstance(rep, RecallReport)
