import dataclasses
import itertools

import numpy as np
import pytest

from bayes_rerank.core import Candidate, FusionConfig, Modality
from bayes_rerank.priors import GraphEdgeStore, PriorMode, aggregate_relation_weights
from bayes_rerank.ranker import (
    CandidatePool,
    EmptyPools,
    EvidenceTuple,
    FusionMethod,
    MissingStore,
    Scorer,
    as_tuple,
    brute_force_rank,
    enumerate_tuples,
    rank_baseline_raw,
    rank_top_k,
    score_tuple,
)

from oracles import count_tuples
from pools import layout_for, random_edges, random_pool

T, I, S = Modality.TEXT, Modality.IMAGE, Modality.SCREENSHOT
CFG = FusionConfig()
UNIFORM = Scorer(CFG, prior_mode=PriorMode.NONE)


def c(cid, modality, doc, score, page=0):
    return Candidate(cid, doc, modality, page, raw_score=score, norm_score=score)


class FixedPrior(Scorer):
    def prior(self, slots):
        return 0.5


def test_enumerate_toy_pool_matches_count_oracle():
    pool = CandidatePool.from_candidates([
        c("a-t1", T, "A", 0.9), c("a-t2", T, "A", 0.5), c("a-v", I, "A", 0.7),
        c("a-s", S, "A", 0.6), c("b-t", T, "B", 0.8)])
    tuples = enumerate_tuples(pool)
    assert len(tuples) == count_tuples({"A": (2, 1, 1), "B": (1, 0, 0)}) == 3
    partial = [t for t in tuples if None in t]
    assert [tuple(x.chunk_id if x else None for x in t) for t in partial] == [("b-t", None, None)]


def test_enumerate_single_candidate():
    assert enumerate_tuples(CandidatePool.from_candidates([c("x", I, "A", 0.3)])) == \
        [(None, CandidatePool.from_candidates([c("x", I, "A", 0.3)]).image[0], None)]


def test_enumerate_disjoint_docs_only_partials():
    pool = CandidatePool.from_candidates([c("t", T, "A", 0.5), c("v", I, "B", 0.5), c("s", S, "C", 0.5)])
    tuples = enumerate_tuples(pool)
    assert len(tuples) == 3
    assert all(sum(x is not None for x in t) == 1 for t in tuples)


def test_partial_tuple_takes_best_per_modality():
    pool = CandidatePool.from_candidates([
        c("t1", T, "A", 0.2), c("t2", T, "A", 0.9), c("v1", I, "A", 0.4), c("v2", I, "A", 0.4)])
    (t, v, s), = enumerate_tuples(pool)
    assert (t.chunk_id, v.chunk_id, s) == ("t2", "v1", None)


def test_enumerate_empty():
    with pytest.raises(EmptyPools):
        enumerate_tuples(CandidatePool())


def test_enumerate_count_random_pools():
    rng = np.random.default_rng(11)
    for _ in range(50):
        pool = random_pool(rng)
        docs = {}
        for m_i, m in enumerate((T, I, S)):
            for x in pool.of(m):
                docs.setdefault(x.doc_id, [0, 0, 0])[m_i] += 1
        assert len(enumerate_tuples(pool)) == count_tuples({d: tuple(v) for d, v in docs.items()})


def test_score_tuple_examples():
    t, v = c("t", T, "A", 1.0), c("v", I, "A", 1.0)
    out = score_tuple((t, v, None), FixedPrior(CFG, prior_mode=PriorMode.NONE))
    assert out.likelihood == pytest.approx(0.955, abs=1e-12)
    assert out.posterior == pytest.approx(0.4775, abs=1e-12)

    conflict_cfg = FusionConfig(alpha=1.0, beta=1.0)
    bad = score_tuple((c("t", T, "A", 1.0), c("v", I, "A", 0.0), None),
                      FixedPrior(conflict_cfg, prior_mode=PriorMode.NONE))
    assert bad.aborted and bad.posterior == 0.0

    plain = score_tuple((t, v, None), UNIFORM)
    assert plain.prior == 1.0 and plain.posterior == plain.likelihood


def test_posterior_is_product():
    rng = np.random.default_rng(5)
    pool = random_pool(rng)
    scorer = Scorer(CFG, edges=random_edges(rng, pool))
    for t in rank_top_k(pool, 1000, scorer):
        assert abs(t.posterior - t.likelihood * t.prior) <= 1e-12


def test_rank_orders_by_posterior():
    pool = CandidatePool.from_candidates([
        c("a-t", T, "A", 1.0), c("a-v", I, "A", 1.0),
        c("b-t", T, "B", 1.0), c("b-v", I, "B", 0.0)])
    cfg = FusionConfig(alpha=1.0, beta=1.0)
    ranked = rank_top_k(pool, 10, FixedPrior(cfg, prior_mode=PriorMode.NONE))
    assert [t.doc_id for t in ranked] == ["A", "B"]
    assert ranked[1].posterior == 0.0


def test_k_larger_than_tuple_count():
    pool = random_pool(np.random.default_rng(1))
    assert len(rank_top_k(pool, 10_000, UNIFORM)) == len(enumerate_tuples(pool))


def test_k_must_be_positive():
    with pytest.raises(ValueError):
        rank_top_k(random_pool(np.random.default_rng(1)), 0, UNIFORM)


def test_tie_break_is_total():
    pool = CandidatePool.from_candidates([
        c("t1", T, "A", 0.5), c("t2", T, "A", 0.5), c("v1", I, "A", 0.5), c("v2", I, "A", 0.5),
        c("s1", S, "A", 0.5)])
    ranked = rank_top_k(pool, 10, UNIFORM)
    assert [t.ids() for t in ranked] == [("t1", "v1", "s1"), ("t1", "v2", "s1"),
                                         ("t2", "v1", "s1"), ("t2", "v2", "s1")]


@pytest.mark.parametrize("mode", list(PriorMode))
@pytest.mark.parametrize("fusion", list(FusionMethod))
def test_matches_brute_force(mode, fusion):
    rng = np.random.default_rng(hash((mode.value, fusion.value)) % 2**32)
    for _ in range(15):
        pool = random_pool(rng, max_per_modality=6)
        scorer = Scorer(CFG, fusion, mode, edges=random_edges(rng, pool), layout=layout_for(pool))
        k = int(rng.integers(1, 40))
        assert rank_top_k(pool, k, scorer) == brute_force_rank(pool, k, scorer)


def test_brute_force_edge_cases():
    assert brute_force_rank(CandidatePool(), 5, UNIFORM) == []
    one = CandidatePool.from_candidates([c("x", S, "A", 0.4)])
    assert len(brute_force_rank(one, 5, UNIFORM)) == 1


def test_pruning_safe_below_topk_minima():
    rng = np.random.default_rng(21)
    for _ in range(30):
        pool = random_pool(rng)
        scorer = Scorer(CFG, edges=random_edges(rng, pool))
        k = int(rng.integers(1, 15))
        full = rank_top_k(pool, k, scorer)
        floors = dict(prior_floor=min(t.prior for t in full),
                      likelihood_floor=min(t.likelihood for t in full))
        pruned_scorer = dataclasses.replace(scorer, config=CFG.replace(**floors))
        assert rank_top_k(pool, k, pruned_scorer) == full


def test_pruning_drops_low_tuples():
    pool = CandidatePool.from_candidates([c("a-t", T, "A", 0.9), c("b-t", T, "B", 0.1)])
    scorer = Scorer(CFG.replace(likelihood_floor=0.5), prior_mode=PriorMode.NONE)
    assert [t.doc_id for t in rank_top_k(pool, 5, scorer)] == ["A"]


def test_same_doc_constraint():
    rng = np.random.default_rng(8)
    for _ in range(30):
        pool = random_pool(rng)
        for t in rank_top_k(pool, 1000, UNIFORM):
            assert len({x.doc_id for x in t.present}) == 1


def test_parallel_matches_serial():
    rng = np.random.default_rng(9)
    for _ in range(10):
        pool = random_pool(rng)
        scorer = Scorer(CFG, edges=random_edges(rng, pool))
        assert rank_top_k(pool, 50, scorer, workers=4) == rank_top_k(pool, 50, scorer)


def test_missing_store():
    with pytest.raises(MissingStore):
        Scorer(CFG, prior_mode=PriorMode.GRAPH)
    with pytest.raises(MissingStore):
        Scorer(CFG, prior_mode=PriorMode.LAYOUT)
    Scorer(CFG, prior_mode=PriorMode.GRAPH, edges=GraphEdgeStore())


def test_baseline_examples():
    pool = CandidatePool.from_candidates([c("img", I, "A", 0.7), c("txt", T, "B", 0.9)])
    assert [x.chunk_id for x in rank_baseline_raw(pool, 5)] == ["txt", "img"]
    tied = CandidatePool.from_candidates([
        c("s", S, "A", 0.5), c("i", I, "A", 0.5), c("t2", T, "A", 0.5), c("t1", T, "A", 0.5)])
    assert [x.chunk_id for x in rank_baseline_raw(tied, 5)] == ["t1", "t2", "i", "s"]
    many = CandidatePool.from_candidates([c(f"t{i:03d}", T, "A", i / 100) for i in range(100)])
    assert [x.chunk_id for x in rank_baseline_raw(many, 1)] == ["t099"]


def test_as_tuple_places_slot():
    t = as_tuple(c("v", I, "A", 0.3))
    assert t.image is not None and t.text is None and t.posterior == 0.3


def test_pool_rejects_wrong_modality():
    with pytest.raises(ValueError):
        CandidatePool(text=(c("v", I, "A", 0.3),))
