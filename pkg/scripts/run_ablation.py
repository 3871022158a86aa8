"""Recall@k of every fusion/prior variant on the synthetic corpus.

    python scripts/run_ablation.py [--queries 10]
"""

import argparse

from bayes_rerank.core import FusionConfig
from bayes_rerank.evaluation import DEFAULT_KS, format_table, load_qrels_records, recall_at_k
from bayes_rerank.index import build_indexes
from bayes_rerank.pipeline import run_queries
from bayes_rerank.priors import PriorMode, aggregate_relation_weights
from bayes_rerank.ranker import FusionMethod, Scorer
from bayes_rerank.records import parse_edge, parse_embedding, parse_layout, parse_query
from bayes_rerank.synthetic import make_corpus


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--queries", type=int, default=10)
    args = ap.parse_args()

    corpus = make_corpus(args.queries)
    indexes = build_indexes([parse_embedding(r) for r in corpus["embeddings"]])
    edges = aggregate_relation_weights([parse_edge(r) for r in corpus["kg_edges"]])
    layout = {r["chunk_id"]: parse_layout(r) for r in corpus["layout"]}
    queries = [parse_query(r) for r in corpus["queries"]]
    qrels = load_qrels_records(corpus["qrels"])
    config = FusionConfig()

    variants = {"raw baseline": None}
    for fusion in FusionMethod:
        for prior in PriorMode:
            variants[f"{fusion.value}+{prior.value}"] = Scorer(
                config, fusion, prior, edges=edges, layout=layout)
    reports = {}
    for name, scorer in variants.items():
        ranked = run_queries(indexes, queries, max(DEFAULT_KS), scorer)
        reports[name] = recall_at_k(ranked, qrels, DEFAULT_KS)
    print(format_table(reports))


if __name__ == "__main__":
    main()
