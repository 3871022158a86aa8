"""Command-line entry point: ``bayes-rerank {index,rerank,baseline,eval}``.

Exit codes: 0 success, 2 input-contract violation, 3 missing store for the
selected prior, 4 transport failure talking to the embedding service.
"""

from __future__ import annotations

import argparse
import contextlib
import datetime as dt
import json
import logging
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from . import __version__
from .core import MODALITIES, FusionConfig, InputContractError, Modality, load_config
from .evaluation import DEFAULT_KS, compare_runs, format_table, recall_at_k
from .index import ProviderConfig, TransportError, build_indexes
from .pipeline import rank_pool, retrieve_pool, tuple_record
from .priors import PriorMode
from .ranker import FusionMethod, MissingStore, Scorer
from .records import (
    QuerySpec,
    dumps,
    load_edges,
    load_embeddings,
    load_index,
    load_layout,
    load_qrels,
    load_queries,
    read_run,
    save_index,
    sha256_file,
    write_jsonl,
)

log = logging.getLogger("bayes_rerank")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_MISSING_STORE = 3
EXIT_TRANSPORT = 4

_OVERRIDES = ("alpha", "beta", "kappa", "tau", "tau_page", "epsilon",
              "conflict_threshold", "prior_floor", "likelihood_floor")


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        when = dt.datetime.fromtimestamp(int(epoch), tz=dt.timezone.utc)
    else:
        when = dt.datetime.now(tz=dt.timezone.utc).replace(microsecond=0)
    return when.isoformat().replace("+00:00", "Z")


def _input_entry(path: Optional[str]) -> Optional[dict]:
    if path is None:
        return None
    return {"name": Path(path).name, "sha256": sha256_file(path)}


def _parse_ks(text: str) -> List[int]:
    try:
        ks = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"cutoffs must be comma-separated integers: {text!r}")
    if not ks or min(ks) < 1:
        raise argparse.ArgumentTypeError(f"cutoffs must be positive: {text!r}")
    return ks


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


@contextlib.contextmanager
def _output(path: Optional[str]):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            yield f


def cmd_index(args) -> int:
    records = load_embeddings(args.embeddings)
    indexes = build_indexes(records)
    save_index(indexes, args.out)
    for modality in MODALITIES:
        if modality in indexes:
            idx = indexes[modality]
            print(f"{modality.value}: {len(idx)} records, dimension {idx.dimensionality}")
    return EXIT_OK


def _build_config(args) -> FusionConfig:
    config = load_config(args.config) if args.config else FusionConfig()
    changes = {name: getattr(args, name) for name in _OVERRIDES if getattr(args, name) is not None}
    return config.replace(**changes) if changes else config


def _queries(args) -> List[QuerySpec]:
    if args.query is not None:
        return [QuerySpec(query_id=args.query_id or "query", text=args.query)]
    queries = load_queries(args.queries)
    if args.query_id is not None:
        queries = [q for q in queries if q.query_id == args.query_id]
        if not queries:
            raise InputContractError(f"query id {args.query_id!r} not found in {args.queries}")
    return queries


def _providers(args) -> Optional[Dict[Modality, ProviderConfig]]:
    if args.query is None:
        return None
    return {m: ProviderConfig.remote_from_env(m) for m in MODALITIES}


def _write_run(args, manifest: dict, ranked: Dict[str, list]) -> None:
    with _output(args.out) as out:
        out.write(dumps({"manifest": manifest}) + "\n")
        for qid, tuples in ranked.items():
            write_jsonl(out, (tuple_record(qid, r, t) for r, t in enumerate(tuples, start=1)))


def _pool_sizes(args) -> Dict[Modality, int]:
    return {Modality.TEXT: args.pool_text, Modality.IMAGE: args.pool_image,
            Modality.SCREENSHOT: args.pool_screenshot}


def _manifest(args, config: Optional[FusionConfig], mode: dict) -> dict:
    return {
        "tool": f"bayes-rerank {__version__}",
        "config": config.to_dict() if config is not None else None,
        "inputs": {
            "index": _input_entry(args.index),
            "queries": _input_entry(args.queries),
            "kg_edges": _input_entry(getattr(args, "kg_edges", None)),
            "layout": _input_entry(getattr(args, "layout", None)),
        },
        "mode": mode,
        "timestamp": _timestamp(),
    }


def _run(args, scorer: Optional[Scorer], config: Optional[FusionConfig], mode: dict) -> int:
    indexes = load_index(args.index)
    queries = _queries(args)
    providers = _providers(args)
    pool_sizes = _pool_sizes(args)
    ranked = {}
    for q in queries:
        pool = retrieve_pool(indexes, q, pool_sizes, providers)
        ranked[q.query_id] = rank_pool(pool, args.top_k, scorer,
                                       oracle=getattr(args, "oracle", False),
                                       workers=getattr(args, "workers", 1))
    mode = {**mode, "top_k": args.top_k, "pools": {m.value: n for m, n in pool_sizes.items()}}
    _write_run(args, _manifest(args, config, mode), ranked)
    return EXIT_OK


def cmd_rerank(args) -> int:
    prior = PriorMode(args.prior)
    if prior is PriorMode.GRAPH and args.kg_edges is None:
        raise MissingStore("--prior graph needs a knowledge-graph edge file: pass --kg-edges PATH "
                           "(or choose --prior layout/none)")
    if prior is PriorMode.LAYOUT and args.layout is None:
        raise MissingStore("--prior layout needs a layout file: pass --layout PATH "
                           "(or choose --prior graph/none)")
    config = _build_config(args)
    edges = load_edges(args.kg_edges) if prior is PriorMode.GRAPH else None
    layout = load_layout(args.layout) if prior is PriorMode.LAYOUT else None
    scorer = Scorer(config, FusionMethod(args.fusion), prior, edges=edges, layout=layout)
    return _run(args, scorer, config, {"fusion": args.fusion, "prior": args.prior})


def cmd_baseline(args) -> int:
    return _run(args, None, None, {"fusion": "raw", "prior": "none"})


def cmd_eval(args) -> int:
    qrels = load_qrels(args.qrels)
    reports = {}
    for path in args.runs:
        _, ranked = read_run(path)
        name = Path(path).name
        if name in reports:
            name = path
        reports[name] = recall_at_k(ranked, qrels, args.ks, method=args.method)
    deltas = None
    if len(reports) == 2:
        first, second = reports.values()
        deltas = compare_runs(first, second)
    print(format_table(reports, deltas))
    if args.out:
        body = {"runs": {name: rep.to_dict() for name, rep in reports.items()}}
        if deltas is not None:
            body["delta"] = {str(k): v for k, v in deltas.items()}
        Path(args.out).write_text(json.dumps(body, sort_keys=True, indent=2) + "\n",
                                  encoding="utf-8")
    return EXIT_OK


def _add_retrieval_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("index", help="index file written by 'bayes-rerank index'")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--queries", help="query file (one record per line with per-modality vectors)")
    src.add_argument("--query", help="free-text query embedded by the remote provider "
                                     "(endpoint from BAYES_RERANK_EMBED_URL)")
    p.add_argument("--query-id", help="restrict to one query id from --queries")
    p.add_argument("--top-k", type=_positive_int, default=20)
    p.add_argument("--pool-text", type=_positive_int, default=1024)
    p.add_argument("--pool-image", type=_positive_int, default=512)
    p.add_argument("--pool-screenshot", type=_positive_int, default=512)
    p.add_argument("-o", "--out", help="output run file (default: standard output)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bayes-rerank",
        description="Re-rank multimodal retrieval candidates by posterior probability.")
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", help="validate an embeddings file and build per-modality indexes")
    p.add_argument("embeddings")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("rerank", help="retrieve and rank evidence tuples by posterior")
    _add_retrieval_args(p)
    p.add_argument("--fusion", choices=[m.value for m in FusionMethod], default="ds")
    p.add_argument("--prior", choices=[m.value for m in PriorMode], default="graph")
    p.add_argument("--kg-edges", help="knowledge-graph relation file (graph prior)")
    p.add_argument("--layout", help="layout record file (layout prior)")
    p.add_argument("--config", help="JSON or TOML config file")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--tau-page", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--conflict-threshold", type=float)
    p.add_argument("--prior-floor", type=float)
    p.add_argument("--likelihood-floor", type=float)
    p.add_argument("--workers", type=_positive_int, default=1,
                   help="score documents on this many threads; output is unchanged")
    p.add_argument("--oracle", action="store_true",
                   help="rank with the dense brute-force enumerator (small inputs only)")
    p.set_defaults(func=cmd_rerank)

    p = sub.add_parser("baseline", help="flat ranking by normalized similarity, no fusion")
    _add_retrieval_args(p)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("eval", help="recall@k of one or more run files")
    p.add_argument("runs", nargs="+")
    p.add_argument("--qrels", required=True)
    p.add_argument("--ks", type=_parse_ks, default=list(DEFAULT_KS),
                   help="comma-separated cutoffs (default 1,3,5,10,20)")
    p.add_argument("--method", choices=["hit", "set"], default="hit")
    p.add_argument("--out", help="write the report as JSON")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except MissingStore as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_STORE
    except TransportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except FileNotFoundError as exc:
        print(f"error: no such file: {exc.filename}", file=sys.stderr)
        return EXIT_INPUT
    except InputContractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
