"""Regenerate the CLI golden files in tests/data/golden/.

The ranked run is produced by the dense brute-force enumerator (``--oracle``);
the test suite checks that the default engine reproduces it byte for byte.
"""

import os
import shutil
import tempfile
from pathlib import Path

from bayes_rerank.cli import main

ROOT = Path(__file__).resolve().parents[1]
TOY = ROOT / "src" / "bayes_rerank" / "data" / "toy"
GOLDEN = ROOT / "tests" / "data" / "golden"
EPOCH = "1700000000"


def run(*argv: str) -> None:
    code = main(list(argv))
    if code != 0:
        raise SystemExit(f"{' '.join(argv)} exited with {code}")


if __name__ == "__main__":
    os.environ["SOURCE_DATE_EPOCH"] = EPOCH
    GOLDEN.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        index = Path(tmp) / "index.json"
        run("index", str(TOY / "embeddings.jsonl"), "-o", str(index))
        run("rerank", str(index), "--queries", str(TOY / "queries.jsonl"),
            "--kg-edges", str(TOY / "kg_edges.jsonl"), "--oracle",
            "-o", str(GOLDEN / "run_ds_graph.jsonl"))
        run("baseline", str(index), "--queries", str(TOY / "queries.jsonl"),
            "-o", str(GOLDEN / "run_baseline.jsonl"))
        shutil.copy(index, GOLDEN / "index.json")
    run("eval", str(GOLDEN / "run_baseline.jsonl"), str(GOLDEN / "run_ds_graph.jsonl"),
        "--qrels", str(TOY / "qrels.jsonl"), "--out", str(GOLDEN / "report.json"))
