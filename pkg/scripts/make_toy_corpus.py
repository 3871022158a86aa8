"""Regenerate the bundled toy corpus under src/bayes_rerank/data/toy/."""

from pathlib import Path

from bayes_rerank.synthetic import write_corpus

ROOT = Path(__file__).resolve().parents[1]

if __name__ == "__main__":
    paths = write_corpus(ROOT / "src" / "bayes_rerank" / "data" / "toy")
    for name, path in paths.items():
        print(f"{name}: {path.relative_to(ROOT)}")
