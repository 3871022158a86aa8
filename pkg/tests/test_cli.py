import json

import pytest

from bayes_rerank.cli import EXIT_INPUT, EXIT_MISSING_STORE, EXIT_TRANSPORT, main
from bayes_rerank.records import read_run

from conftest import TOY
from golden import EPOCH, replay, run_cli, same_bytes


@pytest.fixture
def index(tmp_path):
    path = tmp_path / "index.json"
    assert run_cli("index", TOY / "embeddings.jsonl", "-o", path) == 0
    return path


def test_index_summary(tmp_path, capsys):
    assert run_cli("index", TOY / "embeddings.jsonl", "-o", tmp_path / "i.json") == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("text: 32 records, dimension 82")
    assert len(out) == 3


def test_golden_round_trip(tmp_path, monkeypatch):
    out = replay(tmp_path, monkeypatch)
    assert same_bytes(out["index"], "index.json")
    assert same_bytes(out["run"], "run_ds_graph.jsonl")
    assert same_bytes(out["baseline"], "run_baseline.jsonl")
    assert same_bytes(out["report"], "report.json")


def test_manifest_contents(tmp_path, monkeypatch, index):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", EPOCH)
    run = tmp_path / "run.jsonl"
    assert run_cli("rerank", index, "--queries", TOY / "queries.jsonl", "--fusion", "linear",
                   "--prior", "none", "--alpha", "0.5", "--top-k", "3", "-o", run) == 0
    manifest, ranked = read_run(run)
    assert manifest["mode"]["fusion"] == "linear" and manifest["mode"]["prior"] == "none"
    assert manifest["config"]["alpha"] == 0.5
    assert manifest["inputs"]["kg_edges"] is None
    assert manifest["inputs"]["index"]["name"] == "index.json"
    assert manifest["timestamp"] == "2023-11-14T22:13:20Z"
    assert all(len(v) == 3 for v in ranked.values())
    rows = [json.loads(line) for line in run.read_text().splitlines()[1:]]
    assert all(r["prior"] == 1.0 for r in rows)
    # equal-weight linear fusion of a full tuple is the mean of its three scores
    full = next(r for r in rows if r["screenshot"] and r["image"] and r["text"])
    assert full["likelihood"] == pytest.approx(sum(full["scores"].values()) / 3)


def test_config_file(tmp_path, index):
    cfg = tmp_path / "cfg.toml"
    cfg.write_text("alpha = 0.9\nbeta = 0.2\n")
    run = tmp_path / "run.jsonl"
    assert run_cli("rerank", index, "--queries", TOY / "queries.jsonl", "--config", cfg,
                   "--beta", "0.3", "--kg-edges", TOY / "kg_edges.jsonl", "-o", run) == 0
    config = read_run(run)[0]["config"]
    assert (config["alpha"], config["beta"]) == (0.9, 0.3)
    bad = tmp_path / "bad.json"
    bad.write_text('{"gamma": 1}')
    assert run_cli("rerank", index, "--queries", TOY / "queries.jsonl", "--config", bad,
                   "--prior", "none") == EXIT_INPUT


def test_layout_prior_run(tmp_path, index):
    run = tmp_path / "run.jsonl"
    assert run_cli("rerank", index, "--queries", TOY / "queries.jsonl", "--prior", "layout",
                   "--layout", TOY / "layout.jsonl", "--query-id", "q0", "-o", run) == 0
    _, ranked = read_run(run)
    assert list(ranked) == ["q0"] and ranked["q0"][0] == [("doc-g0", 3)]


def test_missing_store_exit_code(index, capsys):
    assert run_cli("rerank", index, "--queries", TOY / "queries.jsonl") == EXIT_MISSING_STORE
    assert "--kg-edges" in capsys.readouterr().err
    assert run_cli("rerank", index, "--queries", TOY / "queries.jsonl",
                   "--prior", "layout") == EXIT_MISSING_STORE


def test_missing_store_checked_before_files(tmp_path):
    assert run_cli("rerank", tmp_path / "nope.json", "--queries", "nope.jsonl") == EXIT_MISSING_STORE


def test_input_errors(tmp_path, index, capsys):
    bad = tmp_path / "emb.jsonl"
    bad.write_text((TOY / "embeddings.jsonl").read_text().splitlines()[0] + "\n{oops\n")
    assert run_cli("index", bad, "-o", tmp_path / "i.json") == EXIT_INPUT
    assert f"{bad}:2:" in capsys.readouterr().err
    assert run_cli("index", tmp_path / "absent.jsonl", "-o", tmp_path / "i.json") == EXIT_INPUT
    assert run_cli("rerank", index, "--queries", TOY / "queries.jsonl", "--prior", "none",
                   "--query-id", "zzz") == EXIT_INPUT


def test_transport_failure(index, monkeypatch):
    monkeypatch.setenv("BAYES_RERANK_EMBED_URL", "http://127.0.0.1:9/embed")
    assert run_cli("baseline", index, "--query", "what is shown") == EXIT_TRANSPORT
    monkeypatch.delenv("BAYES_RERANK_EMBED_URL")
    assert run_cli("baseline", index, "--query", "what is shown") == EXIT_TRANSPORT


def test_eval_table(tmp_path, monkeypatch, capsys):
    out = replay(tmp_path, monkeypatch)
    capsys.readouterr()
    assert run_cli("eval", out["run"], "--qrels", TOY / "qrels.jsonl") == 0
    header, row = capsys.readouterr().out.splitlines()
    assert header.split()[1:] == ["R@1", "R@3", "R@5", "R@10", "R@20"]
    assert row.split()[1:] == ["100.0"] * 5
    assert run_cli("eval", out["run"], "--qrels", TOY / "qrels.jsonl", "--ks", "2,4") == 0
    assert capsys.readouterr().out.split()[1:3] == ["R@2", "R@4"]


def test_eval_report_delta(tmp_path, monkeypatch):
    out = replay(tmp_path, monkeypatch)
    report = json.loads(out["report"].read_text())
    assert report["runs"]["run_ds_graph.jsonl"]["recall"]["1"] == 1.0
    assert report["runs"]["run_baseline.jsonl"]["recall"]["1"] == 0.0
    assert report["delta"]["1"] == 1.0


def test_bad_cutoffs():
    with pytest.raises(SystemExit):
        main(["eval", "x.jsonl", "--qrels", "q.jsonl", "--ks", "0,5"])
