"""Command line behaviour: exit codes, output shapes, and file side effects."""

import json
from pathlib import Path

import pytest

from vectorfuse.cli import main
from vectorfuse.corpus import write_corpus
from vectorfuse.datagen import random_records

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="module")
def demo_wd(tmp_path_factory):
    wd = tmp_path_factory.mktemp("demo")
    code = main(
        ["ingest", "--demo", "--workdir", str(wd), "--dense-dim", "32", "--vocab-dim", "500"]
    )
    assert code == 0
    return wd


@pytest.fixture(scope="module")
def precomputed_wd(tmp_path_factory):
    wd = tmp_path_factory.mktemp("pre")
    corpus = wd / "corpus.jsonl"
    write_corpus(random_records(30, 32, 500, seed=9), corpus)
    code = main(
        [
            "ingest", str(corpus), "--workdir", str(wd),
            "--dense-dim", "32", "--vocab-dim", "500", "--seed", "5",
        ]
    )
    assert code == 0
    return wd


class TestIngest:
    def test_demo_writes_collection_and_snapshots(self, demo_wd, capsys):
        for name in ("corpus.jsonl", "queries.jsonl", "qrels.txt",
                     "hybrid.idx", "fused.idx", "checkpoint.json"):
            assert (demo_wd / name).exists(), name

    def test_demo_output_lines(self, tmp_path, capsys):
        code = main(
            ["ingest", "--demo", "--workdir", str(tmp_path),
             "--dense-dim", "32", "--vocab-dim", "500"]
        )
        out = capsys.readouterr().out
        assert code == 0
        assert "demo collection written" in out
        assert "ingested 60 documents in 1 batches (0 skipped)" in out
        assert "hybrid digest" in out
        assert "fused digest" in out

    def test_no_corpus_no_demo_is_usage_error(self, tmp_path, capsys):
        code = main(["ingest", "--workdir", str(tmp_path)])
        assert code == 2
        assert "provide a corpus file or --demo" in capsys.readouterr().err

    def test_resume_reports_start_batch(self, precomputed_wd, capsys):
        corpus = precomputed_wd / "corpus.jsonl"
        code = main(
            ["ingest", str(corpus), "--workdir", str(precomputed_wd),
             "--dense-dim", "32", "--vocab-dim", "500", "--seed", "5", "--resume"]
        )
        assert code == 0
        assert "resumed from batch 2" in capsys.readouterr().out


class TestSearch:
    def test_table_output(self, demo_wd, capsys):
        code = main(["search", "disk cache tiering", "--workdir", str(demo_wd)])
        out = capsys.readouterr().out
        assert code == 0
        assert "method rrf" in out
        assert out.count("\n") == 11
        assert "  1." in out

    def test_json_output(self, demo_wd, capsys):
        code = main(
            ["search", "packet routing", "--workdir", str(demo_wd),
             "--method", "proj", "--top-k", "3", "--json"]
        )
        assert code == 0
        body = json.loads(capsys.readouterr().out)
        assert body["method"] == "proj"
        assert len(body["hits"]) == 3
        assert body["hits"][0]["rank"] == 1
        assert body["timing"]["index_queries"] == 1

    def test_unknown_method_is_usage_error(self, demo_wd):
        with pytest.raises(SystemExit) as exc:
            main(["search", "x", "--workdir", str(demo_wd), "--method", "bm25"])
        assert exc.value.code == 2

    def test_precomputed_corpus_rejects_text_search(self, precomputed_wd, capsys):
        code = main(["search", "some words", "--workdir", str(precomputed_wd)])
        assert code == 1
        assert "precomputed" in capsys.readouterr().err

    def test_missing_workdir_is_runtime_error(self, tmp_path, capsys):
        code = main(["search", "x", "--workdir", str(tmp_path / "nowhere")])
        assert code == 1
        assert "missing index snapshot" in capsys.readouterr().err


class TestEval:
    def test_retrieval_eval_writes_run_and_report(self, demo_wd, tmp_path, capsys):
        run_out = tmp_path / "run.txt"
        report_out = tmp_path / "report.json"
        code = main(
            ["eval", "--workdir", str(demo_wd), "--qrels", str(demo_wd / "qrels.txt"),
             "--method", "proj", "--run-out", str(run_out),
             "--report-out", str(report_out)]
        )
        out = capsys.readouterr().out
        assert code == 0
        assert "latency avg" in out
        assert "mean" in out
        report = json.loads(report_out.read_text())
        assert report["evaluated"] == 5
        assert 0.0 <= report["means"]["ndcg@10"] <= 1.0
        first = run_out.read_text().splitlines()[0].split()
        assert len(first) == 6
        assert first[-1] == "proj"

    def test_scores_existing_run_file(self, tmp_path, capsys):
        report_out = tmp_path / "report.json"
        code = main(
            ["eval", "--qrels", str(FIXTURES / "fixture_qrels.txt"),
             "--run", str(FIXTURES / "fixture_run.txt"),
             "--report-out", str(report_out)]
        )
        out = capsys.readouterr().out
        assert code == 0
        assert "0.6459" in out
        report = json.loads(report_out.read_text())
        assert report["means"]["ndcg@10"] == pytest.approx(0.6458629357, abs=1e-6)

    def test_missing_qrels_is_runtime_error(self, tmp_path, capsys):
        code = main(
            ["eval", "--qrels", str(tmp_path / "gone.txt"),
             "--run", str(FIXTURES / "fixture_run.txt")]
        )
        assert code == 1
        assert "error:" in capsys.readouterr().err


class TestBench:
    def test_json_counters(self, capsys):
        code = main(
            ["bench", "--docs", "300", "--queries", "5", "--dense-dim", "32",
             "--vocab-dim", "400", "--json"]
        )
        captured = capsys.readouterr()
        assert code == 0
        assert "building 300 documents" in captured.err
        results = json.loads(captured.out)
        assert results["rrf"]["index_queries"] == 10
        assert results["proj"]["index_queries"] == 5
        assert results["rrf"]["errors"] == 0

    def test_table_output(self, capsys):
        code = main(
            ["bench", "--docs", "200", "--queries", "3", "--dense-dim", "32",
             "--vocab-dim", "400", "--methods", "proj"]
        )
        out = capsys.readouterr().out
        assert code == 0
        assert "method" in out and "proj" in out

    def test_unknown_method_is_usage_error(self, capsys):
        code = main(["bench", "--methods", "rrf,tfidf"])
        assert code == 2
        assert "unknown method" in capsys.readouterr().err


class TestSweep:
    def test_json_output(self, demo_wd, capsys):
        code = main(
            ["sweep", "--workdir", str(demo_wd), "--qrels", str(demo_wd / "qrels.txt"),
             "--alphas", "0.5,1.0", "--json"]
        )
        assert code == 0
        rows = json.loads(capsys.readouterr().out)
        assert [row["alpha_query"] for row in rows] == [0.5, 1.0]
        assert all("ndcg@10" in row["means"] for row in rows)

    def test_table_output(self, demo_wd, capsys):
        code = main(
            ["sweep", "--workdir", str(demo_wd), "--qrels", str(demo_wd / "qrels.txt"),
             "--alphas", "0.95"]
        )
        out = capsys.readouterr().out
        assert code == 0
        assert "alpha" in out and "ndcg@10" in out
        assert "0.95" in out

    def test_bad_alphas_is_usage_error(self, demo_wd, capsys):
        code = main(
            ["sweep", "--workdir", str(demo_wd), "--qrels", str(demo_wd / "qrels.txt"),
             "--alphas", "a,b"]
        )
        assert code == 2
        assert "bad --alphas" in capsys.readouterr().err

    def test_empty_alphas_is_usage_error(self, demo_wd, capsys):
        code = main(
            ["sweep", "--workdir", str(demo_wd), "--qrels", str(demo_wd / "qrels.txt"),
             "--alphas", " , "]
        )
        assert code == 2
        assert "empty" in capsys.readouterr().err


class TestServe:
    def test_missing_workdir_fails_before_binding(self, tmp_path, capsys):
        code = main(["serve", "--workdir", str(tmp_path / "nowhere")])
        assert code == 1
        assert "missing index snapshot" in capsys.readouterr().err


class TestParser:
    def test_missing_subcommand_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2
