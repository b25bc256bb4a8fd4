"""End-to-end command-line runs, in process via main(argv).

Each test drives the same binary surface a user would: generate a manifest,
index it, query it, train the filter, run a study. Assertions check exit
codes, the files left behind, and the printed output.
"""

import json

import pytest

from lazyrag.cli import main
from lazyrag.corpus import load_manifest
from lazyrag.models import SENTINEL
from lazyrag.planner import KnnModel
from lazyrag.vectorstore import TextDB


def run(capsys, *argv: str) -> str:
    code = main(list(argv))
    assert code == 0
    return capsys.readouterr().out


def gen(capsys, tmp_path, seed=7, n_clips=6):
    manifest_path = tmp_path / "corpus.jsonl"
    run(
        capsys, "gen",
        "--seed", str(seed), "--n-clips", str(n_clips),
        "--out", str(manifest_path),
    )
    return manifest_path


def gen_and_index(capsys, tmp_path, seed=7, n_clips=6):
    manifest_path = gen(capsys, tmp_path, seed=seed, n_clips=n_clips)
    store_dir = tmp_path / "store"
    run(
        capsys, "preprocess",
        "--manifest", str(manifest_path), "--store-dir", str(store_dir),
    )
    return manifest_path, store_dir


class TestGenerate:
    def test_gen_writes_manifest(self, capsys, tmp_path):
        out = tmp_path / "corpus.jsonl"
        stdout = run(capsys, "gen", "--seed", "7", "--n-clips", "6", "--out", str(out))
        assert "6 clips" in stdout
        manifest = load_manifest(out)
        assert manifest.corpus_id == "synthetic-7-6"
        assert len(manifest) == 6

    def test_gen_reads_world_from_config(self, capsys, tmp_path):
        cfg = tmp_path / "run.yaml"
        cfg.write_text("world:\n  seed: 21\n  n_clips: 4\n")
        out = tmp_path / "corpus.jsonl"
        run(capsys, "gen", "--config", str(cfg), "--out", str(out))
        assert load_manifest(out).corpus_id == "synthetic-21-4"

    def test_flags_override_config(self, capsys, tmp_path):
        cfg = tmp_path / "run.yaml"
        cfg.write_text("world:\n  seed: 21\n  n_clips: 4\n")
        out = tmp_path / "corpus.jsonl"
        run(capsys, "gen", "--config", str(cfg), "--seed", "5", "--out", str(out))
        assert load_manifest(out).corpus_id == "synthetic-5-4"


class TestPreprocess:
    def test_preprocess_builds_stores(self, capsys, tmp_path):
        manifest_path = gen(capsys, tmp_path)
        store_dir = tmp_path / "store"
        stdout = run(
            capsys, "preprocess",
            "--manifest", str(manifest_path), "--store-dir", str(store_dir),
        )
        assert "indexed 6 clips" in stdout
        assert (store_dir / "manifest.jsonl").is_file()
        assert (store_dir / "image.db").is_file()
        assert len(TextDB.restore(store_dir / "text.db")) == 6

    def test_config_embedding_dimension_applies(self, capsys, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"embedding": {"dimension": 32}}))
        manifest_path = gen(capsys, tmp_path)
        store_dir = tmp_path / "store"
        run(
            capsys, "preprocess", "--config", str(cfg),
            "--manifest", str(manifest_path), "--store-dir", str(store_dir),
        )
        assert TextDB.restore(store_dir / "text.db").dimension == 32


class TestBaseline:
    def test_baseline_extracts_everything(self, capsys, tmp_path):
        manifest_path = gen(capsys, tmp_path)
        store_dir = tmp_path / "store"
        stdout = run(
            capsys, "baseline",
            "--manifest", str(manifest_path), "--store-dir", str(store_dir),
        )
        # 6 clips x 5 frames x 1500 per captioned frame
        assert "simulated cost 45000" in stdout
        assert len(TextDB.restore(store_dir / "baseline.db")) == 6


class TestQuery:
    def test_query_answers_and_persists_warm_start(self, capsys, tmp_path):
        manifest_path, store_dir = gen_and_index(capsys, tmp_path, seed=9, n_clips=20)

        cold_out = run(
            capsys, "query",
            "--manifest", str(store_dir / "manifest.jsonl"),
            "--store-dir", str(store_dir),
            "--query", "Is there a blue car?",
        )
        cold = json.loads(cold_out)
        assert cold["answer"] == "Yes"
        assert cold["iterations_used"] == 2
        assert cold["timing"]["simulated"]["extraction"] > 0
        assert len(TextDB.restore(store_dir / "text.db")) > 20

        warm_out = run(
            capsys, "query",
            "--manifest", str(store_dir / "manifest.jsonl"),
            "--store-dir", str(store_dir),
            "--query", "Is there a blue car?",
        )
        warm = json.loads(warm_out)
        assert warm["answer"] == "Yes"
        assert warm["iterations_used"] == 1
        assert warm["timing"]["simulated"]["extraction"] == 0.0

    def test_query_with_trained_filter(self, capsys, tmp_path):
        manifest_path, store_dir = gen_and_index(capsys, tmp_path, seed=9, n_clips=20)
        knn_path = tmp_path / "filter.db"
        stdout = run(
            capsys, "train-knn",
            "--manifest", str(manifest_path),
            "--out", str(knn_path), "--n-queries", "10",
        )
        assert "trained filter" in stdout
        assert len(KnnModel.load(knn_path)) > 0

        out = run(
            capsys, "query",
            "--manifest", str(store_dir / "manifest.jsonl"),
            "--store-dir", str(store_dir),
            "--query", "Is there a blue car?",
            "--knn", str(knn_path),
        )
        # a filter trained on 10 queries may reject the confirming chunks;
        # the contract here is that the filtered path runs end to end and
        # still produces one of the three legal answers
        assert json.loads(out)["answer"] in ("Yes", "No", SENTINEL)


class TestEvalStudies:
    def test_eval_recall_writes_reports(self, capsys, tmp_path):
        manifest_path = gen(capsys, tmp_path, seed=9, n_clips=10)
        results = tmp_path / "results"
        stdout = run(
            capsys, "eval", "recall",
            "--manifest", str(manifest_path), "--results-dir", str(results),
            "--n-queries", "8", "--k-grid", "1,4",
        )
        assert "recall_dual" in stdout
        record = json.loads((results / "recall.json").read_text())
        assert [row["k"] for row in record["rows"]] == [1, 4]
        for row in record["rows"]:
            assert 0.0 <= row["recall_text_only"] <= row["recall_dual"] <= 1.0
        assert (results / "recall.txt").is_file()

    def test_eval_fraction_writes_reports(self, capsys, tmp_path):
        manifest_path = gen(capsys, tmp_path, seed=9, n_clips=10)
        results = tmp_path / "results"
        run(
            capsys, "eval", "fraction",
            "--manifest", str(manifest_path), "--results-dir", str(results),
            "--n-queries", "6", "--k-grid", "2,4",
        )
        record = json.loads((results / "fraction.json").read_text())
        assert [row["k"] for row in record["rows"]] == [2, 4]
        for row in record["rows"]:
            assert 0.0 <= row["captioner"] <= 1.0

    def test_eval_latency_writes_reports(self, capsys, tmp_path):
        manifest_path = gen(capsys, tmp_path, seed=9, n_clips=10)
        results = tmp_path / "results"
        run(
            capsys, "eval", "latency",
            "--manifest", str(manifest_path), "--results-dir", str(results),
            "--n-queries", "10", "--k", "2",
        )
        record = json.loads((results / "latency.json").read_text())
        assert len(record["series"]) == 10
        assert record["mean_first_half"] == pytest.approx(
            sum(record["series"][:5]) / 5
        )

    def test_eval_filtering_writes_reports(self, capsys, tmp_path):
        manifest_path = gen(capsys, tmp_path, seed=9, n_clips=20)
        results = tmp_path / "results"
        run(
            capsys, "eval", "filtering",
            "--manifest", str(manifest_path), "--results-dir", str(results),
            "--n-queries", "12", "--k-grid", "10",
        )
        record = json.loads((results / "filtering.json").read_text())
        (row,) = record["rows"]
        assert row["initial_k"] == 10
        assert row["matched_k"] >= 1
        assert 0.0 <= row["recall_filtered"] <= 1.0


class TestArgumentErrors:
    def test_missing_required_flag_exits_nonzero(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["gen"])
        assert exc.value.code != 0

    def test_missing_subcommand_exits_nonzero(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code != 0
