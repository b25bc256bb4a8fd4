"""Tests for lazy heavyweight extraction over planned (clip, model) pairs."""

import pytest

from lazyrag.corpus import gen_synthetic
from lazyrag.embedding import EmbeddingConfig
from lazyrag.extractor import ExtractionReport, extract, fraction_extracted
from lazyrag.models import UnknownModelError, build_synthetic_registry
from lazyrag.planner import ExtractionPlan, PlannerConfig, plan
from lazyrag.vectorstore import TextDB, make_chunk

EMB = EmbeddingConfig()


@pytest.fixture
def world():
    corpus = gen_synthetic(seed=9, n_clips=8)
    registry = build_synthetic_registry(corpus.vocabulary(), EMB)
    text_db = TextDB(dimension=EMB.dimension)
    detector = registry.get("detector")
    for clip in corpus.clips:
        out = detector.run(clip)
        text_db.upsert_chunks(
            [make_chunk(clip.clip_id, out.text, "detector", "lightweight", EMB)]
        )
        clip.mark_extracted("detector")
    return corpus, registry, text_db


def plan_for(corpus, clip_ids):
    return ExtractionPlan(
        query="q",
        context_chunks=[],
        context_clips=sorted(clip_ids),
        models_to_run=[(cid, "captioner") for cid in sorted(clip_ids)],
    )


class TestExtract:
    def test_empty_plan_is_free(self, world):
        corpus, registry, text_db = world
        before = registry.ledger.cost("captioner")
        report = extract(plan_for(corpus, []), corpus, text_db, registry)
        assert isinstance(report, ExtractionReport)
        assert report.chunks_added == 0
        assert report.simulated_cost == 0.0
        assert registry.ledger.cost("captioner") == before

    def test_cost_is_frames_times_per_frame_cost(self, world):
        corpus, registry, text_db = world
        targets = [c.clip_id for c in corpus.clips[:3]]
        report = extract(plan_for(corpus, targets), corpus, text_db, registry)
        # 3 clips x 5 frames x 1500 per frame
        assert report.simulated_cost == 3 * 5 * 1500.0
        assert report.chunks_added == 3
        assert sorted(report.clips_touched) == sorted(targets)
        assert registry.ledger.cost("captioner") == report.simulated_cost

    def test_detailed_chunks_land_in_store(self, world):
        corpus, registry, text_db = world
        cid = corpus.clips[0].clip_id
        extract(plan_for(corpus, [cid]), corpus, text_db, registry)
        chunk = text_db.get(f"{cid}::captioner")
        assert chunk is not None
        assert chunk.level == "detailed"
        assert chunk.source_model_id == "captioner"
        cap = corpus.clips[0].frames[0].facts.caption
        assert chunk.text == " ".join([cap] * 5)

    def test_extraction_marks_clip_state(self, world):
        corpus, registry, text_db = world
        cid = corpus.clips[0].clip_id
        extract(plan_for(corpus, [cid]), corpus, text_db, registry)
        assert "captioner" in corpus.clip(cid).extraction_state

    def test_second_run_is_skipped_and_free(self, world):
        corpus, registry, text_db = world
        targets = [c.clip_id for c in corpus.clips[:3]]
        extract(plan_for(corpus, targets), corpus, text_db, registry)
        cost_before = registry.ledger.cost("captioner")
        report = extract(plan_for(corpus, targets), corpus, text_db, registry)
        assert report.chunks_added == 0
        assert report.skipped == 3
        assert report.simulated_cost == 0.0
        assert registry.ledger.cost("captioner") == cost_before

    def test_provider_failure_contained_per_pair(self, world):
        corpus, registry, text_db = world
        bad_clip = corpus.clips[1].clip_id
        good_clip = corpus.clips[0].clip_id
        provider = registry.get("captioner")
        original_run = provider.run

        def flaky_run(clip):
            if clip.clip_id == bad_clip:
                raise RuntimeError("backend exploded")
            return original_run(clip)

        provider.run = flaky_run
        try:
            report = extract(
                plan_for(corpus, [good_clip, bad_clip]), corpus, text_db, registry
            )
        finally:
            provider.run = original_run
        assert report.chunks_added == 1
        assert [(c, m) for c, m, _ in report.failures] == [(bad_clip, "captioner")]
        assert "captioner" in corpus.clip(good_clip).extraction_state
        assert "captioner" not in corpus.clip(bad_clip).extraction_state
        # failed pair retries for real on the next plan
        report2 = extract(plan_for(corpus, [bad_clip]), corpus, text_db, registry)
        assert report2.chunks_added == 1
        assert report2.failures == []

    def test_report_record_is_json_friendly(self, world):
        corpus, registry, text_db = world
        report = extract(
            plan_for(corpus, [corpus.clips[0].clip_id]), corpus, text_db, registry
        )
        rec = report.to_record()
        assert rec["chunks_added"] == 1
        assert rec["simulated_cost"] == 5 * 1500.0

    def test_planned_pairs_integration(self, world):
        # end to end through the real planner instead of a hand-built plan
        corpus, registry, text_db = world
        p = plan(
            "Is there a red car?",
            corpus=corpus,
            registry=registry,
            text_db=text_db,
            cfg=PlannerConfig(top_n=8, k=2),
        )
        assert p.models_to_run != []
        report = extract(p, corpus, text_db, registry)
        assert report.chunks_added == len(p.models_to_run)
        p2 = plan(
            "Is there a red car?",
            corpus=corpus,
            registry=registry,
            text_db=text_db,
            cfg=PlannerConfig(top_n=8, k=2),
        )
        assert p2.models_to_run == []


class TestFractionExtracted:
    def test_zero_before_any_extraction(self, world):
        corpus, _, _ = world
        assert fraction_extracted(corpus, "captioner") == 0.0

    def test_counts_marked_clips(self, world):
        corpus, registry, text_db = world
        targets = [c.clip_id for c in corpus.clips[:2]]
        extract(plan_for(corpus, targets), corpus, text_db, registry)
        assert fraction_extracted(corpus, "captioner") == pytest.approx(2 / 8)

    def test_full_extraction_reaches_one(self, world):
        corpus, registry, text_db = world
        extract(
            plan_for(corpus, [c.clip_id for c in corpus.clips]),
            corpus,
            text_db,
            registry,
        )
        assert fraction_extracted(corpus, "captioner") == 1.0

    def test_registry_validates_model_id(self, world):
        corpus, registry, _ = world
        with pytest.raises(UnknownModelError):
            fraction_extracted(corpus, "typo", registry=registry)

    def test_without_registry_unknown_id_is_just_zero(self, world):
        corpus, _, _ = world
        assert fraction_extracted(corpus, "typo") == 0.0
