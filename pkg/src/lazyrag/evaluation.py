"""Evaluation harness: reference system, recall, trade-off and latency studies.

The reference ("baseline") system is conventional retrieval-augmented
querying: every heavyweight model runs over every clip upfront, and queries
retrieve from the resulting detailed chunks with no planner and no
incremental extraction. The incremental engine is measured against it on
three axes: upfront cost, retrieved-context agreement (recall), and how
extraction cost decays over a query stream.

recall@k here is the mean, over queries, of
``|clips behind both systems' top-k context| / |clips behind the baseline's
top-k context|``; queries whose baseline set is empty are skipped.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .corpus import CorpusManifest
from .embedding import DEFAULT_CONFIG, EmbeddingConfig, concat_features, embed_text
from .engine import Engine
from .models import QUESTION_PROMPT_TEMPLATE, ModelRegistry
from .planner import KnnModel, PlannerConfig, knn_train, plan as build_plan
from .vectorstore import TextDB, make_chunk


class EvalError(RuntimeError):
    pass


class BaselineSystem:
    """Upfront-everything reference: heavyweight chunks for every clip."""

    def __init__(
        self,
        corpus: CorpusManifest,
        registry: ModelRegistry,
        emb_cfg: EmbeddingConfig = DEFAULT_CONFIG,
    ):
        self.corpus = corpus
        self.registry = registry
        self.emb_cfg = emb_cfg
        self.text_db = TextDB(emb_cfg.dimension)
        self.preprocess_cost = 0.0
        self._llm = registry.by_role("llm")[0]

    def preprocess(self) -> float:
        """Run every heavyweight extractor over every clip; returns the
        simulated cost of doing so."""
        for provider in sorted(
            self.registry.heavyweight_extractors(), key=lambda p: p.descriptor.model_id
        ):
            for clip in self.corpus.clips:
                output = provider.run(clip)
                self.text_db.upsert_chunks(
                    [
                        make_chunk(
                            clip_id=clip.clip_id,
                            text=output.text,
                            source_model_id=provider.descriptor.model_id,
                            weight_class=provider.descriptor.weight_class,
                            config=self.emb_cfg,
                        )
                    ]
                )
                self.preprocess_cost += provider.descriptor.per_frame_cost * len(
                    clip.frames
                )
        return self.preprocess_cost

    def retrieve(self, query: str, k: int):
        if len(self.text_db) == 0:
            raise EvalError("baseline queried before preprocessing")
        query_vec = embed_text(query, self.emb_cfg)
        return self.text_db.topn(query_vec, k)

    def retrieved_clips(self, query: str, k: int) -> set[str]:
        return {chunk.clip_id for chunk, _ in self.retrieve(query, k)}

    def answer(self, query: str, k: int) -> str:
        from .engine import build_prompt, format_timestamp

        lines = []
        for chunk, _ in self.retrieve(query, k):
            clip = self.corpus.clip(chunk.clip_id)
            lines.append(f"[{format_timestamp(clip.start)}] {chunk.text}")
        return self._llm.complete(build_prompt(lines, query))


def run_baseline(
    corpus: CorpusManifest,
    registry: ModelRegistry,
    queries: Sequence[str] = (),
    k: int = 8,
    emb_cfg: EmbeddingConfig = DEFAULT_CONFIG,
) -> tuple[BaselineSystem, dict[str, set[str]]]:
    """Build the reference system and collect its retrieved clip sets."""
    system = BaselineSystem(corpus, registry, emb_cfg)
    system.preprocess()
    retrievals = {q: system.retrieved_clips(q, k) for q in queries}
    return system, retrievals


def recall_at_k(
    baseline_clips: Mapping[str, set[str]],
    candidate_clips: Mapping[str, set[str]],
) -> float:
    """Mean per-query overlap fraction against the baseline sets.

    Queries with an empty baseline set contribute nothing (skipped, not
    counted as zero). Raises ValueError when the two mappings cover
    different queries, or when every baseline set is empty and the metric
    is undefined.
    """
    if set(baseline_clips) != set(candidate_clips):
        raise ValueError("baseline and candidate retrievals cover different queries")
    scores = []
    for query, base in baseline_clips.items():
        if not base:
            continue
        common = base & candidate_clips[query]
        scores.append(len(common) / len(base))
    if not scores:
        raise ValueError("every baseline set is empty; recall is undefined")
    return sum(scores) / len(scores)


@dataclass(frozen=True)
class SynthesizedQuery:
    text: str
    source_clip_id: str


def synthesize_queries(
    corpus: CorpusManifest,
    llm,
    n: int,
    question_prompt: str = QUESTION_PROMPT_TEMPLATE,
) -> list[SynthesizedQuery]:
    """Invert clip captions into queries using the question prompt.

    Iterates clips in corpus order, asks the LLM for a question about each
    caption, and deduplicates by query text, so every returned query is
    traceable to the first clip that produced it. Returns at most ``n``
    queries; fewer when the corpus runs out of distinct questions.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    seen: set[str] = set()
    out: list[SynthesizedQuery] = []
    for clip in corpus.clips:
        facts = clip.frames[0].facts
        if facts is None or not facts.caption:
            continue
        prompt = question_prompt.format(context=facts.caption)
        question = llm.complete(prompt)
        if not question or question in seen:
            continue
        seen.add(question)
        out.append(SynthesizedQuery(text=question, source_clip_id=clip.clip_id))
        if len(out) == n:
            break
    return out


def build_query_stream(
    corpus: CorpusManifest,
    registry: ModelRegistry,
    n: int,
    seed: int,
    pool_size: int | None = None,
) -> list[str]:
    """Randomized stream of ``n`` queries drawn (with repetition) from a pool
    of questions synthesized from the corpus. Deterministic in the seed."""
    llm = registry.by_role("llm")[0]
    pool = [q.text for q in synthesize_queries(corpus, llm, pool_size or n)]
    if not pool:
        raise EvalError("corpus produced no synthesizable queries")
    rng = random.Random(seed)
    return [pool[rng.randrange(len(pool))] for _ in range(n)]


@dataclass
class TradeoffRow:
    """One grid point of the filtering trade-off study.

    ``initial_k`` candidates enter the learned filter; ``avg_chunks`` says
    how many survive on average (the filtered system's context cost).
    ``matched_k`` is the smallest whole context size at least that large,
    and both recalls are measured against the baseline's top-``matched_k``
    sets so the two systems are compared at equal average cost.
    """

    initial_k: int
    avg_chunks: float
    matched_k: int
    recall_filtered: float
    recall_unfiltered: float


def filtering_tradeoff(
    corpus: CorpusManifest,
    registry: ModelRegistry,
    queries: Sequence[str],
    knn: KnnModel,
    k_grid: Sequence[int] = (10, 20, 30, 40, 50),
    *,
    emb_cfg: EmbeddingConfig = DEFAULT_CONFIG,
    text_db: TextDB | None = None,
    baseline: BaselineSystem | None = None,
    planner_cfg: PlannerConfig | None = None,
) -> list[TradeoffRow]:
    """Sweep the candidate-pool size and compare filtered context against
    unfiltered context at matched average cost."""
    if not queries:
        raise ValueError("queries must be non-empty")
    base_cfg = planner_cfg or PlannerConfig()
    if baseline is None:
        baseline = BaselineSystem(corpus, registry, emb_cfg)
        baseline.preprocess()
    if text_db is None:
        probe = Engine(corpus, registry, emb_cfg=emb_cfg)
        probe.preprocess()
        text_db = probe.text_db

    rows = []
    for initial_k in k_grid:
        cfg = PlannerConfig(
            top_n=initial_k,
            top_f=base_cfg.top_f,
            k=initial_k,
            knn_neighbors=base_cfg.knn_neighbors,
            knn_accept_threshold=base_cfg.knn_accept_threshold,
            filtering_enabled=True,
            fallback_unfiltered=base_cfg.fallback_unfiltered,
        )
        filtered_sets: dict[str, set[str]] = {}
        chunk_counts = []
        for query in queries:
            p = build_plan(
                query,
                corpus=corpus,
                registry=registry,
                text_db=text_db,
                image_db=None,
                cfg=cfg,
                knn=knn,
                emb_cfg=emb_cfg,
            )
            chunk_counts.append(len(p.context_chunks))
            filtered_sets[query] = {c.clip_id for c in p.context_chunks}
        avg_chunks = sum(chunk_counts) / len(chunk_counts)
        # Whole-chunk budget at least as generous as the filtered average, so
        # the unfiltered arm is never shortchanged in the comparison.
        matched_k = max(1, math.ceil(avg_chunks))

        baseline_sets = {q: baseline.retrieved_clips(q, matched_k) for q in queries}
        unfiltered_sets = {}
        for query in queries:
            query_vec = embed_text(query, emb_cfg)
            unfiltered_sets[query] = {
                chunk.clip_id for chunk, _ in text_db.topn(query_vec, matched_k)
            }
        rows.append(
            TradeoffRow(
                initial_k=initial_k,
                avg_chunks=avg_chunks,
                matched_k=matched_k,
                recall_filtered=recall_at_k(baseline_sets, filtered_sets),
                recall_unfiltered=recall_at_k(baseline_sets, unfiltered_sets),
            )
        )
    return rows


def train_filter_knn(
    corpus: CorpusManifest,
    registry: ModelRegistry,
    train_queries: Sequence[str],
    *,
    emb_cfg: EmbeddingConfig = DEFAULT_CONFIG,
    candidate_pool: int = 50,
    baseline_k: int = 8,
    text_db: TextDB | None = None,
    baseline: BaselineSystem | None = None,
) -> KnnModel:
    """Label candidate chunks by baseline agreement and train the filter.

    For every training query the candidates are the index store's top
    ``candidate_pool`` chunks; a candidate is relevant when its clip
    appears in the baseline's top-``baseline_k`` retrieved clips.
    """
    if baseline is None:
        baseline = BaselineSystem(corpus, registry, emb_cfg)
        baseline.preprocess()
    if text_db is None:
        probe = Engine(corpus, registry, emb_cfg=emb_cfg)
        probe.preprocess()
        text_db = probe.text_db
    baseline_sets = {q: baseline.retrieved_clips(q, baseline_k) for q in train_queries}
    candidates: dict[str, list[tuple[str, object]]] = {}
    for query in train_queries:
        query_vec = embed_text(query, emb_cfg)
        pairs = []
        for chunk, _ in text_db.topn(query_vec, candidate_pool):
            pairs.append((chunk.clip_id, concat_features(query_vec, chunk.embedding)))
        candidates[query] = pairs
    return knn_train(baseline_sets, candidates)


def latency_series(engine: Engine, queries: Sequence[str], k: int | None = None) -> list[float]:
    """Per-query simulated media-model cost (retrieval plus extraction; the
    LLM is excluded) in stream order."""
    series = []
    for query in queries:
        result = engine.answer_query(query, k=k)
        series.append(result.timing.simulated.retrieval + result.timing.simulated.extraction)
    return series


@dataclass
class EvalReport:
    """Aggregate of one evaluation run, serializable for the results dir."""

    recall_at_k: dict[int, float] = field(default_factory=dict)
    recall_at_k_dual: dict[int, float] = field(default_factory=dict)
    avg_chunks_after_filter: float | None = None
    tradeoff: list[TradeoffRow] = field(default_factory=list)
    fraction_extracted: dict[int, float] = field(default_factory=dict)
    preprocessing_cost: dict[str, float] = field(default_factory=dict)
    latency: list[float] = field(default_factory=list)

    def to_record(self) -> dict:
        return {
            "recall_at_k": {str(k): v for k, v in self.recall_at_k.items()},
            "recall_at_k_dual": {str(k): v for k, v in self.recall_at_k_dual.items()},
            "avg_chunks_after_filter": self.avg_chunks_after_filter,
            "tradeoff": [vars(r) for r in self.tradeoff],
            "fraction_extracted": {
                str(k): v for k, v in self.fraction_extracted.items()
            },
            "preprocessing_cost": self.preprocessing_cost,
            "latency": self.latency,
        }

    def validate(self) -> None:
        for mapping in (self.recall_at_k, self.recall_at_k_dual):
            for k, value in mapping.items():
                if not (0.0 <= value <= 1.0):
                    raise EvalError(f"recall@{k} out of range: {value}")


def context_clip_sets(
    corpus: CorpusManifest,
    registry: ModelRegistry,
    text_db: TextDB,
    image_db,
    queries: Sequence[str],
    k: int,
    *,
    use_image_db: bool,
    top_f: int = 10,
    emb_cfg: EmbeddingConfig = DEFAULT_CONFIG,
) -> dict[str, set[str]]:
    """Clip sets behind the planner's context at size k, with or without the
    frame-store route."""
    cfg = PlannerConfig(top_n=max(50, k), top_f=top_f, k=k)
    sets: dict[str, set[str]] = {}
    for query in queries:
        p = build_plan(
            query,
            corpus=corpus,
            registry=registry,
            text_db=text_db,
            image_db=image_db if use_image_db else None,
            cfg=cfg,
            emb_cfg=emb_cfg,
        )
        if use_image_db:
            sets[query] = set(p.context_clips)
        else:
            sets[query] = {c.clip_id for c in p.context_chunks}
    return sets


def render_table(rows: Iterable[Mapping[str, object]], columns: Sequence[str]) -> str:
    """Plain-text table for report files; values are str()-ed as-is.

    Every row must carry every requested column: a typo in the column list
    should fail loudly, not render as blanks.
    """
    rows = list(rows)
    widths = {c: len(c) for c in columns}
    for row in rows:
        for c in columns:
            widths[c] = max(widths[c], len(str(row[c])))
    def line(values):
        return "  ".join(str(v).ljust(widths[c]) for c, v in zip(columns, values))
    out = [line(columns), line(["-" * widths[c] for c in columns])]
    out.extend(line([row[c] for c in columns]) for row in rows)
    return "\n".join(out)
