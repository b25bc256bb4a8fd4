"""The incremental query engine: index cheaply, answer, extract on demand.

Preprocessing runs only the lightweight models (object detector into index
chunks, frame embedder into the image store). Answering retrieves context,
prompts the LLM, and watches for one exact string: when the model replies
with the retry sentinel, the engine runs the heavyweight extraction plan for
the clips behind the current context, appends the detailed chunks, re-plans
against the grown store, and asks again, up to a configured number of
rounds. Anything else the model says is final.

Timing note: reported simulated time covers retrieval (free; exact search
runs no model) and extraction (per-frame model cost). LLM calls are wall-
clocked but carry no simulated cost, keeping the headline latency metric
about the media models rather than the chat model.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

from .corpus import CorpusManifest
from .embedding import DEFAULT_CONFIG, EmbeddingConfig
from .extractor import extract
from .models import (
    ANSWER_PROMPT_TEMPLATE,
    SENTINEL,
    ModelRegistry,
)
from .planner import ExtractionPlan, KnnModel, PlannerConfig, plan as build_plan
from .vectorstore import FrameRecord, ImageDB, TextDB, chunk_id_for, make_chunk

log = logging.getLogger(__name__)


class EngineError(RuntimeError):
    pass


@dataclass(frozen=True)
class EngineConfig:
    """Answer-loop knobs. ``max_iterations`` counts LLM rounds, so the
    default of 2 allows one extraction pass between two prompts."""

    max_iterations: int = 2
    answer_prompt: str = ANSWER_PROMPT_TEMPLATE

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


def format_timestamp(seconds: float) -> str:
    total = int(seconds)
    return f"{total // 3600:02d}:{total % 3600 // 60:02d}:{total % 60:02d}"


def build_prompt(
    context_lines: Sequence[str],
    query: str,
    template: str = ANSWER_PROMPT_TEMPLATE,
) -> str:
    """Instantiate the answer prompt. The context section is the given lines
    joined with newlines; an empty sequence leaves the section empty."""
    return template.format(context="\n".join(context_lines), query=query)


@dataclass
class PhaseTimes:
    retrieval: float = 0.0
    extraction: float = 0.0
    llm: float = 0.0

    def to_record(self) -> dict:
        return {
            "retrieval": self.retrieval,
            "extraction": self.extraction,
            "llm": self.llm,
        }


@dataclass
class QueryTiming:
    simulated: PhaseTimes = field(default_factory=PhaseTimes)
    wall: PhaseTimes = field(default_factory=PhaseTimes)

    def to_record(self) -> dict:
        return {"simulated": self.simulated.to_record(), "wall": self.wall.to_record()}


@dataclass
class IterationTrace:
    """What happened in one LLM round."""

    iteration: int
    answer: str
    sentinel: bool
    context_chunk_ids: list[str] = field(default_factory=list)
    extracted_clips: list[str] = field(default_factory=list)
    chunks_added: int = 0
    extraction_cost: float = 0.0

    def to_record(self) -> dict:
        return {
            "iteration": self.iteration,
            "answer": self.answer,
            "sentinel": self.sentinel,
            "context_chunk_ids": self.context_chunk_ids,
            "extracted_clips": self.extracted_clips,
            "chunks_added": self.chunks_added,
            "extraction_cost": self.extraction_cost,
        }


@dataclass
class QueryResult:
    answer: str
    supporting_clips: list[str]
    iterations_used: int
    timing: QueryTiming
    context_chunks: list[str]
    trace: list[IterationTrace] = field(default_factory=list)

    def to_record(self) -> dict:
        return {
            "answer": self.answer,
            "supporting_clips": self.supporting_clips,
            "iterations_used": self.iterations_used,
            "timing": self.timing.to_record(),
            "context_chunks": self.context_chunks,
            "trace": [t.to_record() for t in self.trace],
        }


@dataclass
class PreprocessReport:
    clips_processed: int = 0
    chunks_added: int = 0
    frames_embedded: int = 0
    simulated_cost: float = 0.0
    wall_seconds: float = 0.0


ProgressCallback = Callable[[int, int, float], None]


class Engine:
    """One corpus, its stores, and the incremental answer loop.

    Extraction and preprocessing take the engine's write lock, so a corpus
    has a single writer at any moment; queries that trigger no extraction
    run lock-free against store snapshots.
    """

    def __init__(
        self,
        corpus: CorpusManifest,
        registry: ModelRegistry,
        *,
        emb_cfg: EmbeddingConfig = DEFAULT_CONFIG,
        planner_cfg: PlannerConfig | None = None,
        engine_cfg: EngineConfig | None = None,
        knn: KnnModel | None = None,
        text_db: TextDB | None = None,
        image_db: ImageDB | None = None,
    ):
        self.corpus = corpus
        self.registry = registry
        self.emb_cfg = emb_cfg
        self.planner_cfg = planner_cfg or PlannerConfig()
        self.engine_cfg = engine_cfg or EngineConfig()
        self.knn = knn
        self.text_db = text_db if text_db is not None else TextDB(emb_cfg.dimension)
        self.image_db = image_db if image_db is not None else ImageDB(emb_cfg.dimension)
        self.query_log: list[dict] = []
        self._write_lock = threading.Lock()
        self._llm = self._pick_llm(registry)

    @staticmethod
    def _pick_llm(registry: ModelRegistry):
        llms = registry.by_role("llm")
        if not llms:
            raise EngineError("registry has no llm provider")
        return llms[0]

    # --- preprocessing -----------------------------------------------------

    def preprocess(self, progress_cb: ProgressCallback | None = None) -> PreprocessReport:
        """Run every lightweight model over every clip.

        The engine's own stores decide what to skip: a clip is only
        reprocessed when its output is missing from this engine's text or
        image store. Re-calling on the same engine is therefore a free
        no-op, while a fresh engine sharing an already-marked corpus still
        builds its own index instead of trusting stale provenance.
        """
        report = PreprocessReport()
        started = time.perf_counter()
        indexers = sorted(
            self.registry.lightweight_indexers(), key=lambda p: p.descriptor.model_id
        )
        embedders = sorted(
            self.registry.by_role("frame_embedder"), key=lambda p: p.descriptor.model_id
        )
        total = len(self.corpus)
        with self._write_lock:
            for done, clip in enumerate(self.corpus.clips, start=1):
                processed = False
                for provider in indexers:
                    model_id = provider.descriptor.model_id
                    if chunk_id_for(clip.clip_id, model_id) in self.text_db:
                        clip.mark_extracted(model_id)
                        continue
                    output = provider.run(clip)
                    chunk = make_chunk(
                        clip_id=clip.clip_id,
                        text=output.text,
                        source_model_id=model_id,
                        weight_class=provider.descriptor.weight_class,
                        config=self.emb_cfg,
                    )
                    report.chunks_added += self.text_db.upsert_chunks([chunk])
                    clip.mark_extracted(model_id)
                    report.simulated_cost += (
                        provider.descriptor.per_frame_cost * len(clip.frames)
                    )
                    processed = True
                for provider in embedders:
                    model_id = provider.descriptor.model_id
                    if all(f.frame_id in self.image_db for f in clip.frames):
                        clip.mark_extracted(model_id)
                        continue
                    records = [
                        FrameRecord(frame_id=frame_id, clip_id=clip.clip_id, vector=vec)
                        for frame_id, vec in provider.run(clip)
                    ]
                    report.frames_embedded += self.image_db.add_frames(records)
                    clip.mark_extracted(model_id)
                    report.simulated_cost += (
                        provider.descriptor.per_frame_cost * len(clip.frames)
                    )
                    processed = True
                if processed:
                    report.clips_processed += 1
                if progress_cb is not None:
                    progress_cb(done, total, report.simulated_cost)
        report.wall_seconds = time.perf_counter() - started
        return report

    # --- querying ----------------------------------------------------------

    def _plan(self, query: str, cfg: PlannerConfig) -> ExtractionPlan:
        return build_plan(
            query,
            corpus=self.corpus,
            registry=self.registry,
            text_db=self.text_db,
            image_db=self.image_db,
            cfg=cfg,
            knn=self.knn,
            emb_cfg=self.emb_cfg,
        )

    def _context_lines(self, chunks) -> list[str]:
        lines = []
        for chunk in chunks:
            clip = self.corpus.clip(chunk.clip_id)
            lines.append(f"[{format_timestamp(clip.start)}] {chunk.text}")
        return lines

    def answer_query(self, query: str, *, k: int | None = None) -> QueryResult:
        """Answer one query, extracting lazily when the LLM asks for more.

        The loop runs at most ``max_iterations`` LLM rounds. Extraction
        happens only after a byte-exact sentinel reply and never after the
        final round; a sentinel in the final round is surfaced to the caller
        as the answer.
        """
        cfg = self.planner_cfg if k is None else replace(self.planner_cfg, k=k)
        timing = QueryTiming()
        trace: list[IterationTrace] = []

        t0 = time.perf_counter()
        current_plan = self._plan(query, cfg)
        timing.wall.retrieval += time.perf_counter() - t0

        answer = ""
        for iteration in range(self.engine_cfg.max_iterations):
            prompt = build_prompt(
                self._context_lines(current_plan.context_chunks),
                query,
                self.engine_cfg.answer_prompt,
            )
            t0 = time.perf_counter()
            answer = self._llm.complete(prompt)
            timing.wall.llm += time.perf_counter() - t0

            step = IterationTrace(
                iteration=iteration,
                answer=answer,
                sentinel=answer == SENTINEL,
                context_chunk_ids=[c.chunk_id for c in current_plan.context_chunks],
            )
            trace.append(step)
            if answer != SENTINEL or iteration == self.engine_cfg.max_iterations - 1:
                break

            t0 = time.perf_counter()
            with self._write_lock:
                report = extract(
                    current_plan, self.corpus, self.text_db, self.registry, self.emb_cfg
                )
            timing.wall.extraction += time.perf_counter() - t0
            timing.simulated.extraction += report.simulated_cost
            step.extracted_clips = report.clips_touched
            step.chunks_added = report.chunks_added
            step.extraction_cost = report.simulated_cost

            t0 = time.perf_counter()
            current_plan = self._plan(query, cfg)
            timing.wall.retrieval += time.perf_counter() - t0

        result = QueryResult(
            answer=answer,
            supporting_clips=sorted({c.clip_id for c in current_plan.context_chunks}),
            iterations_used=len(trace),
            timing=timing,
            context_chunks=[c.chunk_id for c in current_plan.context_chunks],
            trace=trace,
        )
        record = {"query": query, "k": cfg.k, **result.to_record()}
        self.query_log.append(record)
        log.info("query %s", json.dumps(record, sort_keys=True))
        return result
