"""HTTP service exposing corpora, preprocessing jobs, queries, and metrics.

All routes live under ``/v1`` and speak UTF-8 JSON in both directions.

    POST /v1/corpora                     register a corpus
        body {"manifest": "<manifest file text>"}
          or {"synthetic": {"seed": int, "n_clips": int, ...WorldConfig fields}}
        -> {"corpus_id": str}
    GET  /v1/corpora                     list corpora and their readiness
    POST /v1/corpora/{cid}/preprocess    start (or re-attach to) the async
        indexing job -> {"job_id": str, "state": str}
    GET  /v1/corpora/{cid}/preprocess/status
        -> {"state": "not_started"|"running"|"done"|"failed",
            "clips_done": int, "clips_total": int, "simulated_cost": float}
    POST /v1/corpora/{cid}/query         answer synchronously
        body {"query": str, "k": int|null}
        -> the query result record (answer, supporting clips, per-round
           trace, timing); 409 {"detail": {"error": "not_ready"}} until
           preprocessing finishes
    GET  /v1/corpora/{cid}/clips/{clip_id}
        -> clip metadata plus its chunks, index and detailed
    GET  /v1/corpora/{cid}/metrics
        -> per-model extracted fraction, store sizes, cost ledger

Durability: stores and the manifest (including extraction state) are written
under the data directory after preprocessing and after every query that
extracted something, and reloaded on startup, so answers survive a restart.
"""

from __future__ import annotations

import logging
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .config import RunConfig, WorldConfig, _build
from .corpus import (
    CorpusManifest,
    ManifestError,
    clip_to_record,
    gen_synthetic,
    load_manifest,
    loads_manifest,
    save_manifest,
)
from .engine import Engine
from .extractor import fraction_extracted
from .models import build_synthetic_registry
from .vectorstore import ImageDB, StoreError, TextDB

log = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.jsonl"
TEXT_DB_FILE = "text.db"
IMAGE_DB_FILE = "image.db"


class CreateCorpusRequest(BaseModel):
    manifest: str | None = None
    synthetic: dict[str, Any] | None = None


class QueryRequest(BaseModel):
    query: str
    k: int | None = None


@dataclass
class JobState:
    job_id: str
    state: str = "running"  # running | done | failed
    clips_done: int = 0
    clips_total: int = 0
    simulated_cost: float = 0.0
    error: str | None = None

    def to_record(self) -> dict:
        return {
            "job_id": self.job_id,
            "state": self.state,
            "clips_done": self.clips_done,
            "clips_total": self.clips_total,
            "simulated_cost": self.simulated_cost,
            "error": self.error,
        }


@dataclass
class CorpusRuntime:
    engine: Engine
    directory: Path
    preprocessed: bool = False
    job: JobState | None = None
    job_lock: threading.Lock = field(default_factory=threading.Lock)
    persist_lock: threading.Lock = field(default_factory=threading.Lock)

    def persist(self) -> None:
        with self.persist_lock:
            self.directory.mkdir(parents=True, exist_ok=True)
            save_manifest(self.engine.corpus, self.directory / MANIFEST_FILE)
            self.engine.text_db.persist(self.directory / TEXT_DB_FILE)
            self.engine.image_db.persist(self.directory / IMAGE_DB_FILE)


class ServiceState:
    def __init__(self, data_dir: Path, run_config: RunConfig):
        self.data_dir = data_dir
        self.run_config = run_config
        self.corpora: dict[str, CorpusRuntime] = {}
        self.lock = threading.Lock()
        self._load_existing()

    def _runtime_for(self, manifest: CorpusManifest) -> CorpusRuntime:
        vocab = manifest.vocabulary()
        if not vocab.objects:
            vocab = self.run_config.world.vocabulary()
        registry = build_synthetic_registry(
            vocab, self.run_config.embedding, self.run_config.costs
        )
        engine = Engine(
            manifest,
            registry,
            emb_cfg=self.run_config.embedding,
            planner_cfg=self.run_config.planner,
            engine_cfg=self.run_config.engine,
        )
        return CorpusRuntime(
            engine=engine, directory=self.data_dir / manifest.corpus_id
        )

    def _load_existing(self) -> None:
        if not self.data_dir.exists():
            return
        for child in sorted(self.data_dir.iterdir()):
            manifest_path = child / MANIFEST_FILE
            if not manifest_path.is_file():
                continue
            try:
                manifest = load_manifest(manifest_path)
                runtime = self._runtime_for(manifest)
                text_path = child / TEXT_DB_FILE
                image_path = child / IMAGE_DB_FILE
                if text_path.exists():
                    runtime.engine.text_db = TextDB.restore(text_path)
                if image_path.exists():
                    runtime.engine.image_db = ImageDB.restore(image_path)
                if len(runtime.engine.text_db) > 0:
                    runtime.preprocessed = True
                    runtime.job = JobState(
                        job_id="restored",
                        state="done",
                        clips_done=len(manifest),
                        clips_total=len(manifest),
                    )
                self.corpora[manifest.corpus_id] = runtime
            except (ManifestError, StoreError) as exc:
                log.warning("skipping corpus dir %s: %s", child, exc)

    def get(self, corpus_id: str) -> CorpusRuntime:
        with self.lock:
            runtime = self.corpora.get(corpus_id)
        if runtime is None:
            raise HTTPException(status_code=404, detail=f"unknown corpus {corpus_id!r}")
        return runtime


def create_app(data_dir: Path | str, run_config: RunConfig | None = None) -> FastAPI:
    state = ServiceState(Path(data_dir), run_config or RunConfig())
    app = FastAPI(title="lazyrag", version="1")
    app.state.service = state
    # the query console is served from a separate origin
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.post("/v1/corpora")
    def create_corpus(body: CreateCorpusRequest):
        if (body.manifest is None) == (body.synthetic is None):
            raise HTTPException(
                status_code=400,
                detail="provide exactly one of 'manifest' or 'synthetic'",
            )
        try:
            if body.manifest is not None:
                manifest = loads_manifest(body.manifest)
            else:
                world = _build(WorldConfig, body.synthetic, "synthetic")
                manifest = gen_synthetic(
                    seed=world.seed,
                    n_clips=world.n_clips,
                    vocab=world.vocabulary(),
                    clip_duration=world.clip_duration,
                    keyframe_rate=world.keyframe_rate,
                    label_rate=world.label_rate,
                    max_extra_objects=world.max_extra_objects,
                )
        except (ManifestError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        with state.lock:
            if manifest.corpus_id in state.corpora:
                raise HTTPException(
                    status_code=409,
                    detail=f"corpus {manifest.corpus_id!r} already exists",
                )
            runtime = state._runtime_for(manifest)
            state.corpora[manifest.corpus_id] = runtime
        runtime.persist()
        return {"corpus_id": manifest.corpus_id, "clips": len(manifest)}

    @app.get("/v1/corpora")
    def list_corpora():
        with state.lock:
            items = list(state.corpora.items())
        return {
            "corpora": [
                {
                    "corpus_id": cid,
                    "clips": len(rt.engine.corpus),
                    "preprocessed": rt.preprocessed,
                }
                for cid, rt in items
            ]
        }

    @app.post("/v1/corpora/{corpus_id}/preprocess")
    def start_preprocess(corpus_id: str):
        runtime = state.get(corpus_id)
        with runtime.job_lock:
            if runtime.job is not None and runtime.job.state in ("running", "done"):
                return {"job_id": runtime.job.job_id, "state": runtime.job.state}
            job = JobState(
                job_id=uuid.uuid4().hex[:12],
                clips_total=len(runtime.engine.corpus),
            )
            runtime.job = job

        def progress(done: int, total: int, cost: float) -> None:
            job.clips_done = done
            job.clips_total = total
            job.simulated_cost = cost

        def run() -> None:
            try:
                runtime.engine.preprocess(progress_cb=progress)
                runtime.persist()
                runtime.preprocessed = True
                job.state = "done"
            except Exception as exc:  # surface the failure via the job record
                log.exception("preprocessing failed for %s", corpus_id)
                job.state = "failed"
                job.error = str(exc)

        threading.Thread(target=run, name=f"preprocess-{corpus_id}", daemon=True).start()
        return {"job_id": job.job_id, "state": job.state}

    @app.get("/v1/corpora/{corpus_id}/preprocess/status")
    def preprocess_status(corpus_id: str):
        runtime = state.get(corpus_id)
        if runtime.job is None:
            return {
                "state": "not_started",
                "clips_done": 0,
                "clips_total": len(runtime.engine.corpus),
                "simulated_cost": 0.0,
            }
        return runtime.job.to_record()

    @app.post("/v1/corpora/{corpus_id}/query")
    def query(corpus_id: str, body: QueryRequest):
        runtime = state.get(corpus_id)
        if not runtime.preprocessed:
            raise HTTPException(
                status_code=409,
                detail={
                    "error": "not_ready",
                    "message": "corpus is not preprocessed yet; start preprocessing "
                    "and poll its status",
                },
            )
        try:
            result = runtime.engine.answer_query(body.query, k=body.k)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        if result.timing.simulated.extraction > 0:
            runtime.persist()
        return result.to_record()

    @app.get("/v1/corpora/{corpus_id}/clips/{clip_id}")
    def clip_detail(corpus_id: str, clip_id: str):
        runtime = state.get(corpus_id)
        try:
            clip = runtime.engine.corpus.clip(clip_id)
        except ManifestError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        record = clip_to_record(clip)
        record["chunks"] = [
            {
                "chunk_id": c.chunk_id,
                "level": c.level,
                "source_model_id": c.source_model_id,
                "text": c.text,
            }
            for c in sorted(
                runtime.engine.text_db.chunks_for_clip(clip_id),
                key=lambda c: c.chunk_id,
            )
        ]
        return record

    @app.get("/v1/corpora/{corpus_id}/metrics")
    def metrics(corpus_id: str):
        runtime = state.get(corpus_id)
        engine = runtime.engine
        heavy = [p.descriptor.model_id for p in engine.registry.heavyweight_extractors()]
        return {
            "fraction_extracted": {
                m: fraction_extracted(engine.corpus, m, engine.registry) for m in heavy
            },
            "text_chunks": len(engine.text_db),
            "frame_vectors": len(engine.image_db),
            "simulated_cost": engine.registry.ledger.snapshot(),
            "queries_answered": len(engine.query_log),
        }

    return app
