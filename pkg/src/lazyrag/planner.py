"""Query planning: retrieval, learned candidate filtering, extraction scheduling.

For each query the planner retrieves a candidate pool from the chunk store,
optionally filters it with a k-nearest-neighbor vote trained on earlier
retrieval outcomes, keeps the best survivors as LLM context, and unions in
the clips behind the best-matching keyframes. Every context clip that a
heavyweight model has not yet processed becomes a pending (clip, model) run.

Frame hits enter the context clip set directly, without passing the learned
filter; the filter is trained on chunk features and has nothing to say
about frames.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .corpus import CorpusManifest
from .embedding import DEFAULT_CONFIG, EmbeddingConfig, concat_features, embed_text
from .models import ModelDescriptor, ModelRegistry
from .vectorstore import (
    Chunk,
    ImageDB,
    KIND_LABELED,
    StoreCorruptError,
    TextDB,
    read_container,
    write_container,
)


class PlannerError(RuntimeError):
    pass


class EmptyIndexError(PlannerError):
    """Planning was attempted before any chunk reached the store."""


class UndertrainedError(PlannerError):
    """KNN has fewer training points than the vote needs neighbors."""


@dataclass(frozen=True)
class PlannerConfig:
    """Retrieval and filtering knobs.

    top_n:      candidate chunks pulled from the store per query.
    top_f:      keyframes pulled from the image store per query.
    k:          context chunks kept after filtering.
    knn_neighbors / knn_accept_threshold: accept a candidate when at least
                ``knn_accept_threshold`` of its ``knn_neighbors`` nearest
                training points are labeled relevant.
    filtering_enabled: apply the learned filter; requires a trained model.
    fallback_unfiltered: when the filter rejects every candidate, fall back
                to the unfiltered top-k instead of returning no context.
    """

    top_n: int = 50
    top_f: int = 10
    k: int = 8
    knn_neighbors: int = 5
    knn_accept_threshold: int = 3
    filtering_enabled: bool = False
    fallback_unfiltered: bool = True

    def __post_init__(self) -> None:
        if self.top_n < 1 or self.top_f < 1 or self.k < 1:
            raise ValueError("top_n, top_f, and k must all be >= 1")
        if self.k > self.top_n:
            raise ValueError(f"k ({self.k}) must not exceed top_n ({self.top_n})")
        if self.knn_neighbors < 1:
            raise ValueError("knn_neighbors must be >= 1")
        if self.knn_accept_threshold > self.knn_neighbors:
            raise ValueError(
                f"knn_accept_threshold ({self.knn_accept_threshold}) must not "
                f"exceed knn_neighbors ({self.knn_neighbors})"
            )


class KnnModel:
    """Labeled feature matrix for the relevance vote.

    Features are concatenated (query, chunk) embeddings; labels are 1 when
    the chunk's clip appeared in the reference system's retrieved set for
    that query. Insertion order is preserved and used to break distance
    ties, so classification is deterministic.
    """

    def __init__(self, features: np.ndarray, labels: np.ndarray):
        features = np.asarray(features, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.int64)
        if features.ndim != 2:
            raise ValueError("features must be a 2-d array")
        if labels.shape != (features.shape[0],):
            raise ValueError("labels must align one-to-one with features")
        if not set(np.unique(labels)) <= {0, 1}:
            raise ValueError("labels must be 0 or 1")
        self.features = features
        self.labels = labels

    def __len__(self) -> int:
        return len(self.labels)

    def save(self, path: str | Path) -> None:
        payloads = [
            json.dumps(
                {"feature": feature.tolist(), "label": int(label)}, sort_keys=True
            ).encode("utf-8")
            for feature, label in zip(self.features, self.labels)
        ]
        write_container(Path(path), KIND_LABELED, self.features.shape[1], payloads)

    @classmethod
    def load(cls, path: str | Path) -> "KnnModel":
        dim, records = read_container(Path(path), KIND_LABELED)
        if not records:
            raise StoreCorruptError(f"{path}: empty training set")
        features = np.asarray([r["feature"] for r in records], dtype=np.float64)
        if features.shape[1] != dim:
            raise StoreCorruptError(f"{path}: feature width does not match header")
        labels = np.asarray([r["label"] for r in records], dtype=np.int64)
        return cls(features, labels)


def knn_classify(
    knn: KnnModel,
    feature: np.ndarray,
    neighbors: int = 5,
    accept_threshold: int = 3,
) -> bool:
    """Majority vote over the nearest training points.

    Euclidean distance, ties resolved by insertion order (stable sort), and
    acceptance when at least ``accept_threshold`` of the ``neighbors``
    nearest carry label 1. Raises UndertrainedError when the model holds
    fewer points than ``neighbors``.
    """
    if len(knn) < neighbors:
        raise UndertrainedError(
            f"knn has {len(knn)} training points, needs at least {neighbors}"
        )
    if feature.shape != (knn.features.shape[1],):
        raise ValueError(
            f"feature dimension {feature.shape} does not match training "
            f"({knn.features.shape[1]},)"
        )
    deltas = knn.features - feature
    distances = np.einsum("ij,ij->i", deltas, deltas)
    order = np.argsort(distances, kind="stable")
    votes = int(knn.labels[order[:neighbors]].sum())
    return votes >= accept_threshold


def knn_train(
    baseline_retrievals: Mapping[str, set[str]],
    candidates: Mapping[str, Sequence[tuple[str, np.ndarray]]],
) -> KnnModel:
    """Build the training set from reference retrievals.

    ``candidates`` maps each query to (clip_id, feature) pairs, one per
    candidate chunk considered for that query; a pair is labeled relevant
    exactly when its clip is in the reference system's retrieved clip set
    for the same query. Both mappings must cover the same queries.
    """
    if set(baseline_retrievals) != set(candidates):
        raise ValueError(
            "baseline_retrievals and candidates must cover the same queries"
        )
    features = []
    labels = []
    for query, pairs in candidates.items():
        relevant = baseline_retrievals[query]
        for clip_id, feature in pairs:
            features.append(np.asarray(feature, dtype=np.float64))
            labels.append(1 if clip_id in relevant else 0)
    if not features:
        raise ValueError("no candidate pairs supplied")
    return KnnModel(np.vstack(features), np.asarray(labels))


#: Hook deciding which heavyweight models to run on a context clip.
#: Receives (query, clip_id, descriptors) and returns the descriptors to run.
ModelSelector = Callable[[str, str, Sequence[ModelDescriptor]], Sequence[ModelDescriptor]]


def _select_all(
    query: str, clip_id: str, descriptors: Sequence[ModelDescriptor]
) -> Sequence[ModelDescriptor]:
    return descriptors


@dataclass
class ExtractionPlan:
    """Everything the engine needs to answer one query round."""

    query: str
    context_chunks: list[Chunk] = field(default_factory=list)
    context_clips: list[str] = field(default_factory=list)
    models_to_run: list[tuple[str, str]] = field(default_factory=list)
    filtered_out: int = 0
    fallback_used: bool = False


def plan(
    query: str,
    *,
    corpus: CorpusManifest,
    registry: ModelRegistry,
    text_db: TextDB,
    image_db: ImageDB | None = None,
    cfg: PlannerConfig = PlannerConfig(),
    knn: KnnModel | None = None,
    emb_cfg: EmbeddingConfig = DEFAULT_CONFIG,
    model_selector: ModelSelector = _select_all,
) -> ExtractionPlan:
    """Plan one retrieval round.

    Steps: embed the query, pull the top-n candidate chunks, apply the
    learned filter when enabled, keep the top-k surviving chunks as context,
    union in the clips behind the top-f frames, then schedule every
    (context clip, heavyweight model) pair the corpus has not seen yet.

    Raises EmptyIndexError when the chunk store is empty: retrieval over
    nothing would silently answer every query from thin air.
    """
    if len(text_db) == 0:
        raise EmptyIndexError("chunk store is empty; run preprocessing first")
    if cfg.filtering_enabled and knn is None:
        raise ValueError("filtering_enabled requires a trained KnnModel")

    query_vec = embed_text(query, emb_cfg)
    candidates = text_db.topn(query_vec, cfg.top_n)

    filtered_out = 0
    fallback_used = False
    if cfg.filtering_enabled and knn is not None:
        accepted = [
            (chunk, score)
            for chunk, score in candidates
            if knn_classify(
                knn,
                concat_features(query_vec, chunk.embedding),
                cfg.knn_neighbors,
                cfg.knn_accept_threshold,
            )
        ]
        filtered_out = len(candidates) - len(accepted)
        if not accepted and cfg.fallback_unfiltered:
            accepted = candidates
            fallback_used = True
    else:
        accepted = candidates

    context_chunks = [chunk for chunk, _ in accepted[: cfg.k]]

    clip_ids = {chunk.clip_id for chunk in context_chunks}
    if image_db is not None and len(image_db) > 0:
        for frame, _score in image_db.topf(query_vec, cfg.top_f):
            clip_ids.add(frame.clip_id)
    context_clips = sorted(clip_ids)

    heavy = sorted(
        (p.descriptor for p in registry.heavyweight_extractors()),
        key=lambda d: d.model_id,
    )
    models_to_run = []
    for clip_id in context_clips:
        clip = corpus.clip(clip_id)
        for descriptor in model_selector(query, clip_id, heavy):
            if descriptor.model_id not in clip.extraction_state:
                models_to_run.append((clip_id, descriptor.model_id))

    return ExtractionPlan(
        query=query,
        context_chunks=context_chunks,
        context_clips=context_clips,
        models_to_run=models_to_run,
        filtered_out=filtered_out,
        fallback_used=fallback_used,
    )
