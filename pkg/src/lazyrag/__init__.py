"""Incremental retrieval-augmented querying over clip-indexed media.

Index a corpus cheaply upfront, answer queries by retrieval, and run the
expensive extraction models lazily, only on the clips a query actually
needs, re-querying once the new detail lands in the store.
"""

from .corpus import (
    Clip,
    CorpusManifest,
    Frame,
    GroundTruth,
    GroundTruthObject,
    ManifestError,
    Vocabulary,
    gen_synthetic,
    load_manifest,
    save_manifest,
)
from .embedding import EmbeddingConfig, concat_features, embed_text, similarity, tokenize
from .engine import Engine, EngineConfig, QueryResult, build_prompt
from .extractor import ExtractionReport, extract, fraction_extracted
from .models import (
    SENTINEL,
    CostConfig,
    CostLedger,
    ModelDescriptor,
    ModelRegistry,
    build_synthetic_registry,
)
from .planner import (
    ExtractionPlan,
    KnnModel,
    PlannerConfig,
    knn_classify,
    knn_train,
    plan,
)
from .vectorstore import Chunk, FrameRecord, ImageDB, TextDB, make_chunk

__version__ = "0.1.0"

__all__ = [
    "Chunk",
    "Clip",
    "CorpusManifest",
    "CostConfig",
    "CostLedger",
    "EmbeddingConfig",
    "Engine",
    "EngineConfig",
    "ExtractionPlan",
    "ExtractionReport",
    "Frame",
    "FrameRecord",
    "GroundTruth",
    "GroundTruthObject",
    "ImageDB",
    "KnnModel",
    "ManifestError",
    "ModelDescriptor",
    "ModelRegistry",
    "PlannerConfig",
    "QueryResult",
    "SENTINEL",
    "TextDB",
    "Vocabulary",
    "build_prompt",
    "build_synthetic_registry",
    "concat_features",
    "embed_text",
    "extract",
    "fraction_extracted",
    "gen_synthetic",
    "knn_classify",
    "knn_train",
    "load_manifest",
    "make_chunk",
    "plan",
    "save_manifest",
    "similarity",
    "tokenize",
]
