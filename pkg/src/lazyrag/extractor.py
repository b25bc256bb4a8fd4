"""Lazy heavyweight extraction: run planned (clip, model) pairs, append chunks.

Extraction is idempotent at the pair level. A pair whose model id already
sits in the clip's extraction state is skipped, so replaying a plan, or two
overlapping plans racing on the same corpus, charges each model at most once
per clip. A provider failure is contained to its pair: the clip keeps its
previous state, the failure is recorded, and the rest of the plan proceeds.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

from .corpus import CorpusManifest
from .embedding import DEFAULT_CONFIG, EmbeddingConfig
from .models import ModelRegistry, UnknownModelError
from .planner import ExtractionPlan
from .vectorstore import TextDB, make_chunk

log = logging.getLogger(__name__)


@dataclass
class ExtractionReport:
    """Outcome of executing one extraction plan."""

    chunks_added: int = 0
    clips_touched: list[str] = field(default_factory=list)
    skipped: int = 0
    simulated_cost: float = 0.0
    failures: list[tuple[str, str, str]] = field(default_factory=list)

    def to_record(self) -> dict:
        return {
            "chunks_added": self.chunks_added,
            "clips_touched": self.clips_touched,
            "skipped": self.skipped,
            "simulated_cost": self.simulated_cost,
            "failures": [list(f) for f in self.failures],
        }


def extract(
    plan: ExtractionPlan,
    corpus: CorpusManifest,
    text_db: TextDB,
    registry: ModelRegistry,
    emb_cfg: EmbeddingConfig = DEFAULT_CONFIG,
) -> ExtractionReport:
    """Run every pending (clip, model) pair of the plan.

    Per pair: skip if the clip has already seen the model, otherwise run the
    provider, append the detailed chunk, and only then mark the clip, so a
    crash mid-pair never records phantom extraction state. The report's
    simulated cost counts only pairs that actually ran.
    """
    report = ExtractionReport()
    touched: set[str] = set()
    for clip_id, model_id in plan.models_to_run:
        clip = corpus.clip(clip_id)
        if model_id in clip.extraction_state:
            report.skipped += 1
            continue
        provider = registry.get(model_id)
        try:
            output = provider.run(clip)
        except Exception as exc:  # provider failures must not sink the plan
            log.warning("extraction failed for %s/%s: %s", clip_id, model_id, exc)
            report.failures.append((clip_id, model_id, str(exc)))
            continue
        chunk = make_chunk(
            clip_id=clip_id,
            text=output.text,
            source_model_id=model_id,
            weight_class=provider.descriptor.weight_class,
            config=emb_cfg,
        )
        report.chunks_added += text_db.upsert_chunks([chunk])
        clip.mark_extracted(model_id)
        touched.add(clip_id)
        report.simulated_cost += provider.descriptor.per_frame_cost * len(clip.frames)
    report.clips_touched = sorted(touched)
    log.info("extraction %s", json.dumps(report.to_record(), sort_keys=True))
    return report


def fraction_extracted(
    corpus: CorpusManifest,
    model_id: str,
    registry: ModelRegistry | None = None,
) -> float:
    """Fraction of clips the model has already processed.

    When a registry is given, an id it does not know raises
    UnknownModelError instead of quietly reporting 0.
    """
    if registry is not None and model_id not in registry:
        raise UnknownModelError(model_id)
    if len(corpus) == 0:
        return 0.0
    done = sum(1 for clip in corpus.clips if model_id in clip.extraction_state)
    return done / len(corpus)
