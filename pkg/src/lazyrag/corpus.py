"""Clip-indexed media corpora with optional per-frame ground truth.

A corpus is an ordered, non-overlapping sequence of clips; each clip holds
the keyframes sampled from it at a fixed rate. Synthetic corpora attach
ground-truth facts (objects with colors and text labels, plus a caption) to
every frame. The deterministic model providers read those facts instead of
pixels, which keeps the whole pipeline decidable and fast enough for tests.

Manifest file format (UTF-8, one JSON record per line):

    line 1    header  {"corpus_id": str, "keyframe_rate": number}
    line 2..  clip    {"clip_id": str, "start": number, "end": number,
                       "frames": [frame, ...], "extraction_state": [str, ...]}
    frame             {"frame_id": str, "timestamp": number,
                       "facts": facts | null}
    facts             {"objects": [{"object_class": str, "color": str|null,
                                    "text_label": str|null}, ...],
                       "caption": str}

``extraction_state`` and ``facts`` may be omitted. Any field name outside
this list is rejected, as is a file whose first line is not a header record.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

from .embedding import tokenize


class ManifestError(ValueError):
    """Raised for malformed manifest files and corpus invariant violations."""


@dataclass(frozen=True)
class GroundTruthObject:
    object_class: str
    color: str | None = None
    text_label: str | None = None


@dataclass(frozen=True)
class GroundTruth:
    """What is actually visible in a frame, plus a caption describing it.

    The caption must mention every object class, color, and text label,
    otherwise the caption-reading providers and the fact-reading providers
    would disagree about the world.
    """

    objects: tuple[GroundTruthObject, ...]
    caption: str

    def validate(self, where: str = "") -> None:
        tokens = set(tokenize(self.caption))
        for obj in self.objects:
            for attr in (obj.object_class, obj.color, obj.text_label):
                if attr is None:
                    continue
                missing = [t for t in tokenize(attr) if t not in tokens]
                if missing:
                    raise ManifestError(
                        f"{where}: caption {self.caption!r} does not mention {attr!r}"
                    )


@dataclass(frozen=True)
class Frame:
    frame_id: str
    timestamp: float
    facts: GroundTruth | None = None


@dataclass
class Clip:
    """A contiguous time range of the source media and its keyframes.

    ``extraction_state`` records which models have already produced output
    for this clip. It only ever grows; there is no API to unmark a model.
    """

    clip_id: str
    start: float
    end: float
    frames: tuple[Frame, ...]
    extraction_state: set[str] = field(default_factory=set)

    @property
    def duration(self) -> float:
        return self.end - self.start

    def mark_extracted(self, model_id: str) -> None:
        self.extraction_state.add(model_id)


@dataclass(frozen=True)
class Vocabulary:
    """Token vocabulary of a synthetic world."""

    objects: tuple[str, ...]
    colors: tuple[str, ...]
    text_labels: tuple[str, ...] = ()


DEFAULT_VOCAB = Vocabulary(
    objects=(
        "truck",
        "car",
        "bus",
        "person",
        "bicycle",
        "dog",
        "tree",
        "bench",
        "statue",
        "scooter",
        "van",
        "motorcycle",
    ),
    colors=("white", "black", "red", "blue", "green", "yellow"),
    text_labels=("fedex", "acme", "metro", "transit"),
)


@dataclass
class CorpusManifest:
    corpus_id: str
    clips: list[Clip]
    keyframe_rate: float = 1.0

    def __post_init__(self) -> None:
        self._by_id = {c.clip_id: c for c in self.clips}

    def clip(self, clip_id: str) -> Clip:
        try:
            return self._by_id[clip_id]
        except KeyError:
            raise ManifestError(f"unknown clip id {clip_id!r}") from None

    def __len__(self) -> int:
        return len(self.clips)

    def total_keyframes(self) -> int:
        return sum(len(c.frames) for c in self.clips)

    def validate(self) -> None:
        """Check corpus invariants; raises ManifestError naming the bad clip."""
        if not self.corpus_id:
            raise ManifestError("corpus_id must be non-empty")
        if self.keyframe_rate <= 0:
            raise ManifestError("keyframe_rate must be positive")
        seen_clip_ids: set[str] = set()
        seen_frame_ids: set[str] = set()
        prev: Clip | None = None
        for clip in self.clips:
            cid = clip.clip_id
            if cid in seen_clip_ids:
                raise ManifestError(f"duplicate clip id {cid!r}")
            seen_clip_ids.add(cid)
            if clip.start >= clip.end:
                raise ManifestError(f"clip {cid!r}: start must be < end")
            if not clip.frames:
                raise ManifestError(f"clip {cid!r}: needs at least one keyframe")
            if prev is not None and clip.start < prev.end:
                raise ManifestError(
                    f"clip {cid!r} overlaps clip {prev.clip_id!r}"
                )
            for frame in clip.frames:
                if frame.frame_id in seen_frame_ids:
                    raise ManifestError(
                        f"clip {cid!r}: duplicate frame id {frame.frame_id!r}"
                    )
                seen_frame_ids.add(frame.frame_id)
                if not (clip.start <= frame.timestamp <= clip.end):
                    raise ManifestError(
                        f"clip {cid!r}: frame {frame.frame_id!r} timestamp "
                        f"{frame.timestamp} outside [{clip.start}, {clip.end}]"
                    )
                if frame.facts is not None:
                    frame.facts.validate(where=f"clip {cid!r}")
            prev = clip

    def vocabulary(self) -> Vocabulary:
        """Collect the object/color/label vocabulary present in ground truth."""
        objects: set[str] = set()
        colors: set[str] = set()
        labels: set[str] = set()
        for clip in self.clips:
            for frame in clip.frames:
                if frame.facts is None:
                    continue
                for obj in frame.facts.objects:
                    objects.add(obj.object_class)
                    if obj.color:
                        colors.add(obj.color)
                    if obj.text_label:
                        labels.add(obj.text_label)
        return Vocabulary(
            objects=tuple(sorted(objects)),
            colors=tuple(sorted(colors)),
            text_labels=tuple(sorted(labels)),
        )


# --- manifest serialization ------------------------------------------------

_HEADER_FIELDS = {"corpus_id", "keyframe_rate"}
_CLIP_FIELDS = {"clip_id", "start", "end", "frames", "extraction_state"}
_FRAME_FIELDS = {"frame_id", "timestamp", "facts"}
_FACTS_FIELDS = {"objects", "caption"}
_OBJECT_FIELDS = {"object_class", "color", "text_label"}


def _reject_unknown(obj: dict[str, Any], allowed: set[str], what: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ManifestError(f"{what}: unknown fields {sorted(unknown)}")


def _require(obj: dict[str, Any], name: str, what: str) -> Any:
    if name not in obj:
        raise ManifestError(f"{what}: missing required field {name!r}")
    return obj[name]


def _facts_from_obj(obj: dict[str, Any], where: str) -> GroundTruth:
    _reject_unknown(obj, _FACTS_FIELDS, where)
    raw_objects = _require(obj, "objects", where)
    parsed = []
    for raw in raw_objects:
        _reject_unknown(raw, _OBJECT_FIELDS, where)
        parsed.append(
            GroundTruthObject(
                object_class=_require(raw, "object_class", where),
                color=raw.get("color"),
                text_label=raw.get("text_label"),
            )
        )
    return GroundTruth(objects=tuple(parsed), caption=_require(obj, "caption", where))


def frame_to_record(frame: Frame) -> dict[str, Any]:
    facts = None
    if frame.facts is not None:
        facts = {
            "objects": [
                {
                    "object_class": o.object_class,
                    "color": o.color,
                    "text_label": o.text_label,
                }
                for o in frame.facts.objects
            ],
            "caption": frame.facts.caption,
        }
    return {"frame_id": frame.frame_id, "timestamp": frame.timestamp, "facts": facts}


def clip_to_record(clip: Clip) -> dict[str, Any]:
    return {
        "clip_id": clip.clip_id,
        "start": clip.start,
        "end": clip.end,
        "frames": [frame_to_record(f) for f in clip.frames],
        "extraction_state": sorted(clip.extraction_state),
    }


def _frame_from_record(obj: dict[str, Any]) -> Frame:
    where = f"frame {obj.get('frame_id', '?')!r}"
    _reject_unknown(obj, _FRAME_FIELDS, where)
    facts_obj = obj.get("facts")
    facts = None if facts_obj is None else _facts_from_obj(facts_obj, where)
    return Frame(
        frame_id=_require(obj, "frame_id", where),
        timestamp=float(_require(obj, "timestamp", where)),
        facts=facts,
    )


def clip_from_record(obj: dict[str, Any]) -> Clip:
    where = f"clip {obj.get('clip_id', '?')!r}"
    _reject_unknown(obj, _CLIP_FIELDS, where)
    frames = tuple(_frame_from_record(f) for f in _require(obj, "frames", where))
    return Clip(
        clip_id=_require(obj, "clip_id", where),
        start=float(_require(obj, "start", where)),
        end=float(_require(obj, "end", where)),
        frames=frames,
        extraction_state=set(obj.get("extraction_state", [])),
    )


def dumps_manifest(manifest: CorpusManifest) -> str:
    header = {"corpus_id": manifest.corpus_id, "keyframe_rate": manifest.keyframe_rate}
    lines = [json.dumps(header, sort_keys=True)]
    lines.extend(json.dumps(clip_to_record(c), sort_keys=True) for c in manifest.clips)
    return "\n".join(lines) + "\n"


def loads_manifest(text: str) -> CorpusManifest:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise ManifestError("empty manifest")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ManifestError(f"header is not valid JSON: {exc}") from exc
    if not isinstance(header, dict):
        raise ManifestError("header record must be a JSON object")
    _reject_unknown(header, _HEADER_FIELDS, "header")
    clips = []
    for i, line in enumerate(lines[1:], start=2):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"line {i} is not valid JSON: {exc}") from exc
        clips.append(clip_from_record(obj))
    manifest = CorpusManifest(
        corpus_id=_require(header, "corpus_id", "header"),
        clips=clips,
        keyframe_rate=float(header.get("keyframe_rate", 1.0)),
    )
    manifest.validate()
    return manifest


def save_manifest(manifest: CorpusManifest, path: str | Path) -> None:
    Path(path).write_text(dumps_manifest(manifest), encoding="utf-8")


def load_manifest(path: str | Path) -> CorpusManifest:
    return loads_manifest(Path(path).read_text(encoding="utf-8"))


# --- synthetic world generator ----------------------------------------------


def _caption_for(objects: Iterable[GroundTruthObject]) -> str:
    phrases = []
    for obj in objects:
        phrase = f"a {obj.color} {obj.object_class}" if obj.color else f"a {obj.object_class}"
        if obj.text_label:
            phrase += f" with text '{obj.text_label}'"
        phrases.append(phrase)
    return ". ".join(phrases)


def gen_synthetic(
    seed: int,
    n_clips: int,
    vocab: Vocabulary = DEFAULT_VOCAB,
    *,
    clip_duration: float = 5.0,
    keyframe_rate: float = 1.0,
    label_rate: float = 0.25,
    max_extra_objects: int = 2,
    corpus_id: str | None = None,
) -> CorpusManifest:
    """Generate a deterministic synthetic corpus.

    The first ``len(objects) * len(colors)`` clips cycle through every
    (object, color) pair exactly once, as single-object clips, so a corpus at
    least that large covers the whole attribute grid. Later clips draw one to
    ``1 + max_extra_objects`` objects at random. All frames of a clip share
    one GroundTruth, which makes the clip caption a repetition of the frame
    caption and keeps frame vectors aligned with caption embeddings.

    Same arguments, same corpus; a different seed reshuffles pair order,
    extra objects, and label placement.
    """
    if n_clips < 1:
        raise ValueError("n_clips must be >= 1")
    if not vocab.objects or not vocab.colors:
        raise ValueError("vocabulary needs at least one object class and one color")
    if clip_duration <= 0 or keyframe_rate <= 0:
        raise ValueError("clip_duration and keyframe_rate must be positive")

    rng = random.Random(seed)
    grid = [(obj, color) for obj in vocab.objects for color in vocab.colors]
    rng.shuffle(grid)

    frames_per_clip = max(1, round(clip_duration * keyframe_rate))
    clips: list[Clip] = []
    for i in range(n_clips):
        if i < len(grid):
            pairs = [grid[i]]
        else:
            count = 1 + rng.randint(0, max_extra_objects)
            pairs = []
            while len(pairs) < count:
                pair = (rng.choice(vocab.objects), rng.choice(vocab.colors))
                if pair not in pairs:
                    pairs.append(pair)
        objects = []
        for obj_class, color in pairs:
            label = None
            if vocab.text_labels and rng.random() < label_rate:
                label = rng.choice(vocab.text_labels)
            objects.append(
                GroundTruthObject(object_class=obj_class, color=color, text_label=label)
            )
        facts = GroundTruth(objects=tuple(objects), caption=_caption_for(objects))
        clip_id = f"clip_{i:04d}"
        start = i * clip_duration
        frames = tuple(
            Frame(
                frame_id=f"{clip_id}_f{j:02d}",
                timestamp=start + j / keyframe_rate,
                facts=facts,
            )
            for j in range(frames_per_clip)
        )
        clips.append(
            Clip(clip_id=clip_id, start=start, end=start + clip_duration, frames=frames)
        )

    manifest = CorpusManifest(
        corpus_id=corpus_id or f"synthetic-{seed}-{n_clips}",
        clips=clips,
        keyframe_rate=keyframe_rate,
    )
    manifest.validate()
    return manifest
