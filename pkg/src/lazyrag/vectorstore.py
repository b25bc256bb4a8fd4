"""Exact-search vector stores for text chunks and frame embeddings.

TextDB holds one record per (clip, model) output at two levels of detail:
``index`` chunks from cheap upfront models and ``detailed`` chunks appended
lazily by heavyweight extraction. ImageDB holds one vector per keyframe.
Search is an exact scan: scores are dot products against every stored
vector, ranked descending with ties broken by ascending record id, so
results are reproducible across runs and platforms.

On-disk container (shared by both stores and by saved KNN training sets),
all integers little-endian:

    magic    4 bytes   b"LRVS"
    version  u16       currently 1
    kind     u8        1 = text chunks, 2 = frame vectors, 3 = labeled features
    pad      u8        zero
    dim      u32       embedding dimension
    count    u64       record count
    digest   32 bytes  SHA-256 over the whole record region
    records  count times: u32 payload length, then that many bytes of
             UTF-8 JSON (one record object per payload)

Restore verifies magic, version, kind, and digest; a truncated or edited
file fails with StoreCorruptError rather than loading partially.
"""

from __future__ import annotations

import hashlib
import json
import struct
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Literal

import numpy as np

from .embedding import EmbeddingConfig, embed_text

MAGIC = b"LRVS"
FORMAT_VERSION = 1
KIND_TEXT = 1
KIND_IMAGE = 2
KIND_LABELED = 3

_HEADER = struct.Struct("<4sHBBIQ32s")

Level = Literal["index", "detailed"]

#: Chunk level implied by the weight class of the producing model.
LEVEL_FOR_WEIGHT = {"lightweight": "index", "heavyweight": "detailed"}


class StoreError(RuntimeError):
    pass


class DuplicateChunkError(StoreError):
    """Same id upserted again with different content."""


class StoreCorruptError(StoreError):
    """On-disk store failed header or checksum validation."""


@dataclass(eq=False)
class Chunk:
    chunk_id: str
    clip_id: str
    text: str
    source_model_id: str
    level: Level
    embedding: np.ndarray

    def same_content(self, other: "Chunk") -> bool:
        return (
            self.chunk_id == other.chunk_id
            and self.clip_id == other.clip_id
            and self.text == other.text
            and self.source_model_id == other.source_model_id
            and self.level == other.level
            and np.array_equal(self.embedding, other.embedding)
        )


def chunk_id_for(clip_id: str, model_id: str) -> str:
    """Deterministic chunk id: one chunk per (clip, model) pair."""
    return f"{clip_id}::{model_id}"


def make_chunk(
    clip_id: str,
    text: str,
    source_model_id: str,
    weight_class: str,
    config: EmbeddingConfig,
) -> Chunk:
    """Build a chunk whose embedding is, by construction, embed_text(text)."""
    return Chunk(
        chunk_id=chunk_id_for(clip_id, source_model_id),
        clip_id=clip_id,
        text=text,
        source_model_id=source_model_id,
        level=LEVEL_FOR_WEIGHT[weight_class],
        embedding=embed_text(text, config),
    )


@dataclass(frozen=True)
class FrameRecord:
    frame_id: str
    clip_id: str
    vector: np.ndarray

    def same_content(self, other: "FrameRecord") -> bool:
        return (
            self.frame_id == other.frame_id
            and self.clip_id == other.clip_id
            and np.array_equal(self.vector, other.vector)
        )


def write_container(path: Path, kind: int, dim: int, payloads: list[bytes]) -> None:
    """Write records into the checksummed container format described above."""
    body = bytearray()
    for payload in payloads:
        body += struct.pack("<I", len(payload))
        body += payload
    digest = hashlib.sha256(bytes(body)).digest()
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, kind, 0, dim, len(payloads), digest)
    path.write_bytes(header + bytes(body))


def read_container(path: Path, expected_kind: int) -> tuple[int, list[dict]]:
    """Read and verify a container; returns (dimension, record objects)."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise StoreCorruptError(f"{path}: file shorter than header")
    magic, version, kind, _pad, dim, count, digest = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise StoreCorruptError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise StoreCorruptError(f"{path}: unsupported format version {version}")
    if kind != expected_kind:
        raise StoreCorruptError(
            f"{path}: store kind {kind} does not match expected {expected_kind}"
        )
    body = raw[_HEADER.size:]
    if hashlib.sha256(body).digest() != digest:
        raise StoreCorruptError(f"{path}: checksum mismatch (truncated or edited)")
    records = []
    offset = 0
    for _ in range(count):
        if offset + 4 > len(body):
            raise StoreCorruptError(f"{path}: record region shorter than count")
        (length,) = struct.unpack_from("<I", body, offset)
        offset += 4
        payload = body[offset:offset + length]
        if len(payload) != length:
            raise StoreCorruptError(f"{path}: truncated record")
        offset += length
        records.append(json.loads(payload.decode("utf-8")))
    if offset != len(body):
        raise StoreCorruptError(f"{path}: trailing bytes after last record")
    return dim, records


class TextDB:
    """Append-only chunk store with exact dot-product search.

    Thread model: every public method takes the internal lock, so readers
    always see a consistent snapshot while one writer appends.
    """

    def __init__(self, dimension: int):
        if dimension < 1:
            raise ValueError("dimension must be positive")
        self.dimension = dimension
        self._lock = threading.RLock()
        self._chunks: list[Chunk] = []
        self._by_id: dict[str, Chunk] = {}
        self._by_clip: dict[str, list[Chunk]] = {}
        self._matrix: np.ndarray | None = None

    def __len__(self) -> int:
        with self._lock:
            return len(self._chunks)

    def __contains__(self, chunk_id: str) -> bool:
        with self._lock:
            return chunk_id in self._by_id

    def chunks(self) -> list[Chunk]:
        with self._lock:
            return list(self._chunks)

    def get(self, chunk_id: str) -> Chunk | None:
        with self._lock:
            return self._by_id.get(chunk_id)

    def chunks_for_clip(self, clip_id: str) -> list[Chunk]:
        with self._lock:
            return list(self._by_clip.get(clip_id, []))

    def clip_ids(self) -> set[str]:
        with self._lock:
            return set(self._by_clip)

    def upsert_chunks(self, chunks: Iterable[Chunk]) -> int:
        """Insert chunks, skipping byte-identical re-inserts.

        Returns the number of records actually added. Raises
        DuplicateChunkError when an id arrives again with different content;
        nothing before the offending chunk is rolled back, matching the
        append-only contract.
        """
        added = 0
        with self._lock:
            for chunk in chunks:
                if chunk.embedding.shape != (self.dimension,):
                    raise StoreError(
                        f"chunk {chunk.chunk_id!r}: embedding dimension "
                        f"{chunk.embedding.shape} does not match store ({self.dimension},)"
                    )
                existing = self._by_id.get(chunk.chunk_id)
                if existing is not None:
                    if existing.same_content(chunk):
                        continue
                    raise DuplicateChunkError(
                        f"chunk {chunk.chunk_id!r} already stored with different content"
                    )
                self._chunks.append(chunk)
                self._by_id[chunk.chunk_id] = chunk
                self._by_clip.setdefault(chunk.clip_id, []).append(chunk)
                added += 1
            if added:
                self._matrix = None
        return added

    def _score_matrix(self) -> np.ndarray:
        if self._matrix is None:
            self._matrix = np.vstack([c.embedding for c in self._chunks])
        return self._matrix

    def topn(self, query_vec: np.ndarray, n: int) -> list[tuple[Chunk, float]]:
        """Exact top-n by dot product, ties broken by ascending chunk id."""
        if n < 1:
            raise ValueError("n must be >= 1")
        if query_vec.shape != (self.dimension,):
            raise ValueError(
                f"query dimension {query_vec.shape} does not match store "
                f"({self.dimension},)"
            )
        with self._lock:
            if not self._chunks:
                return []
            scores = self._score_matrix() @ query_vec
            order = sorted(
                range(len(self._chunks)),
                key=lambda i: (-scores[i], self._chunks[i].chunk_id),
            )
            return [(self._chunks[i], float(scores[i])) for i in order[:n]]

    def persist(self, path: str | Path) -> None:
        with self._lock:
            payloads = [
                json.dumps(
                    {
                        "chunk_id": c.chunk_id,
                        "clip_id": c.clip_id,
                        "text": c.text,
                        "source_model_id": c.source_model_id,
                        "level": c.level,
                        "embedding": c.embedding.tolist(),
                    },
                    sort_keys=True,
                ).encode("utf-8")
                for c in self._chunks
            ]
            write_container(Path(path), KIND_TEXT, self.dimension, payloads)

    @classmethod
    def restore(cls, path: str | Path) -> "TextDB":
        dim, records = read_container(Path(path), KIND_TEXT)
        db = cls(dim)
        db.upsert_chunks(
            Chunk(
                chunk_id=r["chunk_id"],
                clip_id=r["clip_id"],
                text=r["text"],
                source_model_id=r["source_model_id"],
                level=r["level"],
                embedding=np.asarray(r["embedding"], dtype=np.float64),
            )
            for r in records
        )
        return db


class ImageDB:
    """Append-only frame-vector store with exact dot-product search."""

    def __init__(self, dimension: int):
        if dimension < 1:
            raise ValueError("dimension must be positive")
        self.dimension = dimension
        self._lock = threading.RLock()
        self._frames: list[FrameRecord] = []
        self._by_id: dict[str, FrameRecord] = {}
        self._matrix: np.ndarray | None = None

    def __len__(self) -> int:
        with self._lock:
            return len(self._frames)

    def __contains__(self, frame_id: str) -> bool:
        with self._lock:
            return frame_id in self._by_id

    def frames(self) -> list[FrameRecord]:
        with self._lock:
            return list(self._frames)

    def add_frames(self, records: Iterable[FrameRecord]) -> int:
        added = 0
        with self._lock:
            for rec in records:
                if rec.vector.shape != (self.dimension,):
                    raise StoreError(
                        f"frame {rec.frame_id!r}: vector dimension "
                        f"{rec.vector.shape} does not match store ({self.dimension},)"
                    )
                existing = self._by_id.get(rec.frame_id)
                if existing is not None:
                    if existing.same_content(rec):
                        continue
                    raise DuplicateChunkError(
                        f"frame {rec.frame_id!r} already stored with different content"
                    )
                self._frames.append(rec)
                self._by_id[rec.frame_id] = rec
                added += 1
            if added:
                self._matrix = None
        return added

    def _score_matrix(self) -> np.ndarray:
        if self._matrix is None:
            self._matrix = np.vstack([f.vector for f in self._frames])
        return self._matrix

    def topf(self, query_vec: np.ndarray, f: int) -> list[tuple[FrameRecord, float]]:
        """Exact top-f frames by dot product, ties broken by ascending frame id."""
        if f < 1:
            raise ValueError("f must be >= 1")
        if query_vec.shape != (self.dimension,):
            raise ValueError(
                f"query dimension {query_vec.shape} does not match store "
                f"({self.dimension},)"
            )
        with self._lock:
            if not self._frames:
                return []
            scores = self._score_matrix() @ query_vec
            order = sorted(
                range(len(self._frames)),
                key=lambda i: (-scores[i], self._frames[i].frame_id),
            )
            return [(self._frames[i], float(scores[i])) for i in order[:f]]

    def persist(self, path: str | Path) -> None:
        with self._lock:
            payloads = [
                json.dumps(
                    {
                        "frame_id": r.frame_id,
                        "clip_id": r.clip_id,
                        "embedding": r.vector.tolist(),
                    },
                    sort_keys=True,
                ).encode("utf-8")
                for r in self._frames
            ]
            write_container(Path(path), KIND_IMAGE, self.dimension, payloads)

    @classmethod
    def restore(cls, path: str | Path) -> "ImageDB":
        dim, records = read_container(Path(path), KIND_IMAGE)
        db = cls(dim)
        db.add_frames(
            FrameRecord(
                frame_id=r["frame_id"],
                clip_id=r["clip_id"],
                vector=np.asarray(r["embedding"], dtype=np.float64),
            )
            for r in records
        )
        return db
