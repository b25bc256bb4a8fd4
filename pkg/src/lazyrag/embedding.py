"""Hashed bag-of-tokens text embeddings shared by queries and stored records.

Queries, index chunks, detailed chunks, and synthetic frame vectors all go
through the same function, so dot products are comparable across every
retrieval path. The embedding is a signed feature-hashing scheme: each token
adds +1 or -1 to one bucket, the result is L2-normalized.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from hashlib import blake2b

import numpy as np

log = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"[a-z0-9]+")

# Hash seed baked into the default config. Fixed so stored embeddings stay
# valid across runs; if a vocabulary change introduces a harmful bucket
# collision, bump the seed and re-embed.
DEFAULT_HASH_SEED = 13
DEFAULT_DIMENSION = 64
MIN_DIMENSION = 8


@dataclass(frozen=True)
class EmbeddingConfig:
    """Shape of the shared embedding space."""

    dimension: int = DEFAULT_DIMENSION
    hash_seed: int = DEFAULT_HASH_SEED

    def __post_init__(self) -> None:
        if self.dimension < MIN_DIMENSION:
            raise ValueError(
                f"embedding dimension must be >= {MIN_DIMENSION}, got {self.dimension}"
            )


DEFAULT_CONFIG = EmbeddingConfig()


def tokenize(text: str) -> list[str]:
    """Lowercase and split on every non-alphanumeric character."""
    return _TOKEN_RE.findall(text.lower())


def _token_hash(token: str, seed: int) -> int:
    key = seed.to_bytes(8, "little", signed=False)
    digest = blake2b(token.encode("utf-8"), digest_size=8, key=key).digest()
    return int.from_bytes(digest, "little")


def embed_text(text: str, config: EmbeddingConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Embed text as a unit-norm signed-hash bag of tokens.

    Every token occurrence contributes +1 or -1 (sign derived from the hash)
    to one of ``config.dimension`` buckets; the bucket vector is then
    L2-normalized. Text with no tokens embeds to the zero vector, flagged in
    the debug log, so callers can treat it as matching nothing.

    Args:
        text: arbitrary text; tokenization is case-insensitive.
        config: embedding space parameters.

    Returns:
        float64 array of length ``config.dimension`` with unit L2 norm, or
        the zero vector when the text has no tokens (or signed contributions
        cancel exactly).
    """
    vec = np.zeros(config.dimension, dtype=np.float64)
    tokens = tokenize(text)
    if not tokens:
        log.debug("embed_text: no tokens in %r, returning zero vector", text)
        return vec
    for token in tokens:
        h = _token_hash(token, config.hash_seed)
        bucket = h % config.dimension
        sign = 1.0 if (h >> 63) & 1 else -1.0
        vec[bucket] += sign
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        # Opposite-sign collisions cancelled everything out.
        log.debug("embed_text: signed contributions cancelled for %r", text)
        return vec
    return vec / norm


def similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Dot product of two embeddings; cosine similarity for unit-norm inputs.

    Raises ValueError on dimension mismatch.
    """
    if a.shape != b.shape:
        raise ValueError(f"embedding dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.dot(a, b))


def concat_features(query_vec: np.ndarray, chunk_vec: np.ndarray) -> np.ndarray:
    """Concatenate query and chunk embeddings into one classifier feature.

    No renormalization is applied: for unit-norm inputs the result has norm
    sqrt(2). Raises ValueError when the two vectors disagree on dimension.
    """
    if query_vec.shape != chunk_vec.shape:
        raise ValueError(
            f"embedding dimension mismatch: {query_vec.shape} vs {chunk_vec.shape}"
        )
    return np.concatenate([query_vec, chunk_vec])
