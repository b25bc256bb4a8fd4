"""Shared fixtures and hypothesis profiles for the test suite."""

import hypothesis
import numpy as np
import pytest

from lazyrag.corpus import DEFAULT_VOCAB, gen_synthetic
from lazyrag.embedding import EmbeddingConfig
from lazyrag.models import build_synthetic_registry

np.seterr(all="warn")

hypothesis.settings.register_profile("fast", max_examples=25, deadline=None)
hypothesis.settings.register_profile("thorough", max_examples=200, deadline=None)
hypothesis.settings.load_profile("fast")


@pytest.fixture
def small_corpus():
    # 80 clips: covers every (object, color) pair once in the first 72 clips
    return gen_synthetic(seed=3, n_clips=80)


@pytest.fixture
def tiny_corpus():
    return gen_synthetic(seed=5, n_clips=6)


@pytest.fixture
def emb_cfg():
    return EmbeddingConfig()


@pytest.fixture
def registry(small_corpus, emb_cfg):
    return build_synthetic_registry(small_corpus.vocabulary(), emb_cfg)


@pytest.fixture
def tiny_registry(tiny_corpus, emb_cfg):
    return build_synthetic_registry(tiny_corpus.vocabulary(), emb_cfg)
