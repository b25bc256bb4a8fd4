"""Model providers: detector, captioner, frame embedder, and the answer LLM.

Synthetic providers read per-frame ground truth and are pure functions of
the clip, so every pipeline stage above them is deterministic and testable
without GPUs. Real backends plug in through :class:`HttpModel`, which speaks
a small JSON-over-HTTP protocol, one endpoint per model role:

    POST {base_url}/detect            {"clip": <clip record>}   -> {"text": str}
    POST {base_url}/caption           {"clip": <clip record>}   -> {"text": str}
    POST {base_url}/embed_frame       {"frame": <frame record>} -> {"embedding": [float, ...]}
    POST {base_url}/complete          {"prompt": str}           -> {"text": str}

Bodies are UTF-8 JSON both ways. Model responses are passed through without
rewriting, so a backend that emits the retry sentinel reaches the query
engine byte-for-byte intact.

The rule LLM understands two query shapes, mirroring what the synthetic
world can decide:

* ``Is there a <attributes...> <noun>?``: Yes when some occurrence of the
  noun has all attribute tokens inside its phrase window (the tokens between
  the surrounding articles/object-class tokens). Otherwise the retry
  sentinel when every query token is world vocabulary (more extraction may
  still surface the evidence), else No.
* ``What is the color of the <noun>?``: the color token nearest the noun
  within its phrase window, scanning context lines in order; the retry
  sentinel when no occurrence carries a color.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from dataclasses import dataclass
from typing import Literal

import numpy as np
import requests

from . import corpus as corpus_mod
from .corpus import Clip, Frame, Vocabulary
from .embedding import DEFAULT_CONFIG, EmbeddingConfig, embed_text, tokenize

log = logging.getLogger(__name__)

#: Exact refusal string the query engine watches for. Byte-equality with
#: this constant is the one and only trigger for incremental extraction.
SENTINEL = "Unable to answer query. Please run additional models"

ANSWER_PROMPT_TEMPLATE = (
    "You operate as a chatbot that is supported by a retrieval augmented "
    "generation system. You will utilize the given context and your knowledge "
    "to answer queries. If you are unable to answer a query, your response is "
    '"Unable to answer query. Please run additional models".\n'
    "Context: {context}\n"
    "Query: {query}"
)

QUESTION_PROMPT_TEMPLATE = (
    "Given a context, generate a question for the context. Return the "
    "question without any additional text. Think you are an investigator "
    "querying a textual description of a video.\n"
    "Context: {context}"
)

Role = Literal["detector", "captioner", "frame_embedder", "llm"]
WeightClass = Literal["lightweight", "heavyweight"]

ROLES: tuple[Role, ...] = ("detector", "captioner", "frame_embedder", "llm")

#: Roles whose output becomes a text chunk for a clip.
CLIP_TEXT_ROLES = ("detector", "captioner")

_ROLE_ENDPOINT = {
    "detector": "detect",
    "captioner": "caption",
    "frame_embedder": "embed_frame",
    "llm": "complete",
}


class ModelError(RuntimeError):
    pass


class MissingGroundTruthError(ModelError):
    """A synthetic provider was pointed at a frame without facts."""


class MalformedPromptError(ModelError):
    """Prompt does not carry the Context/Query sections the LLM expects."""


class TransportError(ModelError):
    """HTTP backend unreachable or returned garbage."""


class UnknownModelError(KeyError):
    pass


@dataclass(frozen=True)
class ModelDescriptor:
    """Identity, role, and cost class of one model."""

    model_id: str
    role: Role
    per_frame_cost: float
    weight_class: WeightClass

    def __post_init__(self) -> None:
        if self.per_frame_cost <= 0:
            raise ValueError(
                f"model {self.model_id!r}: per_frame_cost must be positive"
            )
        if self.role not in ROLES:
            raise ValueError(f"model {self.model_id!r}: unknown role {self.role!r}")


@dataclass(frozen=True)
class ModelOutput:
    clip_id: str
    model_id: str
    text: str
    frames_processed: int


class CostLedger:
    """Thread-safe accumulator of simulated model cost.

    Simulated cost of running a model over frames is
    ``per_frame_cost * frames``; the ledger simply sums what providers
    report, keyed by model id.
    """

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._frames: dict[str, int] = {}
        self._cost: dict[str, float] = {}

    def charge(self, model_id: str, frames: int, per_frame_cost: float) -> None:
        with self._lock:
            self._frames[model_id] = self._frames.get(model_id, 0) + frames
            self._cost[model_id] = self._cost.get(model_id, 0.0) + frames * per_frame_cost

    def frames(self, model_id: str | None = None) -> int:
        with self._lock:
            if model_id is not None:
                return self._frames.get(model_id, 0)
            return sum(self._frames.values())

    def cost(self, model_id: str | None = None) -> float:
        with self._lock:
            if model_id is not None:
                return self._cost.get(model_id, 0.0)
            return sum(self._cost.values())

    def snapshot(self) -> dict[str, float]:
        with self._lock:
            return dict(self._cost)


def _require_facts(clip: Clip) -> list[corpus_mod.GroundTruth]:
    facts = []
    for frame in clip.frames:
        if frame.facts is None:
            raise MissingGroundTruthError(
                f"clip {clip.clip_id!r}: frame {frame.frame_id!r} has no ground truth"
            )
        facts.append(frame.facts)
    return facts


class SyntheticDetector:
    """Lightweight object enumerator: sees classes, never attributes."""

    def __init__(self, descriptor: ModelDescriptor, ledger: CostLedger | None = None):
        self.descriptor = descriptor
        self.ledger = ledger

    def run(self, clip: Clip) -> ModelOutput:
        facts = _require_facts(clip)
        classes = sorted({o.object_class for f in facts for o in f.objects})
        if self.ledger is not None:
            self.ledger.charge(
                self.descriptor.model_id, len(clip.frames), self.descriptor.per_frame_cost
            )
        return ModelOutput(
            clip_id=clip.clip_id,
            model_id=self.descriptor.model_id,
            text="objects: " + ", ".join(classes),
            frames_processed=len(clip.frames),
        )


class SyntheticCaptioner:
    """Heavyweight describer: emits the full ground-truth caption per frame."""

    def __init__(self, descriptor: ModelDescriptor, ledger: CostLedger | None = None):
        self.descriptor = descriptor
        self.ledger = ledger

    def run(self, clip: Clip) -> ModelOutput:
        facts = _require_facts(clip)
        caption = " ".join(f.caption for f in facts if f.caption)
        if self.ledger is not None:
            self.ledger.charge(
                self.descriptor.model_id, len(clip.frames), self.descriptor.per_frame_cost
            )
        return ModelOutput(
            clip_id=clip.clip_id,
            model_id=self.descriptor.model_id,
            text=caption,
            frames_processed=len(clip.frames),
        )


class SyntheticFrameEmbedder:
    """Embeds a frame by embedding its ground-truth caption text."""

    def __init__(
        self,
        descriptor: ModelDescriptor,
        config: EmbeddingConfig = DEFAULT_CONFIG,
        ledger: CostLedger | None = None,
    ):
        self.descriptor = descriptor
        self.config = config
        self.ledger = ledger

    def embed_frame(self, frame: Frame) -> np.ndarray:
        if frame.facts is None:
            raise MissingGroundTruthError(
                f"frame {frame.frame_id!r} has no ground truth"
            )
        if self.ledger is not None:
            self.ledger.charge(self.descriptor.model_id, 1, self.descriptor.per_frame_cost)
        return embed_text(frame.facts.caption, self.config)

    def run(self, clip: Clip) -> list[tuple[str, np.ndarray]]:
        return [(frame.frame_id, self.embed_frame(frame)) for frame in clip.frames]


_QUESTION_PREFIX = QUESTION_PROMPT_TEMPLATE.split("{context}")[0]
_ARTICLES = {"a", "an", "the"}


class SyntheticLLM:
    """Rule-based stand-in for the chat model.

    Knows the synthetic world vocabulary (object classes, colors, text
    labels) so it can distinguish "not in this context, but more extraction
    might find it" (the retry sentinel) from a plain "No".
    """

    def __init__(
        self,
        descriptor: ModelDescriptor,
        vocab: Vocabulary,
        ledger: CostLedger | None = None,
    ):
        self.descriptor = descriptor
        self.objects = {t for word in vocab.objects for t in tokenize(word)}
        self.colors = {t for word in vocab.colors for t in tokenize(word)}
        self.labels = {t for word in vocab.text_labels for t in tokenize(word)}
        self.ledger = ledger

    def complete(self, prompt: str) -> str:
        if prompt.startswith(_QUESTION_PREFIX):
            return self._synthesize_question(prompt[len(_QUESTION_PREFIX):])
        context, query = self._split_answer_prompt(prompt)
        return self._answer(context, query)

    @staticmethod
    def _split_answer_prompt(prompt: str) -> tuple[str, str]:
        context_tag = "\nContext: "
        query_tag = "\nQuery: "
        ci = prompt.find(context_tag)
        qi = prompt.rfind(query_tag)
        if ci < 0 or qi < 0 or qi <= ci:
            raise MalformedPromptError("prompt lacks Context/Query sections")
        context = prompt[ci + len(context_tag):qi]
        query = prompt[qi + len(query_tag):]
        return context, query

    def _boundary(self, token: str) -> bool:
        return token in _ARTICLES or token in self.objects

    def _window(self, tokens: list[str], i: int) -> set[str]:
        """Phrase window of occurrence ``i``: tokens inward of the nearest
        article or object-class token on each side."""
        window: set[str] = set()
        j = i - 1
        while j >= 0 and not self._boundary(tokens[j]):
            window.add(tokens[j])
            j -= 1
        j = i + 1
        while j < len(tokens) and not self._boundary(tokens[j]):
            window.add(tokens[j])
            j += 1
        return window

    def _answer(self, context: str, query: str) -> str:
        q = tokenize(query)
        color_prefix = ["what", "is", "the", "color", "of", "the"]
        if q[: len(color_prefix)] == color_prefix and len(q) > len(color_prefix):
            return self._answer_color(context, q[len(color_prefix):])
        if q[:3] in (["is", "there", "a"], ["is", "there", "an"]) and len(q) > 3:
            return self._answer_presence(context, q[3:])
        return "No"

    def _answer_presence(self, context: str, rest: list[str]) -> str:
        noun = rest[-1]
        attrs = set(rest[:-1]) - _ARTICLES
        for line in context.splitlines():
            tokens = tokenize(line)
            for i, token in enumerate(tokens):
                if token == noun and attrs <= self._window(tokens, i):
                    return "Yes"
        known = self.objects | self.colors | self.labels
        if all(t in known for t in rest if t not in _ARTICLES):
            return SENTINEL
        return "No"

    def _answer_color(self, context: str, rest: list[str]) -> str:
        noun = rest[-1]
        for line in context.splitlines():
            tokens = tokenize(line)
            for i, token in enumerate(tokens):
                if token != noun:
                    continue
                color = self._nearest_color(tokens, i)
                if color is not None:
                    return color
        return SENTINEL

    def _nearest_color(self, tokens: list[str], i: int) -> str | None:
        j = i - 1
        while j >= 0 and not self._boundary(tokens[j]):
            if tokens[j] in self.colors:
                return tokens[j]
            j -= 1
        j = i + 1
        while j < len(tokens) and not self._boundary(tokens[j]):
            if tokens[j] in self.colors:
                return tokens[j]
            j += 1
        return None

    def _synthesize_question(self, context: str) -> str:
        for line in context.splitlines():
            tokens = tokenize(line)
            for i, token in enumerate(tokens):
                if token not in self.objects:
                    continue
                color = self._nearest_color(tokens, i)
                if color is not None:
                    return f"Is there a {color} {token}?"
        for line in context.splitlines():
            for token in tokenize(line):
                if token in self.objects:
                    return f"Is there a {token}?"
        return "Is there anything?"


class HttpModel:
    """Adapter forwarding one model role to an HTTP backend.

    Retries transient failures ``retries`` times with a short backoff, then
    raises TransportError. Never rewrites the returned text.
    """

    def __init__(
        self,
        descriptor: ModelDescriptor,
        base_url: str,
        *,
        timeout: float = 10.0,
        retries: int = 2,
        backoff: float = 0.2,
        ledger: CostLedger | None = None,
        session: requests.Session | None = None,
    ):
        self.descriptor = descriptor
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self.ledger = ledger
        self._session = session or requests.Session()

    def _post(self, payload: dict) -> dict:
        url = f"{self.base_url}/{_ROLE_ENDPOINT[self.descriptor.role]}"
        last: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                resp = self._session.post(url, json=payload, timeout=self.timeout)
                resp.raise_for_status()
                return resp.json()
            except (requests.RequestException, ValueError) as exc:
                last = exc
                if attempt < self.retries:
                    time.sleep(self.backoff * (attempt + 1))
        raise TransportError(f"{url}: {last}") from last

    def run(self, clip: Clip) -> ModelOutput:
        body = self._post({"clip": corpus_mod.clip_to_record(clip)})
        if "text" not in body:
            raise TransportError(f"backend response missing 'text': {body}")
        if self.ledger is not None:
            self.ledger.charge(
                self.descriptor.model_id, len(clip.frames), self.descriptor.per_frame_cost
            )
        return ModelOutput(
            clip_id=clip.clip_id,
            model_id=self.descriptor.model_id,
            text=body["text"],
            frames_processed=len(clip.frames),
        )

    def embed_frame(self, frame: Frame) -> np.ndarray:
        body = self._post({"frame": corpus_mod.frame_to_record(frame)})
        if "embedding" not in body:
            raise TransportError(f"backend response missing 'embedding': {body}")
        if self.ledger is not None:
            self.ledger.charge(self.descriptor.model_id, 1, self.descriptor.per_frame_cost)
        return np.asarray(body["embedding"], dtype=np.float64)

    def complete(self, prompt: str) -> str:
        body = self._post({"prompt": prompt})
        if "text" not in body:
            raise TransportError(f"backend response missing 'text': {body}")
        return body["text"]


class ModelRegistry:
    """All models known to one engine instance, plus the shared cost ledger."""

    def __init__(self, ledger: CostLedger | None = None):
        self.ledger = ledger if ledger is not None else CostLedger()
        self._providers: dict[str, object] = {}

    def register(self, provider) -> None:
        model_id = provider.descriptor.model_id
        if model_id in self._providers:
            raise ValueError(f"model {model_id!r} already registered")
        self._providers[model_id] = provider

    def get(self, model_id: str):
        try:
            return self._providers[model_id]
        except KeyError:
            raise UnknownModelError(model_id) from None

    def __contains__(self, model_id: str) -> bool:
        return model_id in self._providers

    def descriptors(self) -> list[ModelDescriptor]:
        return [p.descriptor for p in self._providers.values()]

    def by_role(self, role: Role) -> list:
        return [p for p in self._providers.values() if p.descriptor.role == role]

    def heavyweight_extractors(self) -> list:
        """Clip-text providers that are lazy by default (run only on demand)."""
        return [
            p
            for p in self._providers.values()
            if p.descriptor.role in CLIP_TEXT_ROLES
            and p.descriptor.weight_class == "heavyweight"
        ]

    def lightweight_indexers(self) -> list:
        return [
            p
            for p in self._providers.values()
            if p.descriptor.role in CLIP_TEXT_ROLES
            and p.descriptor.weight_class == "lightweight"
        ]


@dataclass(frozen=True)
class CostConfig:
    """Per-frame simulated cost of each synthetic model, in abstract units
    (think milliseconds per frame on reference hardware)."""

    detector: float = 70.0
    captioner: float = 1500.0
    frame_embedder: float = 10.0


def build_synthetic_registry(
    vocab: Vocabulary,
    config: EmbeddingConfig = DEFAULT_CONFIG,
    costs: CostConfig = CostConfig(),
) -> ModelRegistry:
    """Standard synthetic model lineup: cheap detector and frame embedder,
    expensive captioner, rule LLM."""
    registry = ModelRegistry()
    ledger = registry.ledger
    registry.register(
        SyntheticDetector(
            ModelDescriptor("detector", "detector", costs.detector, "lightweight"),
            ledger,
        )
    )
    registry.register(
        SyntheticCaptioner(
            ModelDescriptor("captioner", "captioner", costs.captioner, "heavyweight"),
            ledger,
        )
    )
    registry.register(
        SyntheticFrameEmbedder(
            ModelDescriptor(
                "frame_embedder", "frame_embedder", costs.frame_embedder, "lightweight"
            ),
            config,
            ledger,
        )
    )
    registry.register(
        SyntheticLLM(
            ModelDescriptor("answerer", "llm", 1.0, "lightweight"), vocab, ledger
        )
    )
    return registry
