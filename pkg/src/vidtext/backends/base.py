"""The model-access contract: prompting, media specs, and the Backend ABC.

A backend knows how to read out embeddings at a chosen layer under the
one-word summarization prompts, and how to score a (query, candidate) pair
by the probability of an affirmative answer. Everything above this module
is backend-agnostic.
"""

from __future__ import annotations

import abc
import enum
import threading
from dataclasses import dataclass

from ..errors import CapabilityError, ContractViolation
from ..types import Embedding
from ..validation import check_layer_index, check_positive, check_positive_int

DEFAULT_FPS = 2.0
DEFAULT_MAX_FRAMES = 180

EMB_MARKER = "<emb>"


class TemplateId(enum.Enum):
    TEXT_EOL = "text_eol"
    VIDEO_EOL = "video_eol"
    VIDEO_EOL_PREFIXED = "video_eol_prefixed"
    YES_NO_RERANK = "yes_no_rerank"


_VIDEO_PREFIX = (
    "Recover the main subject or subjects, appearance and setting, "
    "and main activity in the video"
)

_BODIES = {
    TemplateId.TEXT_EOL: "{content}\nSummarize above sentence in one word: ",
    TemplateId.VIDEO_EOL: "{content}\nSummarize above video in one word: ",
    TemplateId.VIDEO_EOL_PREFIXED: (
        _VIDEO_PREFIX + "\n{content}\nSummarize above video in one word: "
    ),
    TemplateId.YES_NO_RERANK: (
        "Query: {query}\nCandidate: {candidate}\n"
        "Does the candidate match the query? "
        "Respond in a single word - Yes or No."
    ),
}

EMBED_TEMPLATES = (
    TemplateId.TEXT_EOL,
    TemplateId.VIDEO_EOL,
    TemplateId.VIDEO_EOL_PREFIXED,
)


@dataclass(frozen=True)
class PromptTemplate:
    """A fixed prompt body with {content} or {query}/{candidate} placeholders.

    Embedding templates are completed by the backend's emb-token marker at
    use time; the marker string is backend-specific.
    """

    template_id: TemplateId
    body: str

    @classmethod
    def get(cls, template_id: TemplateId) -> "PromptTemplate":
        return cls(template_id=template_id, body=_BODIES[template_id])

    @classmethod
    def from_wire_id(cls, wire_id: str) -> "PromptTemplate":
        try:
            return cls.get(TemplateId(wire_id))
        except ValueError:
            raise ContractViolation(f"unknown template_id {wire_id!r}") from None

    def render(self, content: str) -> str:
        # str.replace, not str.format: content may contain braces
        return self.body.replace("{content}", content)

    def render_pair(self, query: str, candidate: str) -> str:
        return self.body.replace("{query}", query).replace("{candidate}", candidate)


def text_eol() -> PromptTemplate:
    return PromptTemplate.get(TemplateId.TEXT_EOL)


def video_eol(prefixed: bool = False) -> PromptTemplate:
    tid = TemplateId.VIDEO_EOL_PREFIXED if prefixed else TemplateId.VIDEO_EOL
    return PromptTemplate.get(tid)


def yes_no_rerank() -> PromptTemplate:
    return PromptTemplate.get(TemplateId.YES_NO_RERANK)


@dataclass(frozen=True)
class MediaSpec:
    """Opaque media locator plus frame-sampling parameters."""

    locator: str
    fps: float = DEFAULT_FPS
    max_frames: int = DEFAULT_MAX_FRAMES

    def __post_init__(self):
        check_positive(self.fps, "fps")
        check_positive_int(self.max_frames, "max_frames")

    def canonical(self) -> str:
        """Stable string form, used by hash-based backends and cache keys."""
        return f"{self.locator}|fps={self.fps:.6g}|max_frames={self.max_frames}"


@dataclass(frozen=True)
class BackendDescriptor:
    name: str
    num_layers: int
    dim: int
    supports_layers: bool = True
    supports_scoring: bool = True

    def __post_init__(self):
        check_positive_int(self.num_layers, "num_layers")
        check_positive_int(self.dim, "dim")


class Backend(abc.ABC):
    """Deterministic model access; all methods are pure for a fixed seed."""

    emb_marker: str = EMB_MARKER

    @abc.abstractmethod
    def descriptor(self) -> BackendDescriptor:
        ...

    @abc.abstractmethod
    def embed_text(
        self,
        text: str,
        template: PromptTemplate | None = None,
        layer: int | None = None,
        item_id: str | None = None,
    ) -> Embedding:
        ...

    @abc.abstractmethod
    def embed_video(
        self,
        media: MediaSpec,
        template: PromptTemplate | None = None,
        layer: int | None = None,
        item_id: str | None = None,
    ) -> Embedding:
        ...

    @abc.abstractmethod
    def score_yes(self, query, candidate, template: PromptTemplate | None = None) -> float:
        ...

    # shared argument checking

    def _check_embed_args(
        self, template: PromptTemplate | None, layer: int | None, video: bool
    ) -> tuple[PromptTemplate, int]:
        desc = self.descriptor()
        if template is None:
            template = video_eol() if video else text_eol()
        allowed = (
            (TemplateId.VIDEO_EOL, TemplateId.VIDEO_EOL_PREFIXED)
            if video
            else (TemplateId.TEXT_EOL,)
        )
        if template.template_id not in allowed:
            raise ContractViolation(
                f"template {template.template_id.value} not valid for "
                f"{'video' if video else 'text'} embedding"
            )
        if layer is None:
            layer = desc.num_layers - 1
        layer = check_layer_index(layer, desc.num_layers)
        if layer != desc.num_layers - 1 and not desc.supports_layers:
            raise CapabilityError(f"backend {desc.name} does not support layer selection")
        return template, layer

    def _check_score_args(
        self, template: PromptTemplate | None, query=None, candidate=None
    ) -> PromptTemplate:
        desc = self.descriptor()
        if not desc.supports_scoring:
            raise CapabilityError(f"backend {desc.name} does not support pair scoring")
        if isinstance(query, MediaSpec) and isinstance(candidate, MediaSpec):
            raise ContractViolation(
                "score_yes pairs one media side with text (or text with text), "
                "not media with media"
            )
        if template is None:
            template = yes_no_rerank()
        if template.template_id is not TemplateId.YES_NO_RERANK:
            raise ContractViolation("score_yes requires the yes/no rerank template")
        return template


class CountingBackend(Backend):
    """Wrapper that counts backend calls; used to observe cache-hit behavior."""

    def __init__(self, inner: Backend):
        self.inner = inner
        self.emb_marker = inner.emb_marker
        self._lock = threading.Lock()
        self.embed_calls = 0
        self.score_calls = 0

    def reset(self) -> None:
        with self._lock:
            self.embed_calls = 0
            self.score_calls = 0

    def descriptor(self) -> BackendDescriptor:
        return self.inner.descriptor()

    def embed_text(self, text, template=None, layer=None, item_id=None) -> Embedding:
        with self._lock:
            self.embed_calls += 1
        return self.inner.embed_text(text, template, layer, item_id)

    def embed_video(self, media, template=None, layer=None, item_id=None) -> Embedding:
        with self._lock:
            self.embed_calls += 1
        return self.inner.embed_video(media, template, layer, item_id)

    def score_yes(self, query, candidate, template=None) -> float:
        with self._lock:
            self.score_calls += 1
        return self.inner.score_yes(query, candidate, template)
