"""Model adapters the server can mount.

An adapter exposes embed(modality, content, layer, template) and
score_yes(query, candidate) plus a descriptor. The shipped ToyAdapter wraps
the primary package's deterministic toy transformer so the server runs with
no ML framework installed; a real video MLLM can be mounted by implementing
the same three methods (embed video content at the requested layer via the
one-word-summary readout, and answer-token likelihoods for scoring).
"""

from __future__ import annotations

from vidtext.backends import MediaSpec, ToyBackend
from vidtext.backends.base import BackendDescriptor, PromptTemplate


class ToyAdapter:
    """Self-contained deterministic model for tests and local runs."""

    def __init__(self, seed: int = 0):
        self._backend = ToyBackend(seed=seed)

    def descriptor(self) -> BackendDescriptor:
        return self._backend.descriptor()

    def embed(self, modality: str, content, layer: int, template: PromptTemplate):
        if modality == "text":
            return self._backend.embed_text(content, template, layer).values
        return self._backend.embed_video(content, template, layer).values

    def score_yes(self, query, candidate) -> float:
        return self._backend.score_yes(query, candidate)


class EmbedOnlyAdapter(ToyAdapter):
    """Toy adapter without the scoring head; exercises 501 handling."""

    def descriptor(self) -> BackendDescriptor:
        d = super().descriptor()
        return BackendDescriptor(
            name=d.name, num_layers=d.num_layers, dim=d.dim,
            supports_layers=d.supports_layers, supports_scoring=False,
        )

    def score_yes(self, query, candidate) -> float:
        raise NotImplementedError("scoring disabled")


def media_from_wire(payload: dict) -> MediaSpec:
    return MediaSpec(
        locator=payload["locator"],
        fps=float(payload["fps"]),
        max_frames=int(payload["max_frames"]),
    )
