"""Hash-expansion mock backend: O(1) deterministic fixtures, no model at all.

Documented rules (golden fixtures are generated from these and must never
drift):

  embedding = hash_stream(combine(seed, fnv1a64(template_id), fnv1a64(content),
                                  layer), dim)
  p_yes     = unit_float from combine(seed, fnv1a64("score"),
                                      fnv1a64(query), fnv1a64(candidate))

where `content` is the raw text for text inputs and MediaSpec.canonical()
for video inputs.
"""

from __future__ import annotations

import numpy as np

from ..types import Embedding, Modality
from .base import Backend, BackendDescriptor, MediaSpec, PromptTemplate
from .hashing import combine, fnv1a64, hash_stream, splitmix64, unit_float


def _canonical(content) -> str:
    return content.canonical() if isinstance(content, MediaSpec) else str(content)


class MockBackend(Backend):
    def __init__(self, seed: int = 0, dim: int = 32, num_layers: int = 4, name: str = "mock"):
        self.seed = seed
        self._descriptor = BackendDescriptor(
            name=name, num_layers=num_layers, dim=dim,
            supports_layers=True, supports_scoring=True,
        )

    def descriptor(self) -> BackendDescriptor:
        return self._descriptor

    def _expand(self, template: PromptTemplate, content: str, layer: int) -> np.ndarray:
        seed = combine(
            self.seed,
            fnv1a64(template.template_id.value),
            fnv1a64(content),
            layer,
        )
        return hash_stream(seed, self._descriptor.dim).astype(np.float32)

    def embed_text(self, text, template=None, layer=None, item_id=None) -> Embedding:
        template, layer = self._check_embed_args(template, layer, video=False)
        return Embedding(
            values=self._expand(template, str(text), layer),
            layer=layer,
            modality=Modality.TEXT,
            item_id=item_id if item_id is not None else str(text),
        )

    def embed_video(self, media, template=None, layer=None, item_id=None) -> Embedding:
        template, layer = self._check_embed_args(template, layer, video=True)
        return Embedding(
            values=self._expand(template, media.canonical(), layer),
            layer=layer,
            modality=Modality.VIDEO,
            item_id=item_id if item_id is not None else media.locator,
        )

    def score_yes(self, query, candidate, template=None) -> float:
        self._check_score_args(template, query, candidate)
        seed = combine(
            self.seed,
            fnv1a64("score"),
            fnv1a64(_canonical(query)),
            fnv1a64(_canonical(candidate)),
        )
        _, z = splitmix64(seed)
        return unit_float(z)
