"""Layer-sweep harness: zero-shot Recall@K per readout layer.

No training happens here; the sweeper embeds every query and candidate at
each requested layer and evaluates. Embeddings are memoized per
(layer, template, modality, item) so repeated sweeps against the same
backend issue zero additional backend calls.
"""

from __future__ import annotations

import json
from pathlib import Path

from .backends.base import Backend, MediaSpec, TemplateId, text_eol, video_eol
from .errors import CapabilityError
from .retrieval import CalibrationConfig, Direction, EvalReport, evaluate
from .types import DatasetManifest, Embedding, Modality


class LayerSweeper:
    """Sweeps readout layers of one backend over a paired corpus."""

    def __init__(self, backend: Backend, fps: float = 2.0, max_frames: int = 180):
        self.backend = backend
        self.fps = fps
        self.max_frames = max_frames
        self._cache: dict[tuple, Embedding] = {}

    def _text_embedding(self, layer: int, item_key: str, content: str) -> Embedding:
        key = (layer, TemplateId.TEXT_EOL.value, Modality.TEXT.value, item_key)
        if key not in self._cache:
            self._cache[key] = self.backend.embed_text(
                content, text_eol(), layer, item_id=item_key
            )
        return self._cache[key]

    def _video_embedding(
        self, layer: int, item_key: str, locator: str, prefixed: bool
    ) -> Embedding:
        template = video_eol(prefixed=prefixed)
        key = (layer, template.template_id.value, Modality.VIDEO.value, item_key)
        if key not in self._cache:
            media = MediaSpec(locator, fps=self.fps, max_frames=self.max_frames)
            self._cache[key] = self.backend.embed_video(
                media, template, layer, item_id=item_key
            )
        return self._cache[key]

    def embeddings_for(
        self, manifest: DatasetManifest, layer: int, prefixed_prompt: bool = False
    ) -> tuple[list[Embedding], list[Embedding]]:
        captions = [
            self._text_embedding(layer, cid, text)
            for cid, _, text in manifest.caption_entries()
        ]
        videos = [
            self._video_embedding(layer, item.item_id, item.media_ref, prefixed_prompt)
            for item in manifest.items
        ]
        return captions, videos

    def sweep(
        self,
        manifest: DatasetManifest,
        layers: list[int],
        direction: Direction = Direction.T2V,
        prefixed_prompt: bool = False,
        calibration: CalibrationConfig | None = None,
    ) -> list[tuple[int, EvalReport]]:
        desc = self.backend.descriptor()
        bad = [l for l in layers if not (0 <= l < desc.num_layers)]
        if bad:
            raise CapabilityError(
                f"backend {desc.name} has layers 0..{desc.num_layers - 1}, requested {bad}"
            )
        out = []
        for layer in layers:
            caps, vids = self.embeddings_for(manifest, layer, prefixed_prompt)
            report = evaluate(manifest, caps, vids, direction, calibration)
            out.append((layer, report))
        return out


def sweep_to_csv(rows: list[tuple[int, EvalReport]], path=None) -> str:
    lines = ["layer,r1,r5,r10"]
    for layer, report in rows:
        lines.append(f"{layer}," + ",".join(report.csv_fields()))
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def sweep_to_json(rows: list[tuple[int, EvalReport]], path=None) -> str:
    payload = [
        {"layer": layer, **report.to_json_dict()} for layer, report in rows
    ]
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text
