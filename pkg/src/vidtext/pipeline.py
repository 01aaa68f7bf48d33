"""End-to-end pipeline orchestration: embed, evaluate, rerank, report.

Artifacts are deterministic: identical configs produce byte-identical
reports and caches (no timestamps, sorted keys, fixed float repr), and every
output embeds the config hash so stale mixing is detectable.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .adapter import apply_adapter, read_adapter
from .backends.base import Backend, MediaSpec, text_eol, video_eol
from .cache import cache_read, cache_write
from .config import RunConfig, resolve_layer
from .datasets import ingest
from .errors import VidtextError
from .rerank import rerank_all
from .retrieval import (
    Direction,
    EvalReport,
    RECALL_KS,
    rank,
    recall_at_k,
    similarity_for_direction,
)
from .types import DatasetManifest, Embedding, RankedList


@dataclass
class PipelineResult:
    config_hash: str
    stage1: EvalReport
    stage2: EvalReport | None = None
    artifacts: dict[str, str] = field(default_factory=dict)


class StageError(VidtextError):
    """Wraps a failure with the pipeline stage it happened in."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


def _embed_cache_key(cfg: RunConfig, layer: int, modality: str) -> str:
    blob = json.dumps(
        {
            "backend": [cfg.backend.kind, cfg.backend.seed, cfg.backend.endpoint],
            "dataset": hashlib.sha256(Path(cfg.dataset).read_bytes()).hexdigest(),
            "layer": layer,
            "prompt_prefixed": cfg.prompt_prefixed,
            "paragraph": cfg.paragraph,
            "fps": cfg.fps,
            "max_frames": cfg.max_frames,
            "modality": modality,
        },
        sort_keys=True,
    ).encode()
    return hashlib.sha256(blob).hexdigest()[:20]


def embed_corpus(
    backend: Backend,
    manifest: DatasetManifest,
    cfg: RunConfig,
    layer: int,
    cache_dir=None,
) -> tuple[list[Embedding], list[Embedding]]:
    """Embed all captions and videos at one layer, with optional disk cache."""
    cap_path = vid_path = None
    if cache_dir is not None:
        cache_dir = Path(cache_dir)
        cache_dir.mkdir(parents=True, exist_ok=True)
        cap_path = cache_dir / f"text-{_embed_cache_key(cfg, layer, 'text')}.vvec"
        vid_path = cache_dir / f"video-{_embed_cache_key(cfg, layer, 'video')}.vvec"

    if cap_path and cap_path.exists():
        captions = cache_read(cap_path)
    else:
        captions = [
            backend.embed_text(text, text_eol(), layer, item_id=cid)
            for cid, _, text in manifest.caption_entries()
        ]
        if cap_path:
            cache_write(cap_path, captions)

    if vid_path and vid_path.exists():
        videos = cache_read(vid_path)
    else:
        template = video_eol(prefixed=cfg.prompt_prefixed)
        videos = [
            backend.embed_video(
                MediaSpec(item.media_ref, fps=cfg.fps, max_frames=cfg.max_frames),
                template,
                layer,
                item_id=item.item_id,
            )
            for item in manifest.items
        ]
        if vid_path:
            cache_write(vid_path, videos)
    return captions, videos


def _report_from_ranked(
    ranked: list[RankedList], positives, direction: Direction, calibrated: bool
) -> EvalReport:
    return EvalReport(
        direction=direction,
        recall_at={k: recall_at_k(ranked, positives, k) for k in RECALL_KS},
        n_queries=len(ranked),
        calibrated=calibrated,
    )


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def run_pipeline(cfg: RunConfig, backend: Backend | None = None) -> PipelineResult:
    cfg.validate()
    chash = cfg.config_hash()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    if backend is None:
        try:
            backend = cfg.backend.build()
        except VidtextError:
            raise
        except Exception as exc:
            raise StageError("backend", exc) from exc

    try:
        manifest = ingest(cfg.dataset, paragraph=cfg.paragraph)
    except Exception as exc:
        raise StageError("ingest", exc) from exc

    desc = backend.descriptor()
    layer = resolve_layer(cfg.layer, desc.num_layers)

    try:
        captions, videos = embed_corpus(backend, manifest, cfg, layer, cache_dir=out / "cache")
    except Exception as exc:
        raise StageError("embed", exc) from exc

    if cfg.adapter_path:
        params = read_adapter(cfg.adapter_path)
        captions = [apply_adapter(params, e) for e in captions]
        videos = [apply_adapter(params, e) for e in videos]

    try:
        m, positives = similarity_for_direction(manifest, captions, videos, cfg.direction)
        calibrated = cfg.calibration.enabled
        if calibrated:
            from .retrieval import dual_softmax_calibrate

            m = dual_softmax_calibrate(m, cfg.calibration.temperature_for(cfg.direction))
        ranked = rank(m)
        stage1 = _report_from_ranked(ranked, positives, cfg.direction, calibrated)
    except Exception as exc:
        raise StageError("evaluate", exc) from exc

    result = PipelineResult(config_hash=chash, stage1=stage1)

    stage2_ranked = None
    if cfg.rerank is not None:
        caption_text = {cid: text for cid, _, text in manifest.caption_entries()}
        media_by_id = {
            item.item_id: MediaSpec(item.media_ref, fps=cfg.fps, max_frames=cfg.max_frames)
            for item in manifest.items
        }
        if cfg.direction is Direction.T2V:
            query_content = lambda qid: caption_text[qid]
            candidate_content = lambda cid: media_by_id[cid]
        else:
            query_content = lambda qid: media_by_id[qid]
            candidate_content = lambda cid: caption_text[cid]
        try:
            stage2_ranked = rerank_all(
                ranked,
                cfg.rerank,
                backend,
                query_content,
                candidate_content,
                progress_path=out / f"rerank-progress-{chash}.jsonl",
            )
            result.stage2 = _report_from_ranked(
                stage2_ranked, positives, cfg.direction, calibrated
            )
        except VidtextError:
            raise
        except Exception as exc:
            raise StageError("rerank", exc) from exc

    # artifacts
    stage1_path = out / "report-stage1.json"
    _write_json(stage1_path, {"config_hash": chash, **stage1.to_json_dict()})
    table = stage1.format_table()
    artifacts = {"report-stage1": str(stage1_path)}
    if result.stage2 is not None:
        stage2_path = out / "report-stage2.json"
        _write_json(stage2_path, {"config_hash": chash, **result.stage2.to_json_dict()})
        artifacts["report-stage2"] = str(stage2_path)
        table += result.stage2.format_table()
    table_path = out / "report.txt"
    table_path.write_text(table + f"# config_hash={chash}\n")
    artifacts["report-table"] = str(table_path)

    manifest_path = out / "artifacts.json"
    listing = {
        "config_hash": chash,
        "files": {
            name: hashlib.sha256(Path(p).read_bytes()).hexdigest()
            for name, p in sorted(artifacts.items())
        },
    }
    _write_json(manifest_path, listing)
    artifacts["artifacts"] = str(manifest_path)
    result.artifacts = artifacts
    return result
