"""Canonical JSON wire encoding shared by the remote client and any server.

Requests must be byte-identical for identical inputs, so serialization is
fully pinned: sorted keys, no whitespace, floats at 9 significant digits
(enough to round-trip any float32 exactly).
"""

from __future__ import annotations

import json
import math

from ..errors import ContractViolation

EMBED_PATH = "/v1/embed"
SCORE_PATH = "/v1/score"
DESCRIPTOR_PATH = "/v1/descriptor"


def format_float(x: float) -> str:
    if not math.isfinite(x):
        raise ContractViolation(f"cannot serialize non-finite float {x!r}")
    text = f"{x:.9g}"
    # keep a float marker so the value parses back as float, not int
    if "e" not in text and "." not in text:
        text += ".0"
    return text


def canonical_json(obj) -> bytes:
    return _encode(obj).encode("utf-8")


def _encode(obj) -> str:
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        items = sorted(obj.items())
        return "{" + ",".join(f"{json.dumps(k)}:{_encode(v)}" for k, v in items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_encode(v) for v in obj) + "]"
    # numpy scalars and arrays reach here
    if hasattr(obj, "item") and not hasattr(obj, "__len__"):
        return _encode(obj.item())
    if hasattr(obj, "tolist"):
        return _encode(obj.tolist())
    raise ContractViolation(f"cannot canonically serialize {type(obj).__name__}")


def media_payload(media) -> dict:
    return {
        "locator": media.locator,
        "fps": float(media.fps),
        "max_frames": int(media.max_frames),
    }


def embed_request(modality: str, content: str, template_id: str, layer: int,
                  media=None) -> dict:
    body = {
        "modality": modality,
        "content": content,
        "template_id": template_id,
        "layer": int(layer),
    }
    if media is not None:
        body["media"] = media_payload(media)
    return body


def content_payload(value) -> dict:
    """Wire form of a scorer operand: text content or a media reference."""
    from .base import MediaSpec  # local import to avoid cycle at module load

    if isinstance(value, MediaSpec):
        return {"modality": "video", "media": media_payload(value)}
    return {"modality": "text", "content": str(value)}


def score_request(query, candidate, template_id: str = "yes_no_rerank") -> dict:
    return {
        "template_id": template_id,
        "query": content_payload(query),
        "candidate": content_payload(candidate),
    }
