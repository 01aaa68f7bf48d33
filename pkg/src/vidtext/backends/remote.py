"""HTTP client for the embed/score wire protocol.

Transport faults retry with exponential backoff (3 attempts, 200 ms base)
before surfacing a TransportError; evaluation jobs are long and must not die
on a transient blip, nor hang forever. The transport is injectable so tests
exercise the client without sockets.
"""

from __future__ import annotations

import json
import threading
import time
import urllib.error
import urllib.request

import numpy as np

from ..errors import CapabilityError, ContractViolation, TransportError
from ..types import Embedding, Modality
from .base import Backend, BackendDescriptor, MediaSpec, PromptTemplate
from . import wire

RETRIES = 3
BACKOFF_BASE_S = 0.2
DEFAULT_MAX_IN_FLIGHT = 8


def urllib_transport(method: str, url: str, body: bytes | None):
    """Default transport: (status, response bytes); raises OSError on failure."""
    req = urllib.request.Request(url, data=body, method=method)
    if body is not None:
        req.add_header("Content-Type", "application/json")
    try:
        with urllib.request.urlopen(req, timeout=60) as resp:
            return resp.status, resp.read()
    except urllib.error.HTTPError as err:
        return err.code, err.read()


class RemoteBackend(Backend):
    """Speaks the wire protocol to a model server."""

    def __init__(
        self,
        endpoint: str,
        transport=None,
        max_in_flight: int = DEFAULT_MAX_IN_FLIGHT,
        retries: int = RETRIES,
        backoff_base_s: float = BACKOFF_BASE_S,
        sleeper=time.sleep,
    ):
        self.endpoint = endpoint.rstrip("/")
        self._transport = transport or urllib_transport
        self._sem = threading.Semaphore(max_in_flight)
        self._retries = retries
        self._backoff = backoff_base_s
        self._sleep = sleeper
        self._descriptor: BackendDescriptor | None = None

    # transport with retry

    def _request(self, method: str, path: str, payload=None) -> dict:
        body = wire.canonical_json(payload) if payload is not None else None
        url = self.endpoint + path
        last_exc, last_status = None, None
        for attempt in range(self._retries):
            try:
                with self._sem:
                    status, data = self._transport(method, url, body)
            except OSError as exc:
                last_exc = exc
                self._sleep(self._backoff * (2**attempt))
                continue
            if status >= 500 and status != 501:  # 501 is a capability gap, not transient
                last_status = status
                self._sleep(self._backoff * (2**attempt))
                continue
            return self._handle(status, data, path)
        raise TransportError(
            f"{method} {url} failed after {self._retries} attempts"
            + (f" (last status {last_status})" if last_status else f": {last_exc}"),
            attempts=self._retries,
            last_status=last_status,
        )

    @staticmethod
    def _handle(status: int, data: bytes, path: str) -> dict:
        try:
            parsed = json.loads(data) if data else {}
        except json.JSONDecodeError:
            raise TransportError(f"{path}: non-JSON response (status {status})") from None
        if status == 200:
            return parsed
        err = parsed.get("error", {}) if isinstance(parsed, dict) else {}
        code = err.get("code", "unknown")
        message = err.get("message", "")
        if status == 501:
            raise CapabilityError(f"{path}: {code}: {message}")
        raise ContractViolation(f"{path}: server rejected request ({code}: {message})")

    # Backend API

    def descriptor(self) -> BackendDescriptor:
        if self._descriptor is None:
            d = self._request("GET", wire.DESCRIPTOR_PATH)
            self._descriptor = BackendDescriptor(
                name=d["name"],
                num_layers=int(d["num_layers"]),
                dim=int(d["dim"]),
                supports_layers=bool(d["supports_layers"]),
                supports_scoring=bool(d["supports_scoring"]),
            )
        return self._descriptor

    def _parse_embedding(self, payload: dict, modality: Modality, item_id: str) -> Embedding:
        values = np.asarray(payload["embedding"], dtype=np.float32)
        if int(payload["dim"]) != values.shape[0]:
            raise TransportError(
                f"server dim {payload['dim']} does not match vector length {values.shape[0]}"
            )
        return Embedding(
            values=values,
            layer=int(payload["layer"]),
            modality=modality,
            item_id=item_id,
        )

    def embed_text(self, text, template=None, layer=None, item_id=None) -> Embedding:
        template, layer = self._check_embed_args(template, layer, video=False)
        payload = self._request(
            "POST",
            wire.EMBED_PATH,
            wire.embed_request("text", str(text), template.template_id.value, layer),
        )
        return self._parse_embedding(
            payload, Modality.TEXT, item_id if item_id is not None else str(text)
        )

    def embed_video(self, media: MediaSpec, template=None, layer=None, item_id=None) -> Embedding:
        template, layer = self._check_embed_args(template, layer, video=True)
        payload = self._request(
            "POST",
            wire.EMBED_PATH,
            wire.embed_request("video", "", template.template_id.value, layer, media=media),
        )
        return self._parse_embedding(
            payload, Modality.VIDEO, item_id if item_id is not None else media.locator
        )

    def score_yes(self, query, candidate, template: PromptTemplate | None = None) -> float:
        template = self._check_score_args(template, query, candidate)
        payload = self._request(
            "POST",
            wire.SCORE_PATH,
            wire.score_request(query, candidate, template.template_id.value),
        )
        p = float(payload["p_yes"])
        if not (0.0 <= p <= 1.0):
            raise TransportError(f"server returned p_yes outside [0,1]: {p}")
        return p
