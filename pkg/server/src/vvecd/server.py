"""Threaded HTTP server speaking the embed/score wire protocol bit-exactly.

Responses are canonical JSON (sorted keys, floats at 9 significant digits),
matching the client's serialization rules, so golden fixtures round-trip
byte-identically. Handlers are stateless between requests; adapter faults
surface as 500 with an opaque incident id, never a traceback.
"""

from __future__ import annotations

import json
import logging
import threading
import uuid
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from vidtext.backends.base import PromptTemplate, TemplateId
from vidtext.backends.wire import DESCRIPTOR_PATH, EMBED_PATH, SCORE_PATH, canonical_json
from vidtext.errors import ContractViolation

from .adapter import media_from_wire

logger = logging.getLogger(__name__)

EMBED_TEMPLATES_BY_MODALITY = {
    "text": {TemplateId.TEXT_EOL},
    "video": {TemplateId.VIDEO_EOL, TemplateId.VIDEO_EOL_PREFIXED},
}


class RequestError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def _bad(code: str, message: str) -> RequestError:
    return RequestError(400, code, message)


def _require(payload: dict, field: str):
    if field not in payload:
        raise _bad("missing_field", f"missing required field {field!r}")
    return payload[field]


def _template_from(payload: dict) -> PromptTemplate:
    raw = _require(payload, "template_id")
    try:
        return PromptTemplate.get(TemplateId(raw))
    except ValueError:
        raise _bad("unknown_template", f"unknown template_id {raw!r}") from None


def _content_from(payload: dict, what: str):
    modality = _require(payload, "modality")
    if modality == "text":
        return "text", str(_require(payload, "content"))
    if modality == "video":
        media = _require(payload, "media")
        try:
            return "video", media_from_wire(media)
        except (KeyError, TypeError, ValueError, ContractViolation) as exc:
            raise _bad("invalid_field", f"bad media in {what}: {exc}") from None
    raise _bad("invalid_field", f"unknown modality {modality!r} in {what}")


class ProtocolHandler(BaseHTTPRequestHandler):
    server_version = "vvecd/0.1"
    protocol_version = "HTTP/1.1"

    # route handlers

    def _handle_descriptor(self, payload):
        d = self.server.adapter.descriptor()
        return {
            "name": d.name,
            "num_layers": d.num_layers,
            "dim": d.dim,
            "supports_layers": d.supports_layers,
            "supports_scoring": d.supports_scoring,
        }

    def _handle_embed(self, payload):
        template = _template_from(payload)
        modality, content = _content_from(payload, "embed request")
        if template.template_id not in EMBED_TEMPLATES_BY_MODALITY.get(modality, ()):
            raise _bad(
                "invalid_field",
                f"template {template.template_id.value!r} not valid for {modality}",
            )
        layer_raw = _require(payload, "layer")
        desc = self.server.adapter.descriptor()
        if not isinstance(layer_raw, int) or isinstance(layer_raw, bool):
            raise _bad("invalid_field", "layer must be an integer")
        if not 0 <= layer_raw < desc.num_layers:
            raise _bad(
                "layer_out_of_range",
                f"layer {layer_raw} outside 0..{desc.num_layers - 1}",
            )
        values = self.server.adapter.embed(modality, content, layer_raw, template)
        return {
            "embedding": [float(v) for v in values],
            "dim": int(len(values)),
            "layer": layer_raw,
        }

    def _handle_score(self, payload):
        template = _template_from(payload)
        if template.template_id is not TemplateId.YES_NO_RERANK:
            raise _bad("invalid_field", "scoring requires the yes_no_rerank template")
        desc = self.server.adapter.descriptor()
        if not desc.supports_scoring:
            raise RequestError(501, "unsupported_capability", "adapter cannot score pairs")
        q_modality, query = _content_from(dict(_require(payload, "query")), "query")
        c_modality, candidate = _content_from(dict(_require(payload, "candidate")), "candidate")
        if q_modality == "video" and c_modality == "video":
            raise _bad("invalid_field", "score pairs at most one video side with text")
        return {"p_yes": float(self.server.adapter.score_yes(query, candidate))}

    ROUTES = {
        ("GET", DESCRIPTOR_PATH): "_handle_descriptor",
        ("POST", EMBED_PATH): "_handle_embed",
        ("POST", SCORE_PATH): "_handle_score",
    }

    # plumbing

    def _read_payload(self):
        length = int(self.headers.get("Content-Length") or 0)
        body = self.rfile.read(length) if length else b""
        if self.command == "GET":
            return {}
        try:
            payload = json.loads(body) if body else {}
        except json.JSONDecodeError:
            raise _bad("invalid_json", "request body is not valid JSON") from None
        if not isinstance(payload, dict):
            raise _bad("invalid_json", "request body must be a JSON object")
        return payload

    def _dispatch(self):
        handler_name = self.ROUTES.get((self.command, self.path))
        if handler_name is None:
            known_paths = {p for (_, p) in self.ROUTES}
            if self.path in known_paths:
                raise RequestError(405, "method_not_allowed",
                                   f"{self.command} not allowed on {self.path}")
            raise RequestError(404, "not_found", f"no route for {self.path}")
        payload = self._read_payload()
        return getattr(self, handler_name)(payload)

    def _respond(self, status: int, payload: dict):
        body = canonical_json(payload)
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _serve(self):
        try:
            result = self._dispatch()
        except RequestError as err:
            self._respond(err.status, {"error": {"code": err.code, "message": err.message}})
            return
        except ContractViolation as exc:
            self._respond(400, {"error": {"code": "invalid_field", "message": str(exc)}})
            return
        except Exception:
            incident = uuid.uuid4().hex[:12]
            logger.exception("adapter fault (incident %s)", incident)
            self._respond(
                500, {"error": {"code": "internal", "message": f"incident {incident}"}}
            )
            return
        self._respond(200, result)

    def do_GET(self):
        self._serve()

    def do_POST(self):
        self._serve()

    def log_message(self, fmt, *args):
        logger.debug("%s - %s", self.address_string(), fmt % args)


class ProtocolServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, adapter, host: str = "127.0.0.1", port: int = 8091):
        super().__init__((host, port), ProtocolHandler)
        self.adapter = adapter

    @property
    def endpoint(self) -> str:
        host, port = self.server_address[:2]
        return f"http://{host}:{port}"


def serve(model_adapter, host: str = "127.0.0.1", port: int = 8091) -> ProtocolServer:
    """Bind and return the server; call serve_forever() (or run it in a
    thread) to start handling requests."""
    return ProtocolServer(model_adapter, host=host, port=port)


def serve_background(model_adapter, host: str = "127.0.0.1", port: int = 0):
    """Start a daemon-thread server (port 0 picks a free port); returns it."""
    server = serve(model_adapter, host=host, port=port)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server
