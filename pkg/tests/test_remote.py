"""Remote client tests against an in-process fake transport."""

import json

import numpy as np
import pytest

from vidtext.backends import MediaSpec, MockBackend, text_eol, video_eol
from vidtext.backends.remote import RemoteBackend
from vidtext.backends.wire import canonical_json, format_float
from vidtext.errors import CapabilityError, ContractViolation, TransportError

DESCRIPTOR = {"name": "fake", "num_layers": 4, "dim": 8,
              "supports_layers": True, "supports_scoring": True}


class FakeTransport:
    """Serves the protocol from a local mock backend; records requests."""

    def __init__(self, fail_times=0, fail_status=None):
        self.backend = MockBackend(seed=0, dim=8, num_layers=4)
        self.requests = []
        self.fail_times = fail_times
        self.fail_status = fail_status

    def __call__(self, method, url, body):
        self.requests.append((method, url, body))
        if self.fail_times > 0:
            self.fail_times -= 1
            if self.fail_status:
                return self.fail_status, b'{"error":{"code":"boom","message":"transient"}}'
            raise OSError("connection refused")
        path = url.split("http://test", 1)[1]
        if path == "/v1/descriptor":
            return 200, canonical_json(DESCRIPTOR)
        payload = json.loads(body)
        if path == "/v1/embed":
            if payload["modality"] == "text":
                e = self.backend.embed_text(payload["content"], text_eol(), payload["layer"])
            else:
                m = payload["media"]
                e = self.backend.embed_video(
                    MediaSpec(m["locator"], m["fps"], m["max_frames"]),
                    video_eol(), payload["layer"],
                )
            return 200, canonical_json(
                {"embedding": [float(v) for v in e.values], "dim": e.dim, "layer": e.layer}
            )
        if path == "/v1/score":
            def content(side):
                if side["modality"] == "video":
                    m = side["media"]
                    return MediaSpec(m["locator"], m["fps"], m["max_frames"])
                return side["content"]
            p = self.backend.score_yes(content(payload["query"]), content(payload["candidate"]))
            return 200, canonical_json({"p_yes": p})
        return 404, b'{"error":{"code":"not_found","message":""}}'


@pytest.fixture()
def remote():
    transport = FakeTransport()
    backend = RemoteBackend("http://test", transport=transport, sleeper=lambda s: None)
    return backend, transport


def test_descriptor(remote):
    backend, _ = remote
    d = backend.descriptor()
    assert d.num_layers == 4 and d.dim == 8


def test_embed_text_round_trip(remote):
    backend, transport = remote
    e = backend.embed_text("a cat", text_eol(), 1)
    assert e.dim == 8 and e.layer == 1
    oracle = transport.backend.embed_text("a cat", text_eol(), 1)
    assert np.allclose(e.values, oracle.values, atol=2e-7)  # 9-sig-digit wire floats


def test_requests_byte_identical(remote):
    backend, transport = remote
    backend.embed_text("same input", text_eol(), 2)
    backend.embed_text("same input", text_eol(), 2)
    bodies = [b for (_, u, b) in transport.requests if u.endswith("/v1/embed")]
    assert len(bodies) == 2 and bodies[0] == bodies[1]


def test_request_shape_matches_protocol(remote):
    backend, transport = remote
    backend.embed_video(MediaSpec("vid://x", fps=2.0, max_frames=4), video_eol(), 0)
    body = json.loads([b for (_, u, b) in transport.requests if u.endswith("/v1/embed")][0])
    assert body == {
        "content": "",
        "layer": 0,
        "media": {"fps": 2.0, "locator": "vid://x", "max_frames": 4},
        "modality": "video",
        "template_id": "video_eol",
    }


def test_score_round_trip(remote):
    backend, transport = remote
    m = MediaSpec("vid://x", fps=2.0, max_frames=4)
    p = backend.score_yes("a cat", m)
    assert p == pytest.approx(transport.backend.score_yes("a cat", m), abs=1e-9)


def test_retry_then_success():
    transport = FakeTransport(fail_times=2)
    sleeps = []
    backend = RemoteBackend("http://test", transport=transport, sleeper=sleeps.append)
    d = backend.descriptor()
    assert d.name == "fake"
    assert sleeps == [0.2, 0.4]  # exponential backoff, base 200 ms


def test_retry_exhaustion_is_transport_error():
    transport = FakeTransport(fail_times=99)
    backend = RemoteBackend("http://test", transport=transport, sleeper=lambda s: None)
    with pytest.raises(TransportError) as exc_info:
        backend.descriptor()
    assert exc_info.value.attempts == 3


def test_5xx_retries_then_surfaces():
    transport = FakeTransport(fail_times=99, fail_status=503)
    backend = RemoteBackend("http://test", transport=transport, sleeper=lambda s: None)
    with pytest.raises(TransportError) as exc_info:
        backend.descriptor()
    assert exc_info.value.last_status == 503


def test_400_maps_to_contract_error():
    def transport(method, url, body):
        if url.endswith("/v1/descriptor"):
            return 200, canonical_json(DESCRIPTOR)
        return 400, b'{"error":{"code":"missing_field","message":"template_id"}}'

    backend = RemoteBackend("http://test", transport=transport, sleeper=lambda s: None)
    with pytest.raises(ContractViolation, match="missing_field"):
        backend.embed_text("x", text_eol(), 0)


def test_501_maps_to_capability_error():
    def transport(method, url, body):
        if url.endswith("/v1/descriptor"):
            return 200, canonical_json(DESCRIPTOR)
        return 501, b'{"error":{"code":"unsupported_capability","message":"no scoring"}}'

    backend = RemoteBackend("http://test", transport=transport, sleeper=lambda s: None)
    with pytest.raises(CapabilityError):
        backend.score_yes("a", "b")


def test_out_of_range_p_yes_rejected():
    def transport(method, url, body):
        if url.endswith("/v1/descriptor"):
            return 200, canonical_json(DESCRIPTOR)
        return 200, b'{"p_yes":1.5}'

    backend = RemoteBackend("http://test", transport=transport, sleeper=lambda s: None)
    with pytest.raises(TransportError):
        backend.score_yes("a", "b")


class TestCanonicalJson:
    def test_sorted_keys_no_whitespace(self):
        assert canonical_json({"b": 1, "a": [1, 2]}) == b'{"a":[1,2],"b":1}'

    def test_float_formatting(self):
        assert format_float(0.25) == "0.25"
        assert format_float(2.0) == "2.0"
        assert format_float(1.0 / 3.0) == "0.333333333"

    def test_float32_round_trips_through_9_digits(self):
        rng = np.random.default_rng(0)
        vals = rng.standard_normal(500).astype(np.float32)
        for v in vals:
            assert np.float32(float(format_float(float(v)))) == v

    def test_non_finite_rejected(self):
        with pytest.raises(ContractViolation):
            format_float(float("nan"))
