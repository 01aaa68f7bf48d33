"""Protocol conformance: golden fixtures round-trip byte-identically and the
malformed-request suite returns the documented status codes."""

import json
import urllib.error
import urllib.request
from pathlib import Path

import pytest

from vvecd import EmbedOnlyAdapter, ToyAdapter, serve_background

FIXTURES = sorted((Path(__file__).resolve().parents[2] / "fixtures" / "wire").glob("*.json"))


@pytest.fixture(scope="module")
def server():
    srv = serve_background(ToyAdapter(seed=0))
    yield srv
    srv.shutdown()


def http(endpoint, method, path, body=None):
    req = urllib.request.Request(endpoint + path, data=body, method=method)
    if body is not None:
        req.add_header("Content-Type", "application/json")
    try:
        with urllib.request.urlopen(req, timeout=10) as resp:
            return resp.status, resp.read()
    except urllib.error.HTTPError as err:
        return err.code, err.read()


def test_fixtures_exist():
    assert len(FIXTURES) >= 10


@pytest.mark.parametrize("path", FIXTURES, ids=lambda p: p.stem)
def test_golden_fixture_round_trips_byte_identically(server, path):
    fixture = json.loads(path.read_text())
    req = fixture["request"]
    body = req["body"].encode("utf-8") if req["body"] is not None else None
    status, response = http(server.endpoint, req["method"], req["path"], body)
    assert status == fixture["response"]["status"]
    assert response == fixture["response"]["body"].encode("utf-8")


class TestMalformedRequests:
    def post(self, server, path, body):
        return http(server.endpoint, "POST", path, body)

    def assert_code(self, got, status, code):
        assert got[0] == status
        assert json.loads(got[1])["error"]["code"] == code

    def test_invalid_json(self, server):
        self.assert_code(self.post(server, "/v1/embed", b"{nope"), 400, "invalid_json")

    def test_non_object_body(self, server):
        self.assert_code(self.post(server, "/v1/embed", b"[1,2]"), 400, "invalid_json")

    def test_missing_template_id(self, server):
        body = b'{"content":"x","layer":0,"modality":"text"}'
        self.assert_code(self.post(server, "/v1/embed", body), 400, "missing_field")

    def test_score_missing_template_id(self, server):
        body = (b'{"candidate":{"content":"b","modality":"text"},'
                b'"query":{"content":"a","modality":"text"}}')
        self.assert_code(self.post(server, "/v1/score", body), 400, "missing_field")

    def test_missing_content(self, server):
        body = b'{"layer":0,"modality":"text","template_id":"text_eol"}'
        self.assert_code(self.post(server, "/v1/embed", body), 400, "missing_field")

    def test_missing_media_for_video(self, server):
        body = b'{"content":"","layer":0,"modality":"video","template_id":"video_eol"}'
        self.assert_code(self.post(server, "/v1/embed", body), 400, "missing_field")

    def test_unknown_template(self, server):
        body = b'{"content":"x","layer":0,"modality":"text","template_id":"nope"}'
        self.assert_code(self.post(server, "/v1/embed", body), 400, "unknown_template")

    def test_template_modality_mismatch(self, server):
        body = b'{"content":"x","layer":0,"modality":"text","template_id":"video_eol"}'
        self.assert_code(self.post(server, "/v1/embed", body), 400, "invalid_field")

    def test_layer_out_of_range(self, server):
        body = b'{"content":"x","layer":7,"modality":"text","template_id":"text_eol"}'
        self.assert_code(self.post(server, "/v1/embed", body), 400, "layer_out_of_range")

    def test_layer_wrong_type(self, server):
        body = b'{"content":"x","layer":"zero","modality":"text","template_id":"text_eol"}'
        self.assert_code(self.post(server, "/v1/embed", body), 400, "invalid_field")

    def test_unknown_modality(self, server):
        body = b'{"content":"x","layer":0,"modality":"audio","template_id":"text_eol"}'
        self.assert_code(self.post(server, "/v1/embed", body), 400, "invalid_field")

    def test_bad_media_spec(self, server):
        body = (b'{"content":"","layer":0,"media":{"fps":-1.0,"locator":"v",'
                b'"max_frames":4},"modality":"video","template_id":"video_eol"}')
        self.assert_code(self.post(server, "/v1/embed", body), 400, "invalid_field")

    def test_unknown_path(self, server):
        self.assert_code(self.post(server, "/v1/nope", b"{}"), 404, "not_found")

    def test_wrong_method(self, server):
        got = http(server.endpoint, "GET", "/v1/embed")
        self.assert_code(got, 405, "method_not_allowed")


def test_501_when_adapter_cannot_score():
    srv = serve_background(EmbedOnlyAdapter(seed=0))
    try:
        body = (b'{"candidate":{"content":"b","modality":"text"},'
                b'"query":{"content":"a","modality":"text"},'
                b'"template_id":"yes_no_rerank"}')
        status, response = http(srv.endpoint, "POST", "/v1/score", body)
        assert status == 501
        assert json.loads(response)["error"]["code"] == "unsupported_capability"
    finally:
        srv.shutdown()


def test_adapter_fault_returns_opaque_500():
    class FaultyAdapter(ToyAdapter):
        def embed(self, *args, **kwargs):
            raise RuntimeError("secret internal detail")

    srv = serve_background(FaultyAdapter(seed=0))
    try:
        body = b'{"content":"x","layer":0,"modality":"text","template_id":"text_eol"}'
        status, response = http(srv.endpoint, "POST", "/v1/embed", body)
        assert status == 500
        err = json.loads(response)["error"]
        assert err["code"] == "internal"
        assert "secret" not in response.decode()
        assert "incident" in err["message"]
    finally:
        srv.shutdown()


def test_embedding_determinism_across_requests(server):
    body = b'{"content":"same text","layer":1,"modality":"text","template_id":"text_eol"}'
    first = http(server.endpoint, "POST", "/v1/embed", body)
    second = http(server.endpoint, "POST", "/v1/embed", body)
    assert first == second


def test_concurrent_requests_consistent(server):
    import concurrent.futures

    body = b'{"content":"parallel","layer":2,"modality":"text","template_id":"text_eol"}'
    with concurrent.futures.ThreadPoolExecutor(max_workers=8) as pool:
        results = list(pool.map(
            lambda _: http(server.endpoint, "POST", "/v1/embed", body), range(16)
        ))
    assert len({r[1] for r in results}) == 1
    assert all(r[0] == 200 for r in results)


def test_video_video_score_rejected(server):
    body = (b'{"candidate":{"media":{"fps":2.0,"locator":"b","max_frames":4},"modality":"video"},'
            b'"query":{"media":{"fps":2.0,"locator":"a","max_frames":4},"modality":"video"},'
            b'"template_id":"yes_no_rerank"}')
    status, response = http(server.endpoint, "POST", "/v1/score", body)
    assert status == 400
    assert json.loads(response)["error"]["code"] == "invalid_field"
