"""Golden wire fixtures from the primary side: the client builds byte-exact
request bodies, and response bodies decode to the local toy model's outputs.

These run with the server component absent; fixtures are plain files.
"""

import json
from pathlib import Path

import numpy as np
import pytest

from vidtext.backends import MediaSpec, ToyBackend, text_eol, video_eol
from vidtext.backends.wire import canonical_json, embed_request, score_request

FIXTURE_DIR = Path(__file__).resolve().parents[1] / "fixtures" / "wire"

pytestmark = pytest.mark.skipif(
    not FIXTURE_DIR.exists(), reason="wire fixtures not generated"
)


def load(name):
    return json.loads((FIXTURE_DIR / f"{name}.json").read_text())


def test_embed_text_request_bytes():
    fixture = load("embed_text_layer2")
    body = canonical_json(embed_request("text", "a dog runs across the yard", "text_eol", 2))
    assert body == fixture["request"]["body"].encode("utf-8")


def test_embed_video_request_bytes():
    fixture = load("embed_video_default")
    media = MediaSpec("toyvid://fixtures/0.1", fps=2.0, max_frames=180)
    body = canonical_json(embed_request("video", "", "video_eol", 2, media=media))
    assert body == fixture["request"]["body"].encode("utf-8")


def test_score_request_bytes():
    fixture = load("score_text_video")
    media = MediaSpec("toyvid://fixtures/0.1", fps=2.0, max_frames=4)
    body = canonical_json(score_request("a dog runs across the yard", media))
    assert body == fixture["request"]["body"].encode("utf-8")


def test_embed_response_matches_local_toy():
    fixture = load("embed_text_layer2")
    payload = json.loads(fixture["response"]["body"])
    local = ToyBackend(seed=0).embed_text("a dog runs across the yard", text_eol(), 2)
    assert payload["dim"] == local.dim and payload["layer"] == 2
    assert np.array_equal(np.asarray(payload["embedding"], dtype=np.float32), local.values)


def test_video_response_matches_local_toy():
    fixture = load("embed_video_prefixed_short")
    payload = json.loads(fixture["response"]["body"])
    media = MediaSpec("toyvid://fixtures/0.1", fps=2.0, max_frames=4)
    local = ToyBackend(seed=0).embed_video(media, video_eol(prefixed=True), 3)
    assert np.array_equal(np.asarray(payload["embedding"], dtype=np.float32), local.values)


def test_score_response_matches_local_toy():
    fixture = load("score_text_video")
    payload = json.loads(fixture["response"]["body"])
    media = MediaSpec("toyvid://fixtures/0.1", fps=2.0, max_frames=4)
    local = ToyBackend(seed=0).score_yes("a dog runs across the yard", media)
    assert payload["p_yes"] == pytest.approx(local, abs=1e-9)


def test_error_fixture_codes():
    assert json.loads(load("error_missing_template")["response"]["body"])["error"]["code"] == "missing_field"
    assert load("error_missing_template")["response"]["status"] == 400
    assert json.loads(load("error_layer_out_of_range")["response"]["body"])["error"]["code"] == "layer_out_of_range"
    assert json.loads(load("error_unknown_template")["response"]["body"])["error"]["code"] == "unknown_template"
