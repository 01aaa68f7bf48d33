#!/usr/bin/env python3
"""Generate the shared golden wire fixtures (run once; files are committed).

Each fixture pins the exact request bytes a conforming client must produce
and the exact response bytes the reference server emits for them, using the
toy model at seed 0.
"""

import json
import sys
import urllib.request
from pathlib import Path

from vidtext.backends import MediaSpec
from vidtext.backends.wire import canonical_json, embed_request, score_request

from vvecd import ToyAdapter, serve_background

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "fixtures" / "wire"


def http(endpoint, method, path, body=None):
    req = urllib.request.Request(endpoint + path, data=body, method=method)
    if body is not None:
        req.add_header("Content-Type", "application/json")
    try:
        with urllib.request.urlopen(req) as resp:
            return resp.status, resp.read()
    except urllib.error.HTTPError as err:
        return err.code, err.read()


def main() -> int:
    server = serve_background(ToyAdapter(seed=0))
    media = MediaSpec("toyvid://fixtures/0.1", fps=2.0, max_frames=180)
    short = MediaSpec("toyvid://fixtures/0.1", fps=2.0, max_frames=4)

    cases = {
        "descriptor": ("GET", "/v1/descriptor", None),
        "embed_text_layer0": (
            "POST", "/v1/embed",
            canonical_json(embed_request("text", "a dog runs across the yard", "text_eol", 0)),
        ),
        "embed_text_layer2": (
            "POST", "/v1/embed",
            canonical_json(embed_request("text", "a dog runs across the yard", "text_eol", 2)),
        ),
        "embed_video_default": (
            "POST", "/v1/embed",
            canonical_json(embed_request("video", "", "video_eol", 2, media=media)),
        ),
        "embed_video_prefixed_short": (
            "POST", "/v1/embed",
            canonical_json(embed_request("video", "", "video_eol_prefixed", 3, media=short)),
        ),
        "score_text_video": (
            "POST", "/v1/score",
            canonical_json(score_request("a dog runs across the yard", short)),
        ),
        "score_video_text": (
            "POST", "/v1/score",
            canonical_json(score_request(short, "a dog runs across the yard")),
        ),
        "score_text_text": (
            "POST", "/v1/score",
            canonical_json(score_request("first sentence", "second sentence")),
        ),
        "error_missing_template": (
            "POST", "/v1/score",
            b'{"candidate":{"content":"b","modality":"text"},'
            b'"query":{"content":"a","modality":"text"}}',
        ),
        "error_layer_out_of_range": (
            "POST", "/v1/embed",
            canonical_json(embed_request("text", "x", "text_eol", 99)),
        ),
        "error_unknown_template": (
            "POST", "/v1/embed",
            canonical_json(embed_request("text", "x", "bogus_template", 0)),
        ),
    }

    FIXTURE_DIR.mkdir(parents=True, exist_ok=True)
    for name, (method, path, body) in cases.items():
        status, response = http(server.endpoint, method, path, body)
        fixture = {
            "name": name,
            "request": {
                "method": method,
                "path": path,
                "body": body.decode("utf-8") if body is not None else None,
            },
            "response": {
                "status": status,
                "body": response.decode("utf-8"),
            },
        }
        out = FIXTURE_DIR / f"{name}.json"
        out.write_text(json.dumps(fixture, indent=2, sort_keys=True) + "\n")
        print(f"{name}: {status} {len(response)}B -> {out}")
    server.shutdown()
    return 0


if __name__ == "__main__":
    sys.exit(main())
