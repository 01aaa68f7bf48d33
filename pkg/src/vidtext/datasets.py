"""Dataset ingestion: raw JSONL descriptions to validated manifests.

Raw format, one record per line:

    {"item_id": "...", "media_ref": "...", "captions": ["...", ...]}

Paragraph mode concatenates each item's captions with ". " into a single
caption, the convention used for video-paragraph retrieval benchmarks.
"""

from __future__ import annotations

import json
from pathlib import Path

from .errors import IngestError
from .types import DatasetManifest, ManifestItem, Split


def ingest(path, paragraph: bool = False, split: Split = Split.TEST) -> DatasetManifest:
    items: list[ManifestItem] = []
    bad: list[str] = []
    seen: set[str] = set()
    with Path(path).open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                item_id = rec["item_id"]
                media_ref = rec["media_ref"]
                captions = list(rec["captions"])
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                bad.append(f"line {lineno}: {exc!r}")
                continue
            if item_id in seen:
                bad.append(f"line {lineno}: duplicate item_id {item_id!r}")
                continue
            if not captions or any(not isinstance(c, str) or not c.strip() for c in captions):
                bad.append(f"line {lineno}: item {item_id!r} has empty or missing captions")
                continue
            seen.add(item_id)
            if paragraph:
                captions = [". ".join(captions)]
            items.append(ManifestItem(item_id=item_id, media_ref=media_ref, captions=captions))
    if bad:
        raise IngestError(f"{len(bad)} invalid records in {path}", records=bad)
    if not items:
        raise IngestError(f"no records in {path}")
    return DatasetManifest(items=items, split=split)


def write_manifest(manifest: DatasetManifest, path) -> None:
    with Path(path).open("w") as fh:
        for item in manifest.items:
            fh.write(
                json.dumps(
                    {
                        "item_id": item.item_id,
                        "media_ref": item.media_ref,
                        "captions": item.captions,
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def read_pairs(path):
    """JSONL of {"pair_id", "dense", "summary"} records."""
    from .types import TextPair

    pairs = []
    bad = []
    with Path(path).open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                pairs.append(
                    TextPair(dense=rec["dense"], summary=rec["summary"], pair_id=rec["pair_id"])
                )
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                bad.append(f"line {lineno}: {exc!r}")
    if bad:
        raise IngestError(f"{len(bad)} invalid pair records in {path}", records=bad)
    return pairs


def write_pairs(pairs, path) -> None:
    with Path(path).open("w") as fh:
        for p in pairs:
            fh.write(
                json.dumps(
                    {"pair_id": p.pair_id, "dense": p.dense, "summary": p.summary},
                    sort_keys=True,
                )
                + "\n"
            )
