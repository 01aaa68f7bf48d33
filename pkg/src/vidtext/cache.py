"""Binary embedding cache.

Layout (little-endian throughout):

    magic "VVEC" | u16 version | u32 dim | i32 layer | u8 modality | u64 count
    per record: u16 id-length | id bytes (UTF-8) | dim x f32
    trailing u32 CRC32 over all record bytes

One file holds embeddings from a single (dim, layer, modality); round-trips
are bit-exact.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from .errors import (
    CacheChecksumError,
    CacheError,
    CacheTruncatedError,
    CacheVersionError,
    ContractViolation,
)
from .types import Embedding, Modality

MAGIC = b"VVEC"
VERSION = 1

_HEADER = struct.Struct("<4sHIiBQ")
_MODALITY_CODE = {Modality.TEXT: 0, Modality.VIDEO: 1}
_CODE_MODALITY = {v: k for k, v in _MODALITY_CODE.items()}


def cache_write(path, embeddings: list[Embedding]) -> None:
    """Write embeddings to a cache file; they must agree on dim/layer/modality."""
    path = Path(path)
    if embeddings:
        dim = embeddings[0].dim
        layer = embeddings[0].layer
        modality = embeddings[0].modality
        for e in embeddings:
            if (e.dim, e.layer, e.modality) != (dim, layer, modality):
                raise ContractViolation(
                    "cache files hold a single (dim, layer, modality); "
                    f"got {e.item_id!r} with ({e.dim}, {e.layer}, {e.modality})"
                )
    else:
        dim, layer, modality = 0, 0, Modality.TEXT

    payload = bytearray()
    for e in embeddings:
        id_bytes = e.item_id.encode("utf-8")
        if len(id_bytes) > 0xFFFF:
            raise ContractViolation(f"item_id too long to cache: {e.item_id[:40]!r}...")
        payload += struct.pack("<H", len(id_bytes))
        payload += id_bytes
        payload += e.values.astype("<f4").tobytes()

    header = _HEADER.pack(MAGIC, VERSION, dim, layer, _MODALITY_CODE[modality], len(embeddings))
    crc = zlib.crc32(bytes(payload)) & 0xFFFFFFFF
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(header + bytes(payload) + struct.pack("<I", crc))
    tmp.replace(path)


def cache_read(path) -> list[Embedding]:
    """Read a cache file back; raises distinct errors for version / truncation / CRC."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise CacheTruncatedError(f"{path}: file shorter than header")
    magic, version, dim, layer, modality_code, count = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise CacheError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise CacheVersionError(f"{path}: version {version}, expected {VERSION}")
    if modality_code not in _CODE_MODALITY:
        raise CacheError(f"{path}: unknown modality code {modality_code}")
    modality = _CODE_MODALITY[modality_code]

    if len(data) < _HEADER.size + 4:
        raise CacheTruncatedError(f"{path}: missing checksum")
    payload = data[_HEADER.size : -4]
    (stored_crc,) = struct.unpack_from("<I", data, len(data) - 4)
    if zlib.crc32(payload) & 0xFFFFFFFF != stored_crc:
        raise CacheChecksumError(f"{path}: payload CRC mismatch")

    embeddings = []
    offset = 0
    rec_f32 = 4 * dim
    for _ in range(count):
        if offset + 2 > len(payload):
            raise CacheTruncatedError(f"{path}: record id-length past end of payload")
        (id_len,) = struct.unpack_from("<H", payload, offset)
        offset += 2
        if offset + id_len + rec_f32 > len(payload):
            raise CacheTruncatedError(f"{path}: record body past end of payload")
        item_id = payload[offset : offset + id_len].decode("utf-8")
        offset += id_len
        values = np.frombuffer(payload[offset : offset + rec_f32], dtype="<f4").copy()
        offset += rec_f32
        embeddings.append(
            Embedding(values=values, layer=layer, modality=modality, item_id=item_id)
        )
    if offset != len(payload):
        raise CacheError(f"{path}: {len(payload) - offset} trailing payload bytes")
    return embeddings
