import numpy as np
import pytest

from vidtext.cache import cache_read, cache_write
from vidtext.errors import (
    CacheChecksumError,
    CacheTruncatedError,
    CacheVersionError,
    ContractViolation,
)
from vidtext.types import Embedding, Modality


def make_embeddings(n, dim=16, layer=2, modality=Modality.TEXT, seed=0):
    rng = np.random.default_rng(seed)
    return [
        Embedding(values=rng.standard_normal(dim).astype(np.float32), layer=layer,
                  modality=modality, item_id=f"item-{i:03d}")
        for i in range(n)
    ]


def test_empty_roundtrip(tmp_path):
    path = tmp_path / "empty.vvec"
    cache_write(path, [])
    assert cache_read(path) == []


def test_roundtrip_bit_exact(tmp_path):
    path = tmp_path / "c.vvec"
    embs = make_embeddings(100)
    cache_write(path, embs)
    back = cache_read(path)
    assert len(back) == 100
    for a, b in zip(embs, back):
        assert a.item_id == b.item_id
        assert a.layer == b.layer
        assert a.modality is b.modality
        assert np.array_equal(a.values, b.values)  # bitwise, both float32


def test_roundtrip_video_modality_and_unicode_ids(tmp_path):
    path = tmp_path / "v.vvec"
    embs = make_embeddings(3, modality=Modality.VIDEO)
    embs[1].item_id = "vidéo-θ"
    cache_write(path, embs)
    back = cache_read(path)
    assert back[1].item_id == "vidéo-θ"
    assert back[0].modality is Modality.VIDEO


def test_corrupt_payload_byte_is_checksum_error(tmp_path):
    path = tmp_path / "c.vvec"
    cache_write(path, make_embeddings(5))
    data = bytearray(path.read_bytes())
    data[40] ^= 0xFF  # inside the payload
    path.write_bytes(bytes(data))
    with pytest.raises(CacheChecksumError):
        cache_read(path)


def test_version_mismatch(tmp_path):
    path = tmp_path / "c.vvec"
    cache_write(path, make_embeddings(2))
    data = bytearray(path.read_bytes())
    data[4] = 99  # u16 version little-endian low byte
    path.write_bytes(bytes(data))
    with pytest.raises(CacheVersionError):
        cache_read(path)


def test_truncated_file(tmp_path):
    path = tmp_path / "c.vvec"
    cache_write(path, make_embeddings(4))
    full = path.read_bytes()
    path.write_bytes(full[:10])
    with pytest.raises(CacheTruncatedError):
        cache_read(path)


def test_truncated_records_detected(tmp_path):
    path = tmp_path / "c.vvec"
    cache_write(path, make_embeddings(4))
    data = bytearray(path.read_bytes())
    # raise the declared count without adding records
    import struct
    struct.pack_into("<Q", data, 15, 9)
    path.write_bytes(bytes(data))
    with pytest.raises((CacheTruncatedError, CacheChecksumError)):
        cache_read(path)


def test_mixed_layer_rejected(tmp_path):
    embs = make_embeddings(2, layer=1) + make_embeddings(1, layer=3, seed=9)
    with pytest.raises(ContractViolation):
        cache_write(tmp_path / "m.vvec", embs)


def test_mixed_modality_rejected(tmp_path):
    embs = make_embeddings(1) + make_embeddings(1, modality=Modality.VIDEO, seed=5)
    with pytest.raises(ContractViolation):
        cache_write(tmp_path / "m.vvec", embs)
