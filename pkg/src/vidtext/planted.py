"""Planted synthetic corpora: datasets whose ground-truth retrieval behavior
is known by construction.

The builders target the toy backend's token pairing: caption words are chosen
so their vocabulary ids land exactly on the concept partners of the video's
frame tokens. `strength` dials how many frame tokens the caption covers, and
`distractors` appends unrelated words, which together control how clean the
first-stage signal is.
"""

from __future__ import annotations

import functools

from .backends.base import MediaSpec
from .backends.hashing import combine, fnv1a64, hash_stream
from .backends.toy import (
    concept_class,
    frame_count,
    frame_token_ids,
    paired_token,
    template_concept_classes,
    word_token_id,
)
from .types import DatasetManifest, ManifestItem, Split, TextPair


@functools.lru_cache(maxsize=None)
def word_for_token(token_id: int) -> str:
    """Deterministic pronounceable-ish word hashing to exactly `token_id`."""
    k = 0
    while True:
        word = f"w{token_id}x{k}"
        if word_token_id(word) == token_id:
            return word
        k += 1


def _rng_ints(seed_parts, count, modulus):
    vals = hash_stream(combine(*seed_parts), count)
    return [int((v + 1.0) / 2.0 * modulus) % modulus for v in vals]


def _clean_classes(frame_ids: list[int]) -> bool:
    """Distinct concept classes, none colliding with the fixed prompt wording."""
    classes = [concept_class(t) for t in frame_ids]
    return len(set(classes)) == len(classes) and not (
        set(classes) & template_concept_classes()
    )


def caption_for(media: MediaSpec, strength: float = 1.0, distractors: int = 0,
                seed: int = 0) -> str:
    """A caption concept-paired with `media`'s frame tokens.

    strength: fraction of frame tokens that get a matching word.
    distractors: count of unrelated words appended, drawn clear of both the
    template classes and the video's own classes.
    """
    frames = frame_token_ids(media)
    n_match = max(1, round(strength * len(frames)))
    words = [word_for_token(paired_token(t)) for t in frames[:n_match]]
    if distractors:
        own = {concept_class(t) for t in frames}
        ids = _rng_ints((seed, fnv1a64(media.locator), fnv1a64("distract")),
                        4 * distractors, 256)
        picked = []
        for i in ids:
            if concept_class(i) in own or concept_class(i) in template_concept_classes():
                continue
            picked.append(i)
            if len(picked) == distractors:
                break
        words += [word_for_token(i) for i in picked]
    return " ".join(words)


def planted_media(tag: str, frames: int = 8) -> MediaSpec:
    """A locator with exactly `frames` toy frames, all in distinct concept
    classes that avoid the prompt wording (kills length and collision bias)."""
    k = 0
    while True:
        media = MediaSpec(f"toyvid://{tag}.{k}")
        if frame_count(media) == frames and _clean_classes(frame_token_ids(media)):
            return media
        k += 1


def retrieval_corpus(
    n_items: int,
    seed: int = 0,
    strength: float = 1.0,
    distractors: int = 0,
    frames: int = 8,
    split: Split = Split.TEST,
) -> DatasetManifest:
    """One caption per video, concept-aligned with the planted pairing.

    All videos share one frame count so neither ranking stage can key on
    sequence length.
    """
    items = []
    for i in range(n_items):
        media = planted_media(f"{seed}/{i:04d}", frames)
        items.append(
            ManifestItem(
                item_id=f"item{i:04d}",
                media_ref=media.locator,
                captions=[caption_for(media, strength, distractors, seed)],
            )
        )
    return DatasetManifest(items=items, split=split)


_FILLER = (
    "footage begins with a wide establishing view of the scene while the "
    "camera slowly pans across and several details come into focus"
)


def training_pairs(n_pairs: int, seed: int = 0, keywords_per_pair: int = 3) -> list[TextPair]:
    """Dense->summary pairs sharing a corpus-wide filler preamble.

    The shared filler direction dominates raw embeddings and drags every
    dense text toward every summary; a low-rank adapter can learn to project
    it away, which is what the training tests measure.
    """
    pairs = []
    for i in range(n_pairs):
        kw_ids = _rng_ints((seed, fnv1a64("train-kw"), i), keywords_per_pair, 256)
        keywords = [word_for_token((k + j * 37) % 256) for j, k in enumerate(kw_ids)]
        summary = " ".join(keywords)
        dense = f"{_FILLER} {summary}"
        pairs.append(TextPair(dense=dense, summary=summary, pair_id=f"pair{i:05d}"))
    return pairs


def probe_texts(n: int = 8, seed: int = 0) -> list[str]:
    """Small diverse text set for layer non-degeneracy probes."""
    out = []
    for i in range(n):
        ids = _rng_ints((seed, fnv1a64("probe"), i), 5, 256)
        out.append(" ".join(word_for_token(t) for t in ids))
    return out
