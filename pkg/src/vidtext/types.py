"""Domain types shared by every stage of the retrieval pipeline."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation
from .validation import as_float_vector, check_finite_matrix


class Modality(enum.Enum):
    TEXT = "text"
    VIDEO = "video"


class Stage(enum.Enum):
    """Provenance of a ranked entry: first-stage cosine or second-stage rerank."""

    FIRST = "first"
    RERANKED = "reranked"


class Split(enum.Enum):
    TRAIN = "train"
    VAL = "val"
    TEST = "test"


@dataclass
class Embedding:
    """A fixed-dimension float vector tagged with its source layer and modality.

    Values are stored raw (not pre-normalized); cosine normalizes at scoring
    time so the adapter can operate on unchanged backbone outputs.
    """

    values: np.ndarray
    layer: int
    modality: Modality
    item_id: str

    def __post_init__(self):
        self.values = as_float_vector(self.values, "Embedding.values")
        if self.layer < 0:
            raise ContractViolation(f"Embedding.layer must be >= 0, got {self.layer}")

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])


@dataclass
class SimilarityMatrix:
    """Dense queries x candidates score grid.

    The substrate for calibration, ranking, metrics, and the training loss.
    """

    scores: np.ndarray
    query_ids: list[str]
    candidate_ids: list[str]

    def __post_init__(self):
        self.scores = check_finite_matrix(self.scores, "SimilarityMatrix.scores")
        n_q, n_c = self.scores.shape
        if n_q != len(self.query_ids) or n_c != len(self.candidate_ids):
            raise ContractViolation(
                f"score shape {self.scores.shape} does not match id lists "
                f"({len(self.query_ids)} x {len(self.candidate_ids)})"
            )

    @property
    def shape(self) -> tuple[int, int]:
        return self.scores.shape


@dataclass
class RankedEntry:
    candidate_id: str
    score: float
    stage: Stage = Stage.FIRST


@dataclass
class RankedList:
    """Per-query ordering of candidates, best first.

    Ties are broken by ascending candidate_id so metrics are deterministic
    across runs and platforms.
    """

    query_id: str
    entries: list[RankedEntry]

    def __post_init__(self):
        ids = [e.candidate_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise ContractViolation(f"duplicate candidate ids in ranking for {self.query_id}")

    def candidate_ids(self) -> list[str]:
        return [e.candidate_id for e in self.entries]


@dataclass
class TextPair:
    """A detailed-description -> short-summary training pair."""

    dense: str
    summary: str
    pair_id: str

    def __post_init__(self):
        if not self.dense or not self.summary:
            raise ContractViolation(f"pair {self.pair_id!r} has an empty side")


@dataclass
class ManifestItem:
    item_id: str
    media_ref: str
    captions: list[str]


@dataclass
class DatasetManifest:
    """Declarative dataset description: items, captions, and the positive map.

    Every caption of an item is a positive for that item, in both retrieval
    directions. Caption ids are derived as "<item_id>::c<index>".
    """

    items: list[ManifestItem]
    split: Split = Split.TEST

    def __post_init__(self):
        seen = set()
        for item in self.items:
            if item.item_id in seen:
                raise ContractViolation(f"duplicate item_id {item.item_id!r}")
            seen.add(item.item_id)
            if not item.captions:
                raise ContractViolation(f"item {item.item_id!r} has no captions")

    @staticmethod
    def caption_id(item_id: str, index: int) -> str:
        return f"{item_id}::c{index}"

    def caption_entries(self) -> list[tuple[str, str, str]]:
        """All captions as (caption_id, item_id, text), manifest order."""
        out = []
        for item in self.items:
            for j, text in enumerate(item.captions):
                out.append((self.caption_id(item.item_id, j), item.item_id, text))
        return out

    def positives_t2v(self) -> dict[str, set[str]]:
        """caption_id -> {item_id}: each caption queries for its own video."""
        return {cid: {iid} for cid, iid, _ in self.caption_entries()}

    def positives_v2t(self) -> dict[str, set[str]]:
        """item_id -> caption ids: any caption of a video counts as a hit."""
        out: dict[str, set[str]] = {item.item_id: set() for item in self.items}
        for cid, iid, _ in self.caption_entries():
            out[iid].add(cid)
        return out

    @property
    def n_items(self) -> int:
        return len(self.items)

    @property
    def n_captions(self) -> int:
        return sum(len(item.captions) for item in self.items)
