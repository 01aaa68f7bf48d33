"""First-stage retrieval: dual-softmax calibration, ranking, Recall@K."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import ContractViolation
from .kernels import _softmax_rows, build_similarity_matrix
from .types import DatasetManifest, Embedding, RankedEntry, RankedList, SimilarityMatrix, Stage
from .validation import check_positive, check_positive_int

RECALL_KS = (1, 5, 10)

# one fixed temperature per retrieval direction, tuned on a validation
# split by R@1
TEMPERATURE_GRID = tuple(0.01 * 2.0**i for i in range(15))


class Direction(enum.Enum):
    T2V = "t2v"
    V2T = "v2t"


@dataclass
class CalibrationConfig:
    enabled: bool = False
    temperature_t2v: float = 1.0
    temperature_v2t: float = 1.0

    def __post_init__(self):
        if self.enabled:
            check_positive(self.temperature_t2v, "temperature_t2v")
            check_positive(self.temperature_v2t, "temperature_v2t")

    def temperature_for(self, direction: Direction) -> float:
        return self.temperature_t2v if direction is Direction.T2V else self.temperature_v2t


@dataclass
class EvalReport:
    direction: Direction
    recall_at: dict[int, float]
    n_queries: int
    calibrated: bool = False

    def __post_init__(self):
        ks = sorted(self.recall_at)
        vals = [self.recall_at[k] for k in ks]
        if any(b < a - 1e-12 for a, b in zip(vals, vals[1:])):
            raise ContractViolation(f"recall must be monotone in k, got {self.recall_at}")

    def to_json_dict(self) -> dict:
        return {
            "direction": self.direction.value,
            "recall_at": {str(k): self.recall_at[k] for k in sorted(self.recall_at)},
            "n_queries": self.n_queries,
            "calibrated": self.calibrated,
        }

    def format_table(self) -> str:
        """Aligned-column text table in the usual R@1/R@5/R@10 layout."""
        ks = sorted(self.recall_at)
        header = "direction  " + "  ".join(f"R@{k}" for k in ks) + "  queries"
        row = f"{self.direction.value:<9s}  " + "  ".join(
            f"{100.0 * self.recall_at[k]:4.1f}" for k in ks
        ) + f"  {self.n_queries:7d}"
        return header + "\n" + row + "\n"

    def csv_fields(self) -> list[str]:
        return [f"{self.recall_at[k]:.6f}" for k in sorted(self.recall_at)]


def dual_softmax_calibrate(m: SimilarityMatrix, temperature: float) -> SimilarityMatrix:
    """Multiply row-wise and column-wise softmax of the temperature-scaled
    scores, emphasizing pairs that are confident in both retrieval directions."""
    check_positive(temperature, "temperature")
    scaled = m.scores * temperature
    calibrated = _softmax_rows(scaled, 1.0) * _softmax_rows(scaled.T, 1.0).T
    return SimilarityMatrix(
        scores=calibrated,
        query_ids=list(m.query_ids),
        candidate_ids=list(m.candidate_ids),
    )


def rank(m: SimilarityMatrix) -> list[RankedList]:
    """Per-query candidate ordering, score descending, id-ascending on ties."""
    out = []
    for qi, query_id in enumerate(m.query_ids):
        row = m.scores[qi]
        order = sorted(range(len(m.candidate_ids)), key=lambda j: (-row[j], m.candidate_ids[j]))
        entries = [
            RankedEntry(candidate_id=m.candidate_ids[j], score=float(row[j]), stage=Stage.FIRST)
            for j in order
        ]
        out.append(RankedList(query_id=query_id, entries=entries))
    return out


def recall_at_k(
    ranked: list[RankedList], positives: dict[str, set[str]], k: int
) -> float:
    """Fraction of queries with at least one positive in the top k.

    A query counts as a hit if ANY of its positives appears, which is what
    multi-caption galleries need in the video-to-text direction.
    """
    check_positive_int(k, "k")
    if not ranked:
        raise ContractViolation("no ranked lists given")
    hits = 0
    for rl in ranked:
        pos = positives.get(rl.query_id)
        if not pos:
            raise ContractViolation(f"query {rl.query_id!r} has no positive set")
        top = rl.entries[:k]
        if any(e.candidate_id in pos for e in top):
            hits += 1
    return hits / len(ranked)


def select_temperature(
    m_val: SimilarityMatrix,
    positives: dict[str, set[str]],
    grid: tuple[float, ...] = TEMPERATURE_GRID,
) -> float:
    """Grid-search the calibration temperature maximizing R@1 on a validation
    matrix; first grid point wins ties so the choice is deterministic."""
    best_tau, best_r1 = None, -1.0
    for tau in grid:
        r1 = recall_at_k(rank(dual_softmax_calibrate(m_val, tau)), positives, 1)
        if r1 > best_r1:
            best_tau, best_r1 = tau, r1
    return float(best_tau)


def _index_embeddings(embs: list[Embedding], needed: list[str], role: str) -> list[Embedding]:
    by_id = {e.item_id: e for e in embs}
    missing = [i for i in needed if i not in by_id]
    if missing:
        raise ContractViolation(
            f"missing {role} embeddings for: {', '.join(missing[:10])}"
            + ("..." if len(missing) > 10 else "")
        )
    return [by_id[i] for i in needed]


def similarity_for_direction(
    manifest: DatasetManifest,
    caption_embs: list[Embedding],
    video_embs: list[Embedding],
    direction: Direction,
) -> tuple[SimilarityMatrix, dict[str, set[str]]]:
    """Assemble the direction's query x candidate matrix plus its positive map.

    Captions are always individual gallery entries / queries; a video query in
    V2T hits if any of its captions ranks highly.
    """
    caption_ids = [cid for cid, _, _ in manifest.caption_entries()]
    video_ids = [item.item_id for item in manifest.items]
    caps = _index_embeddings(caption_embs, caption_ids, "caption")
    vids = _index_embeddings(video_embs, video_ids, "video")
    if direction is Direction.T2V:
        return build_similarity_matrix(caps, vids), manifest.positives_t2v()
    return build_similarity_matrix(vids, caps), manifest.positives_v2t()


def evaluate(
    manifest: DatasetManifest,
    caption_embs: list[Embedding],
    video_embs: list[Embedding],
    direction: Direction = Direction.T2V,
    calibration: CalibrationConfig | None = None,
    ks: tuple[int, ...] = RECALL_KS,
) -> EvalReport:
    """similarity -> optional dual-softmax -> rank -> Recall@K."""
    m, positives = similarity_for_direction(manifest, caption_embs, video_embs, direction)
    calibrated = bool(calibration and calibration.enabled)
    if calibrated:
        m = dual_softmax_calibrate(m, calibration.temperature_for(direction))
    ranked = rank(m)
    return EvalReport(
        direction=direction,
        recall_at={k: recall_at_k(ranked, positives, k) for k in ks},
        n_queries=len(ranked),
        calibrated=calibrated,
    )
