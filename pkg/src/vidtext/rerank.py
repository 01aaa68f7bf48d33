"""Second-stage reranking of top-K candidates with the yes-likelihood scorer.

The reranked block sits strictly above the untouched tail; probabilities and
cosine scores are never blended because they are not commensurable. Scorer
results stream to a JSONL progress file so a crashed run against a slow
remote backend resumes without repeating forward passes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .backends.base import Backend, yes_no_rerank
from .errors import CapabilityError, ContractViolation, RerankInterrupted
from .types import RankedEntry, RankedList, Stage
from .validation import check_positive_int

ZERO_SHOT_K = 100   # default rerank pool for zero-shot pipelines
OPTIMIZED_K = 10    # default pool once the adapter is trained


@dataclass
class RerankConfig:
    k: int = ZERO_SHOT_K

    def __post_init__(self):
        check_positive_int(self.k, "k")


class ProgressLog:
    """Append-only JSONL of scored pairs, keyed by (query_id, candidate_id)."""

    def __init__(self, path=None):
        self.path = Path(path) if path else None
        self._scores: dict[tuple[str, str], float] = {}
        if self.path and self.path.exists():
            with self.path.open() as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    rec = json.loads(line)
                    self._scores[(rec["query_id"], rec["candidate_id"])] = rec["p_yes"]

    def get(self, query_id: str, candidate_id: str):
        return self._scores.get((query_id, candidate_id))

    def record(self, query_id: str, candidate_id: str, p_yes: float) -> None:
        self._scores[(query_id, candidate_id)] = p_yes
        if self.path:
            with self.path.open("a") as fh:
                fh.write(
                    json.dumps(
                        {"query_id": query_id, "candidate_id": candidate_id, "p_yes": p_yes},
                        sort_keys=True,
                    )
                    + "\n"
                )

    def __len__(self) -> int:
        return len(self._scores)


def rerank(
    query_content,
    first_stage: RankedList,
    cfg: RerankConfig,
    backend: Backend,
    candidate_content,
    progress: ProgressLog | None = None,
) -> RankedList:
    """Re-score the top min(k, len) block by p_yes and reorder it.

    candidate_content maps candidate_id -> text or MediaSpec for the scorer
    prompt. Ties in p_yes fall back to the first-stage score, then id. On a
    scorer failure the partial progress is preserved in `progress` and a
    RerankInterrupted carrying the checkpoint path is raised.
    """
    if not first_stage.entries:
        raise ContractViolation("first_stage ranking is empty")
    template = yes_no_rerank()
    block = first_stage.entries[: min(cfg.k, len(first_stage.entries))]
    tail = first_stage.entries[len(block):]

    scored = []
    done = 0
    for entry in block:
        p = progress.get(first_stage.query_id, entry.candidate_id) if progress is not None else None
        if p is None:
            try:
                p = backend.score_yes(
                    query_content, candidate_content(entry.candidate_id), template
                )
            except CapabilityError:
                raise  # not a partial failure: the backend can never score
            except Exception as exc:
                raise RerankInterrupted(
                    f"scorer failed on ({first_stage.query_id!r}, {entry.candidate_id!r}): {exc}",
                    progress_path=progress.path if progress is not None else None,
                    completed=done,
                ) from exc
            if progress is not None:
                progress.record(first_stage.query_id, entry.candidate_id, p)
        done += 1
        scored.append((p, entry))

    scored.sort(key=lambda pe: (-pe[0], -pe[1].score, pe[1].candidate_id))
    entries = [
        RankedEntry(candidate_id=e.candidate_id, score=float(p), stage=Stage.RERANKED)
        for p, e in scored
    ] + list(tail)
    return RankedList(query_id=first_stage.query_id, entries=entries)


def rerank_all(
    ranked: list[RankedList],
    cfg: RerankConfig,
    backend: Backend,
    query_content,
    candidate_content,
    progress_path=None,
) -> list[RankedList]:
    """Rerank every query list; query_content / candidate_content resolve ids
    to scorer-prompt contents."""
    progress = ProgressLog(progress_path)
    return [
        rerank(query_content(rl.query_id), rl, cfg, backend, candidate_content, progress)
        for rl in ranked
    ]
