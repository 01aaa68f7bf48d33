"""Deterministic numeric kernels: cosine scoring and softmax normalization.

All reductions accumulate in float64 regardless of input storage width.
Matrix construction is vectorized but produces output identical to the
scalar double loop, so oracle tests can pin it entrywise.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractViolation
from .types import Embedding, SimilarityMatrix
from .validation import check_positive

_NORM_EPS = 0.0  # zero norms are a contract error, not something to paper over


def cosine(a: Embedding, b: Embedding) -> float:
    """Cosine similarity between two embeddings, in [-1, 1].

    Zero-norm vectors signal a broken backend and are rejected.
    """
    if a.dim != b.dim:
        raise ContractViolation(f"dimension mismatch: {a.dim} vs {b.dim}")
    av = a.values.astype(np.float64)
    bv = b.values.astype(np.float64)
    na = np.linalg.norm(av)
    nb = np.linalg.norm(bv)
    if na == 0.0 or nb == 0.0:
        raise ContractViolation("cosine undefined for zero-norm vector")
    value = float(np.dot(av, bv) / (na * nb))
    # fp rounding can poke a hair past the closed interval
    return min(1.0, max(-1.0, value))


def _stack_unit_rows(embeddings: list[Embedding], name: str) -> np.ndarray:
    if not embeddings:
        raise ContractViolation(f"{name} is empty")
    dim = embeddings[0].dim
    for e in embeddings:
        if e.dim != dim:
            raise ContractViolation(f"mixed dims in {name}: {e.dim} != {dim}")
    mat = np.stack([e.values for e in embeddings]).astype(np.float64)
    norms = np.linalg.norm(mat, axis=1)
    if np.any(norms == 0.0):
        bad = [embeddings[i].item_id for i in np.nonzero(norms == 0.0)[0]]
        raise ContractViolation(f"zero-norm vectors in {name}: {bad}")
    return mat / norms[:, None]


def build_similarity_matrix(
    queries: list[Embedding], candidates: list[Embedding]
) -> SimilarityMatrix:
    """All-pairs cosine scores: scores[i][j] == cosine(queries[i], candidates[j])."""
    q = _stack_unit_rows(queries, "queries")
    c = _stack_unit_rows(candidates, "candidates")
    if q.shape[1] != c.shape[1]:
        raise ContractViolation(
            f"query dim {q.shape[1]} != candidate dim {c.shape[1]}"
        )
    scores = np.clip(q @ c.T, -1.0, 1.0)
    return SimilarityMatrix(
        scores=scores,
        query_ids=[e.item_id for e in queries],
        candidate_ids=[e.item_id for e in candidates],
    )


def _softmax_rows(scores: np.ndarray, temperature: float) -> np.ndarray:
    check_positive(temperature, "temperature")
    z = scores.astype(np.float64) / temperature
    z -= z.max(axis=1, keepdims=True)
    ez = np.exp(z)
    return ez / ez.sum(axis=1, keepdims=True)


def row_softmax(m: SimilarityMatrix, temperature: float = 1.0) -> SimilarityMatrix:
    """Softmax each row of scores/temperature, with max-subtraction for safety."""
    return SimilarityMatrix(
        scores=_softmax_rows(m.scores, temperature),
        query_ids=list(m.query_ids),
        candidate_ids=list(m.candidate_ids),
    )


def col_softmax(m: SimilarityMatrix, temperature: float = 1.0) -> SimilarityMatrix:
    """Column-wise counterpart of row_softmax."""
    return SimilarityMatrix(
        scores=_softmax_rows(m.scores.T, temperature).T,
        query_ids=list(m.query_ids),
        candidate_ids=list(m.candidate_ids),
    )
