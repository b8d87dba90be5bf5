"""Embedding-based re-rank scores.

All three scorers are oriented as similarities (higher is better) so they
can be min-max normalized and fused with the first-pass LM channel. Tokens
without a vector are skipped; a question or answer left empty after OOV
filtering scores 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .analysis import TokenSequence
from .embeddings import EmbeddingTable, LookupPolicy, lookup_rows


@dataclass(frozen=True)
class SpanConfig:
    span_length: int = 20
    stride: int = 2

    def __post_init__(self):
        if self.span_length < 1:
            raise ValueError(f"span_length must be >= 1, got {self.span_length}")
        if not 1 <= self.stride <= self.span_length:
            raise ValueError(
                f"stride must be in [1, span_length], got {self.stride}")


@dataclass(frozen=True)
class MmpConfig:
    blend_weight: float = 0.7
    answer_prefix_tokens: int = 20

    def __post_init__(self):
        if not 0.0 <= self.blend_weight <= 1.0:
            raise ValueError(f"blend_weight must be in [0, 1], got {self.blend_weight}")
        if self.answer_prefix_tokens < 1:
            raise ValueError("answer_prefix_tokens must be >= 1")


def _question_matrix(question: TokenSequence, table: EmbeddingTable,
                     policy: LookupPolicy) -> np.ndarray:
    rows = lookup_rows(question.tokens, table, policy)
    rows = rows[rows >= 0]
    return table.matrix[rows]


def rwmd_q(question: TokenSequence, answer: TokenSequence, table: EmbeddingTable,
           policy: LookupPolicy = LookupPolicy()) -> float:
    """Each question term relaxes to its best-matching answer term.

    Mean over in-vocabulary question tokens of the max cosine against any
    in-vocabulary answer token. Duplicate question tokens count per
    occurrence.
    """
    qmat = _question_matrix(question, table, policy)
    arows = lookup_rows(answer.tokens, table, policy)
    arows = arows[arows >= 0]
    if qmat.shape[0] == 0 or arows.shape[0] == 0:
        return 0.0
    sim = np.dot(qmat, table.matrix[arows].T)
    return float(_kernels.best_mean(np.ascontiguousarray(sim)))


def spans(answer: TokenSequence, cfg: SpanConfig = SpanConfig()) -> list[TokenSequence]:
    """Overlapping spans at offsets 0, stride, 2*stride, ...

    Generation stops after the first span whose end reaches the answer
    length, so exactly one tail-touching span is emitted.
    """
    starts = _span_starts(len(answer), cfg)
    return [
        TokenSequence(answer.tokens[s : s + cfg.span_length])
        for s in starts
    ]


def _span_starts(n_tokens: int, cfg: SpanConfig) -> list[int]:
    if n_tokens == 0:
        return []
    starts = []
    s = 0
    while True:
        starts.append(s)
        if s + cfg.span_length >= n_tokens:
            break
        s += cfg.stride
    return starts


def s_rwmd_q(question: TokenSequence, answer: TokenSequence, table: EmbeddingTable,
             cfg: SpanConfig = SpanConfig(),
             policy: LookupPolicy = LookupPolicy()) -> float:
    """Max over answer spans of rwmd_q(question, span)."""
    qmat = _question_matrix(question, table, policy)
    starts = _span_starts(len(answer), cfg)
    if qmat.shape[0] == 0 or not starts:
        return 0.0
    arows = lookup_rows(answer.tokens, table, policy)
    valid = np.nonzero(arows >= 0)[0]
    if valid.shape[0] == 0:
        return 0.0
    sim = np.ascontiguousarray(np.dot(qmat, table.matrix[arows[valid]].T))
    # map span windows over raw positions onto columns of the dense sim matrix
    starts_arr = np.asarray(starts, dtype=np.int64)
    lo = np.searchsorted(valid, starts_arr, side="left").astype(np.int64)
    hi = np.searchsorted(valid, starts_arr + cfg.span_length - 1, side="right").astype(np.int64)
    return float(_kernels.span_best_mean(sim, lo, hi))


def _pool_vectors(rows: np.ndarray, table: EmbeddingTable) -> tuple[np.ndarray, np.ndarray]:
    vecs = table.matrix[rows]
    return np.max(vecs, axis=0), np.min(vecs, axis=0)


def _pool_similarity(a: np.ndarray, b: np.ndarray) -> float:
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    value = float(np.dot(a, b)) / (na * nb)
    return max(-1.0, min(1.0, value))


def mmp_components(question: TokenSequence, answer: TokenSequence,
                   table: EmbeddingTable, cfg: MmpConfig = MmpConfig(),
                   policy: LookupPolicy = LookupPolicy()) -> tuple[float, float]:
    """Cosines between pooled vectors of the answer prefix alone vs with
    the question appended: (max-pool term, min-pool term).
    """
    arows = lookup_rows(answer.tokens, table, policy)
    arows = arows[arows >= 0][: cfg.answer_prefix_tokens]
    qrows = lookup_rows(question.tokens, table, policy)
    qrows = qrows[qrows >= 0]
    if arows.shape[0] == 0:
        return 0.0, 0.0
    amax, amin = _pool_vectors(arows, table)
    aqmax, aqmin = _pool_vectors(np.concatenate([arows, qrows]), table)
    return _pool_similarity(amax, aqmax), _pool_similarity(amin, aqmin)


def mmp(question: TokenSequence, answer: TokenSequence, table: EmbeddingTable,
        cfg: MmpConfig = MmpConfig(), policy: LookupPolicy = LookupPolicy()) -> float:
    """Blend of the pooled similarities; the weight goes to the max-pool term."""
    max_sim, min_sim = mmp_components(question, answer, table, cfg, policy)
    return cfg.blend_weight * max_sim + (1.0 - cfg.blend_weight) * min_sim
