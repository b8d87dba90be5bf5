"""Learning-to-rank feature extraction, per-query standardization, LETOR IO.

Base features are term-coverage ratios over the analyzed (stemmed) token
space plus the raw LM score; embedding features reuse the semantic
scorers. Standardized twins ("<name>.z") use the population standard
deviation so a single candidate standardizes to 0.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .analysis import TokenSequence, ngrams
from .candidates import CandidateList
from .embeddings import EmbeddingTable, LookupPolicy, lookup_rows
from .index import DataError, InvertedIndex, lm_dirichlet_score
from .scorers import MmpConfig, SpanConfig, mmp_components, rwmd_q, s_rwmd_q

BASE_FEATURES = ("unigram", "bigram", "skipgram", "sloppy_bigram", "lm")
EMBEDDING_FEATURES = ("rwmd_q", "mmp_max", "mmp_min", "s_rwmd_q")

# skipgram: ordered question pairs with <= 2 intervening tokens, matched
# anywhere in the answer within a 10-token window; sloppy bigram: adjacent
# question pairs matched in either order within a 3-token window.
SKIPGRAM_MAX_GAP = 2
SKIPGRAM_WINDOW = 10
SLOPPY_WINDOW = 3


def _coverage(matched: int, total: int) -> float:
    return matched / total if total else 0.0


def _positions(tokens: tuple[str, ...]) -> dict[str, list[int]]:
    index: dict[str, list[int]] = {}
    for i, tok in enumerate(tokens):
        index.setdefault(tok, []).append(i)
    return index


def _ordered_pair_within(positions, a: str, b: str, window: int) -> bool:
    for p in positions.get(a, ()):
        for r in positions.get(b, ()):
            if p < r and r - p <= window - 1:
                return True
    return False


def _unordered_pair_within(positions, a: str, b: str, window: int) -> bool:
    for p in positions.get(a, ()):
        for r in positions.get(b, ()):
            if p != r and abs(r - p) <= window - 1:
                return True
    return False


def extract_base_features(query: TokenSequence, doc_id: str,
                          index: InvertedIndex, mu: float = 2000.0) -> dict[str, float]:
    """Coverage ratios over distinct question n-grams plus the LM score."""
    doc = index.docs.get(doc_id)
    if doc is None:
        raise DataError(f"unknown doc id {doc_id!r}")
    answer = doc.tokens.tokens
    answer_set = set(answer)
    positions = _positions(answer)

    q_unigrams = sorted(set(query.tokens))
    unigram = _coverage(sum(1 for t in q_unigrams if t in answer_set), len(q_unigrams))

    q_bigrams = sorted(set(ngrams(query, 2)))
    answer_bigrams = set(ngrams(doc.tokens, 2))
    bigram = _coverage(sum(1 for b in q_bigrams if b in answer_bigrams), len(q_bigrams))

    q_pairs = set()
    toks = query.tokens
    for i in range(len(toks)):
        for j in range(i + 1, min(i + SKIPGRAM_MAX_GAP + 2, len(toks))):
            q_pairs.add((toks[i], toks[j]))
    skipgram = _coverage(
        sum(1 for a, b in sorted(q_pairs)
            if _ordered_pair_within(positions, a, b, SKIPGRAM_WINDOW)),
        len(q_pairs))

    sloppy_pairs = sorted({(toks[i], toks[i + 1]) for i in range(len(toks) - 1)})
    sloppy = _coverage(
        sum(1 for a, b in sloppy_pairs
            if _unordered_pair_within(positions, a, b, SLOPPY_WINDOW)),
        len(sloppy_pairs))

    return {
        "unigram": unigram,
        "bigram": bigram,
        "skipgram": skipgram,
        "sloppy_bigram": sloppy,
        "lm": lm_dirichlet_score(query, doc_id, index, mu),
    }


def extract_embedding_features(question: TokenSequence, answer: TokenSequence,
                               table: EmbeddingTable,
                               span_cfg: SpanConfig = SpanConfig(),
                               mmp_cfg: MmpConfig = MmpConfig(),
                               policy: LookupPolicy = LookupPolicy()) -> dict[str, float]:
    # a question with no vectors carries no semantic signal: zero every
    # feature rather than let the mmp identity (AQ = A -> 1) leak in
    rows = lookup_rows(question.tokens, table, policy)
    if not (rows >= 0).any():
        return {"rwmd_q": 0.0, "mmp_max": 0.0, "mmp_min": 0.0, "s_rwmd_q": 0.0}
    mmp_max, mmp_min = mmp_components(question, answer, table, mmp_cfg, policy)
    return {
        "rwmd_q": rwmd_q(question, answer, table, policy),
        "mmp_max": mmp_max,
        "mmp_min": mmp_min,
        "s_rwmd_q": s_rwmd_q(question, answer, table, span_cfg, policy),
    }


@dataclass
class FeatureRow:
    query_id: str
    doc_id: str
    label: int
    values: np.ndarray


@dataclass
class FeatureMatrix:
    schema: list[str]
    rows: list[FeatureRow] = field(default_factory=list)
    missing_filled: int = 0

    def add(self, query_id: str, doc_id: str, label: int,
            features: dict[str, float]) -> None:
        values = np.zeros(len(self.schema))
        for i, name in enumerate(self.schema):
            if name in features:
                values[i] = features[name]
            else:
                self.missing_filled += 1
        self.rows.append(FeatureRow(query_id, doc_id, label, values))

    def sort(self) -> None:
        self.rows.sort(key=lambda r: (r.query_id, r.doc_id))

    def query_ids(self) -> list[str]:
        return sorted({r.query_id for r in self.rows})

    def rows_for_query(self, query_id: str) -> list[FeatureRow]:
        return [r for r in self.rows if r.query_id == query_id]

    def schema_hash(self) -> str:
        return hashlib.sha256("\n".join(self.schema).encode("utf-8")).hexdigest()


def standardize_per_query(matrix: FeatureMatrix) -> FeatureMatrix:
    """Append "<name>.z" columns: per-query z-scores with population stddev.

    Constant columns (and single-candidate queries) standardize to 0.
    """
    base = list(matrix.schema)
    out = FeatureMatrix(schema=base + [f"{name}.z" for name in base])
    out.missing_filled = matrix.missing_filled
    groups: dict[str, list[FeatureRow]] = {}
    for row in matrix.rows:
        groups.setdefault(row.query_id, []).append(row)
    for query_id in sorted(groups):
        rows = groups[query_id]
        block = np.vstack([r.values for r in rows])
        mean = block.mean(axis=0)
        std = block.std(axis=0)
        z = np.where(std > 0.0, (block - mean) / np.where(std > 0.0, std, 1.0), 0.0)
        for row, zrow in zip(rows, z):
            out.rows.append(FeatureRow(
                row.query_id, row.doc_id, row.label,
                np.concatenate([row.values, zrow])))
    out.sort()
    return out


def export_letor(matrix: FeatureMatrix, path: str) -> None:
    """SVMrank-style lines plus a "<path>.schema" sidecar mapping indexes."""
    ordered = sorted(matrix.rows, key=lambda r: (r.query_id, r.doc_id))
    with open(path, "w", encoding="utf-8") as fh:
        for row in ordered:
            feats = " ".join(
                f"{i + 1}:{repr(float(v))}" for i, v in enumerate(row.values))
            fh.write(f"{row.label} qid:{row.query_id} {feats} # {row.doc_id}\n")
    with open(path + ".schema", "w", encoding="utf-8") as fh:
        fh.write(f"# schema_sha256 {matrix.schema_hash()}\n")
        for i, name in enumerate(matrix.schema):
            fh.write(f"{i + 1}\t{name}\n")


def parse_letor(path: str, schema_path: str | None = None) -> FeatureMatrix:
    """Inverse of export_letor; missing feature indexes fill with 0."""
    if schema_path is None:
        schema_path = path + ".schema"
    schema: list[str] = []
    with open(schema_path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            idx, name = line.split("\t")
            if int(idx) != len(schema) + 1:
                raise DataError(f"{schema_path}: non-contiguous feature index {idx}")
            schema.append(name)
    matrix = FeatureMatrix(schema=schema)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            body, _, comment = line.partition("#")
            doc_id = comment.strip()
            parts = body.split()
            if len(parts) < 2 or not parts[1].startswith("qid:"):
                raise DataError(f"{path}:{lineno}: malformed LETOR line")
            label = int(parts[0])
            query_id = parts[1][4:]
            values = np.zeros(len(schema))
            seen = 0
            for item in parts[2:]:
                idx_str, _, val_str = item.partition(":")
                idx = int(idx_str) - 1
                if not 0 <= idx < len(schema):
                    raise DataError(f"{path}:{lineno}: feature index {idx + 1} out of range")
                values[idx] = float(val_str)
                seen += 1
            matrix.missing_filled += len(schema) - seen
            matrix.rows.append(FeatureRow(query_id, doc_id, label, values))
    return matrix


def matrix_to_candidates(matrix: FeatureMatrix, scores: dict[tuple[str, str], float],
                         channel: str) -> dict[str, CandidateList]:
    """Assemble per-query candidate lists from scored feature rows."""
    from .candidates import Candidate

    lists: dict[str, CandidateList] = {}
    for row in matrix.rows:
        clist = lists.setdefault(
            row.query_id, CandidateList(row.query_id, metadata={"active_channel": channel}))
        clist.entries.append(
            Candidate(row.doc_id, {channel: scores[(row.query_id, row.doc_id)]}))
    for clist in lists.values():
        clist.resort(channel)
    return lists
