"""Ranking metrics, significance testing, and TREC-format file handling.

NDCG uses the 2^rel - 1 gain with a log2(rank + 1) discount, truncated at
k. The one-tailed paired t-test computes its p-value from the regularized
incomplete beta function and tests H1: mean(a) > mean(b).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betainc

Judgments = dict[str, dict[str, int]]


def ndcg_at_k(ranking: list[str], judgments: dict[str, int], k: int = 20) -> float:
    """NDCG truncated at k; 0 when the query has no relevant documents."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    gains = sorted((rel for rel in judgments.values() if rel > 0), reverse=True)
    if not gains:
        return 0.0
    ideal = 0.0
    for i, rel in enumerate(gains[:k]):
        ideal += (2.0 ** rel - 1.0) / math.log2(i + 2)
    dcg = 0.0
    for i, doc_id in enumerate(ranking[:k]):
        rel = judgments.get(doc_id, 0)
        if rel > 0:
            dcg += (2.0 ** rel - 1.0) / math.log2(i + 2)
    return dcg / ideal


def precision_at_1(ranking: list[str], judgments: dict[str, int]) -> float:
    """1.0 iff the top-ranked document is relevant."""
    if not ranking:
        return 0.0
    return 1.0 if judgments.get(ranking[0], 0) > 0 else 0.0


def t_cdf(t: float, df: int) -> float:
    """Student-t CDF via the regularized incomplete beta function."""
    if df < 1:
        raise ValueError(f"df must be >= 1, got {df}")
    x = df / (df + t * t)
    tail = 0.5 * float(betainc(df / 2.0, 0.5, x))
    return 1.0 - tail if t >= 0 else tail


def paired_t_one_tailed(a: list[float], b: list[float]) -> tuple[float | None, float | None]:
    """One-tailed paired t-test of H1: mean(a) > mean(b).

    Returns (t, p); (None, None) when the differences have zero variance,
    where the test is undefined.
    """
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    n = len(a)
    if n < 2:
        raise ValueError(f"need at least 2 paired values, got {n}")
    d = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    sd = float(np.std(d, ddof=1))
    if sd == 0.0:
        return None, None
    t = float(np.mean(d)) / (sd / math.sqrt(n))
    return t, 1.0 - t_cdf(t, n - 1)


def cross_validation_splits(query_ids: list[str], folds: int = 5,
                            seed: int = 0) -> dict[str, int]:
    """Seeded partition into folds whose sizes differ by at most one."""
    if folds < 1:
        raise ValueError(f"folds must be >= 1, got {folds}")
    ids = sorted(query_ids)
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate query ids")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(ids))
    assignment: dict[str, int] = {}
    base, extra = divmod(len(ids), folds)
    cursor = 0
    for fold in range(folds):
        size = base + (1 if fold < extra else 0)
        for position in order[cursor : cursor + size]:
            assignment[ids[position]] = fold
        cursor += size
    return assignment


def load_qrels(path: str) -> Judgments:
    """TREC qrels: "qid 0 docid rel" per line."""
    judgments: Judgments = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ValueError(f"{path}:{lineno}: expected 4 fields, got {len(parts)}")
            qid, _, doc_id, rel = parts
            rel_value = int(rel)
            if rel_value < 0:
                raise ValueError(f"{path}:{lineno}: negative relevance {rel_value}")
            judgments.setdefault(qid, {})[doc_id] = rel_value
    return judgments


def load_run(path: str) -> dict[str, list[str]]:
    """TREC run: "qid Q0 docid rank score tag"; rankings ordered by rank."""
    rows: dict[str, list[tuple[int, str]]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 6:
                raise ValueError(f"{path}:{lineno}: expected 6 fields, got {len(parts)}")
            qid, _, doc_id, rank, _score, _tag = parts
            rows.setdefault(qid, []).append((int(rank), doc_id))
    return {
        qid: [doc_id for _, doc_id in sorted(entries)]
        for qid, entries in rows.items()
    }


def write_run(path: str, rankings: dict[str, list[tuple[str, float]]], tag: str) -> None:
    """Write scored rankings in TREC format with fixed 6-decimal scores."""
    with open(path, "w", encoding="utf-8") as fh:
        for qid in sorted(rankings):
            for rank, (doc_id, score) in enumerate(rankings[qid], 1):
                fh.write(f"{qid} Q0 {doc_id} {rank} {score:.6f} {tag}\n")


METRICS = ("ndcg@20", "p@1")


def _metric_value(metric: str, ranking: list[str], judgments: dict[str, int]) -> float:
    if metric.startswith("ndcg@"):
        return ndcg_at_k(ranking, judgments, int(metric.split("@")[1]))
    if metric == "p@1":
        return precision_at_1(ranking, judgments)
    raise ValueError(f"unknown metric {metric!r}")


@dataclass
class EvalReport:
    """Per-query metric values, per-system means, pairwise significance."""

    systems: list[str]
    query_ids: list[str]
    per_query: dict[str, dict[str, dict[str, float]]]  # system -> metric -> qid -> value
    means: dict[str, dict[str, float]]  # system -> metric -> mean
    significance: dict[str, dict[tuple[str, str], tuple[float | None, float | None]]] = field(
        default_factory=dict)
    zero_relevant_queries: int = 0
    alpha: float = 0.05

    def beats(self, metric: str) -> dict[str, list[str]]:
        """For each system, the systems it significantly outperforms."""
        out: dict[str, list[str]] = {s: [] for s in self.systems}
        for (a, b), (_t, p) in self.significance.get(metric, {}).items():
            if p is not None and p < self.alpha:
                out[a].append(b)
        return out

    def to_json(self) -> str:
        payload = {
            "systems": self.systems,
            "query_ids": self.query_ids,
            "alpha": self.alpha,
            "zero_relevant_queries": self.zero_relevant_queries,
            "means": self.means,
            "per_query": self.per_query,
            "significance": {
                metric: {
                    f"{a}>{b}": {"t": t, "p": p}
                    for (a, b), (t, p) in pairs.items()
                }
                for metric, pairs in self.significance.items()
            },
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    def to_tsv(self) -> str:
        """Summary table; the sig columns mirror superscript annotations."""
        numbered = {s: i + 1 for i, s in enumerate(self.systems)}
        lines = ["system\t" + "\t".join(
            f"{m}\tsig_{m}" for m in sorted(self.means[self.systems[0]]))]
        for system in self.systems:
            cells = [system]
            for metric in sorted(self.means[system]):
                cells.append(f"{self.means[system][metric]:.4f}")
                beaten = sorted(numbered[s] for s in self.beats(metric).get(system, []))
                cells.append("[" + ",".join(str(i) for i in beaten) + "]" if beaten else "-")
            lines.append("\t".join(cells))
        return "\n".join(lines) + "\n"


def evaluate_systems(runs: dict[str, dict[str, list[str]]], qrels: Judgments,
                     metrics: tuple[str, ...] = METRICS, alpha: float = 0.05) -> EvalReport:
    """Score every system on every judged query and t-test all ordered pairs.

    Queries come from the qrels; a system missing a query contributes an
    empty ranking for it (metric 0). Queries with no relevant documents
    score 0 and are counted in zero_relevant_queries.
    """
    systems = sorted(runs)
    query_ids = sorted(qrels)
    zero_relevant = sum(
        1 for qid in query_ids if not any(r > 0 for r in qrels[qid].values()))
    per_query: dict[str, dict[str, dict[str, float]]] = {}
    means: dict[str, dict[str, float]] = {}
    for system in systems:
        per_query[system] = {m: {} for m in metrics}
        for qid in query_ids:
            ranking = runs[system].get(qid, [])
            for metric in metrics:
                per_query[system][metric][qid] = _metric_value(metric, ranking, qrels[qid])
        means[system] = {
            m: float(np.mean([per_query[system][m][q] for q in query_ids]))
            for m in metrics
        }
    report = EvalReport(systems, query_ids, per_query, means,
                        zero_relevant_queries=zero_relevant, alpha=alpha)
    if len(systems) > 1 and len(query_ids) >= 2:
        for metric in metrics:
            pairs: dict[tuple[str, str], tuple[float | None, float | None]] = {}
            for a in systems:
                for b in systems:
                    if a == b:
                        continue
                    va = [per_query[a][metric][q] for q in query_ids]
                    vb = [per_query[b][metric][q] for q in query_ids]
                    pairs[(a, b)] = paired_t_one_tailed(va, vb)
            report.significance[metric] = pairs
    return report
