"""Pseudo-relevance-feedback re-ranker: RM1 estimate plus query interpolation.

The feedback distribution is estimated from the top LM-scored candidates,
mixed with the original query, and candidates are rescored by negative
cross-entropy under Dirichlet-smoothed document models. Stand-in defaults;
all four knobs are exposed through the run configuration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .analysis import TokenSequence
from .candidates import CandidateList
from .index import DataError, InvertedIndex


@dataclass(frozen=True)
class RmConfig:
    fb_docs: int = 10
    fb_terms: int = 50
    interp_lambda: float = 0.5
    mu: float = 2000.0

    def __post_init__(self):
        if self.fb_docs < 1 or self.fb_terms < 1:
            raise ValueError("fb_docs and fb_terms must be >= 1")
        if not 0.0 <= self.interp_lambda <= 1.0:
            raise ValueError("interp_lambda must be in [0, 1]")
        if self.mu <= 0:
            raise ValueError("mu must be > 0")


def _p_term_doc(term: str, doc_id: str, index: InvertedIndex, mu: float) -> float:
    tf = index.term_frequency(term, doc_id)
    dl = index.doc_length(doc_id)
    return (tf + mu * index.p_collection(term)) / (dl + mu)


def estimate_relevance_model(query: TokenSequence, candidates: CandidateList,
                             index: InvertedIndex, cfg: RmConfig) -> dict[str, float]:
    """RM1 term distribution from the top feedback documents.

    p(w|R) is proportional to sum over feedback docs of p(w|d) * p(Q|d),
    where p(Q|d) comes from exponentiated LM scores normalized over the
    feedback set; truncated to fb_terms terms and renormalized.
    """
    if not candidates.entries:
        raise DataError(f"empty candidate list for query {candidates.query_id!r}")
    feedback = candidates.entries[: cfg.fb_docs]
    lm_scores = [entry.channels["lm"] for entry in feedback]
    weights = [math.exp(s) for s in lm_scores]
    total_weight = sum(weights)
    weights = [w / total_weight for w in weights]

    support: set[str] = set()
    for entry in feedback:
        support.update(index.docs[entry.doc_id].tokens.tokens)
    estimate: dict[str, float] = {}
    for term in support:
        mass = 0.0
        for entry, weight in zip(feedback, weights):
            mass += _p_term_doc(term, entry.doc_id, index, cfg.mu) * weight
        estimate[term] = mass

    top = sorted(estimate.items(), key=lambda kv: (-kv[1], kv[0]))[: cfg.fb_terms]
    norm = sum(p for _, p in top)
    return {term: p / norm for term, p in top}


def rm_rescore(query: TokenSequence, candidates: CandidateList,
               index: InvertedIndex, cfg: RmConfig) -> CandidateList:
    """Attach an "rm" channel (negative cross-entropy) and re-sort.

    Membership never changes; query terms absent from the collection are
    dropped from the interpolated query model.
    """
    relevance_model = estimate_relevance_model(query, candidates, index, cfg)
    query_terms = [t for t in query.tokens if index.collection_tf.get(t, 0) > 0]
    query_model: dict[str, float] = {}
    if query_terms:
        unit = 1.0 / len(query_terms)
        for term in query_terms:
            query_model[term] = query_model.get(term, 0.0) + unit

    mixed: dict[str, float] = {}
    lam = cfg.interp_lambda if query_model else 0.0
    for term, p in query_model.items():
        mixed[term] = lam * p
    for term, p in relevance_model.items():
        mixed[term] = mixed.get(term, 0.0) + (1.0 - lam) * p

    rescored = candidates.copy()
    terms = sorted(mixed)
    for entry in rescored.entries:
        score = 0.0
        for term in terms:
            score += mixed[term] * math.log(_p_term_doc(term, entry.doc_id, index, cfg.mu))
        entry.channels["rm"] = score
    rescored.resort("rm")
    rescored.metadata["rm_config"] = (
        f"fb_docs={cfg.fb_docs},fb_terms={cfg.fb_terms},"
        f"interp_lambda={cfg.interp_lambda},mu={cfg.mu}"
    )
    return rescored
