"""End-to-end scoring pipelines shared by the CLI and the test suite.

A pipeline takes first-pass candidates, attaches the channels it needs
(rwmd / mmp / srwmd / rm), and fuses them. Per-query work is independent;
with threads > 1 queries are scored concurrently and merged in query-id
order so the output is identical to the single-threaded run.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .analysis import AnalyzerConfig, TokenSequence, analyze
from .candidates import CandidateList
from .embeddings import EmbeddingTable, LookupPolicy
from .fusion import NAMED_PIPELINES, fuse
from .index import InvertedIndex, retrieve
from .relevance import RmConfig, rm_rescore
from .scorers import MmpConfig, SpanConfig, mmp, rwmd_q, s_rwmd_q


class UsageError(ValueError):
    """Bad invocation: unknown pipeline, missing required inputs."""


@dataclass
class PipelineSettings:
    k: int = 400
    mu: float = 2000.0
    span: SpanConfig = field(default_factory=SpanConfig)
    mmp: MmpConfig = field(default_factory=MmpConfig)
    rm: RmConfig = field(default_factory=RmConfig)
    policy: LookupPolicy = field(default_factory=LookupPolicy)
    threads: int = 1


def pipeline_channels(name: str) -> tuple[str, ...]:
    try:
        return NAMED_PIPELINES[name]
    except KeyError:
        valid = ", ".join(sorted(NAMED_PIPELINES))
        raise UsageError(f"unknown pipeline {name!r}; valid pipelines: {valid}") from None


def needs_embeddings(name: str) -> bool:
    return any(c in ("rwmd", "mmp", "srwmd") for c in pipeline_channels(name))


class _SurfaceCache:
    """Per-run cache of surface-form token sequences for stored docs."""

    def __init__(self, index: InvertedIndex, analyzer: AnalyzerConfig):
        self._index = index
        self._analyzer = analyzer.surface_variant()
        self._cache: dict[str, TokenSequence] = {}

    def tokens(self, doc_id: str) -> TokenSequence:
        seq = self._cache.get(doc_id)
        if seq is None:
            seq = analyze(self._index.docs[doc_id].raw_text, self._analyzer)
            self._cache[doc_id] = seq
        return seq


def score_query(query_id: str, query_text: str, pipeline: str,
                index: InvertedIndex, table: EmbeddingTable | None,
                settings: PipelineSettings,
                surface_cache: _SurfaceCache | None = None) -> CandidateList:
    """Run one pipeline for one query; returns the final sorted candidates."""
    channels = pipeline_channels(pipeline)
    if needs_embeddings(pipeline) and table is None:
        raise UsageError(f"pipeline {pipeline!r} needs an embedding table")
    analyzed = analyze(query_text, index.analyzer)
    candidates = retrieve(analyzed, index, settings.k, settings.mu, query_id)
    if not candidates.entries:
        return candidates

    if "rm" in channels:
        candidates = rm_rescore(analyzed, candidates, index, settings.rm)

    embed_channels = [c for c in channels if c in ("rwmd", "mmp", "srwmd")]
    if embed_channels:
        if surface_cache is None:
            surface_cache = _SurfaceCache(index, index.analyzer)
        surface_query = analyze(query_text, index.analyzer.surface_variant())
        for entry in candidates.entries:
            answer = surface_cache.tokens(entry.doc_id)
            if "rwmd" in embed_channels:
                entry.channels["rwmd"] = rwmd_q(surface_query, answer, table,
                                                settings.policy)
            if "srwmd" in embed_channels:
                entry.channels["srwmd"] = s_rwmd_q(surface_query, answer, table,
                                                   settings.span, settings.policy)
            if "mmp" in embed_channels:
                entry.channels["mmp"] = mmp(surface_query, answer, table,
                                            settings.mmp, settings.policy)

    if len(channels) >= 2:
        candidates = fuse(candidates, channels)
    else:
        candidates.resort(channels[0])
    candidates.metadata["pipeline"] = pipeline
    return candidates


def run_pipeline(queries: list[tuple[str, str]], pipeline: str,
                 index: InvertedIndex, table: EmbeddingTable | None,
                 settings: PipelineSettings) -> dict[str, CandidateList]:
    """Score every query; thread count never changes the output."""
    pipeline_channels(pipeline)  # validate up front
    cache = _SurfaceCache(index, index.analyzer)

    def work(item: tuple[str, str]) -> tuple[str, CandidateList]:
        qid, text = item
        return qid, score_query(qid, text, pipeline, index, table, settings, cache)

    if settings.threads > 1:
        with ThreadPoolExecutor(max_workers=settings.threads) as pool:
            results = dict(pool.map(work, queries))
    else:
        results = dict(work(item) for item in queries)
    return {qid: results[qid] for qid, _ in queries}


def rankings_for_run(results: dict[str, CandidateList]) -> dict[str, list[tuple[str, float]]]:
    """(doc id, active-channel score) pairs per query, ready for write_run."""
    out: dict[str, list[tuple[str, float]]] = {}
    for qid, clist in results.items():
        channel = clist.active_channel
        out[qid] = [(e.doc_id, e.channels[channel]) for e in clist.entries]
    return out
