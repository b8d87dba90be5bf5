"""Inverted index with Dirichlet-smoothed language-model retrieval.

The per-term score mirrors the reference engine's form:

    max(0, log(1 + tf / (mu * p(t|C))) + log(mu / (mu + |d|)))

so very common terms can contribute nothing (the per-term floor).
Index persistence uses the length-prefixed binary layout documented in
the README.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .analysis import AnalyzerConfig, TokenSequence, analyze
from .candidates import Candidate, CandidateList


class DataError(ValueError):
    """Bad input data: duplicate ids, unknown ids, malformed files."""


@dataclass
class StoredDoc:
    doc_id: str
    raw_text: str
    tokens: TokenSequence


@dataclass
class InvertedIndex:
    analyzer: AnalyzerConfig
    postings: dict[str, list[tuple[int, int]]] = field(default_factory=dict)
    collection_tf: dict[str, int] = field(default_factory=dict)
    doc_ids: list[str] = field(default_factory=list)
    doc_lengths: list[int] = field(default_factory=list)
    docs: dict[str, StoredDoc] = field(default_factory=dict)
    collection_length: int = 0

    @property
    def doc_count(self) -> int:
        return len(self.doc_ids)

    def doc_length(self, doc_id: str) -> int:
        doc = self.docs.get(doc_id)
        if doc is None:
            raise DataError(f"unknown doc id {doc_id!r}")
        return len(doc.tokens)

    def term_frequency(self, term: str, doc_id: str) -> int:
        doc = self.docs.get(doc_id)
        if doc is None:
            raise DataError(f"unknown doc id {doc_id!r}")
        return sum(1 for t in doc.tokens if t == term)

    def p_collection(self, term: str) -> float:
        return self.collection_tf.get(term, 0) / self.collection_length


def build_index(corpus, config: AnalyzerConfig) -> InvertedIndex:
    """Index a stream of (doc_id, text) pairs.

    Raises DataError on an empty corpus or a duplicate doc id.
    """
    index = InvertedIndex(analyzer=config)
    tf_maps: list[dict[str, int]] = []
    for doc_id, text in corpus:
        if doc_id in index.docs:
            raise DataError(f"duplicate doc id {doc_id!r}")
        seq = analyze(text, config)
        ordinal = len(index.doc_ids)
        index.doc_ids.append(doc_id)
        index.doc_lengths.append(len(seq))
        index.docs[doc_id] = StoredDoc(doc_id, text, seq)
        index.collection_length += len(seq)
        counts: dict[str, int] = {}
        for tok in seq.tokens:
            counts[tok] = counts.get(tok, 0) + 1
        tf_maps.append(counts)
        for term, tf in counts.items():
            index.collection_tf[term] = index.collection_tf.get(term, 0) + tf
        del ordinal
    if not index.doc_ids:
        raise DataError("empty corpus")
    for ordinal, counts in enumerate(tf_maps):
        for term, tf in counts.items():
            index.postings.setdefault(term, []).append((ordinal, tf))
    return index


def dirichlet_term_weight(tf: int, doc_length: int, p_collection: float,
                          mu: float) -> float:
    """Pre-floor per-term contribution: log(1 + tf/(mu*p)) + log(mu/(mu+|d|))."""
    return float(np.log(1.0 + tf / (mu * p_collection))) + float(
        np.log(mu / (mu + doc_length)))


def lm_dirichlet_score(query: TokenSequence, doc_id: str,
                       index: InvertedIndex, mu: float) -> float:
    """Sum of floored per-term Dirichlet LM contributions for one document."""
    if mu <= 0:
        raise ValueError(f"mu must be > 0, got {mu}")
    doc = index.docs.get(doc_id)
    if doc is None:
        raise DataError(f"unknown doc id {doc_id!r}")
    dl = len(doc.tokens)
    score = 0.0
    # sorted unique terms with query-tf weighting: bitwise identical to
    # the posting-driven accumulation in retrieve()
    for term in sorted(set(query.tokens)):
        ctf = index.collection_tf.get(term, 0)
        if ctf == 0:
            continue
        tf = index.term_frequency(term, doc_id)
        if tf == 0:
            continue
        qtf = sum(1 for t in query.tokens if t == term)
        p_c = ctf / index.collection_length
        score += max(0.0, dirichlet_term_weight(tf, dl, p_c, mu)) * qtf
    return score


def retrieve(query: TokenSequence, index: InvertedIndex,
             k: int = 400, mu: float = 2000.0, query_id: str = "") -> CandidateList:
    """Top-k candidates by LM score; docs scoring 0 on every term are excluded."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if mu <= 0:
        raise ValueError(f"mu must be > 0, got {mu}")
    accum: dict[int, float] = {}
    for term in sorted(set(query.tokens)):
        plist = index.postings.get(term)
        if not plist:
            continue
        # query terms score per occurrence: weight by query tf
        qtf = sum(1 for t in query.tokens if t == term)
        p_c = index.collection_tf[term] / index.collection_length
        for ordinal, tf in plist:
            dl = index.doc_lengths[ordinal]
            contribution = max(0.0, dirichlet_term_weight(tf, dl, p_c, mu)) * qtf
            if contribution > 0.0:
                accum[ordinal] = accum.get(ordinal, 0.0) + contribution
    scored = [
        (index.doc_ids[ordinal], score)
        for ordinal, score in accum.items()
        if score > 0.0
    ]
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    result = CandidateList(query_id=query_id,
                           metadata={"active_channel": "lm", "mu": repr(mu)})
    for doc_id, score in scored[:k]:
        result.entries.append(Candidate(doc_id, {"lm": score}))
    return result


_MAGICS = {"stats": b"EMBRSTAT", "postings": b"EMBRPOST", "docstore": b"EMBRDOCS"}
_VERSION = 1


def _write_str(fh, s: str) -> None:
    raw = s.encode("utf-8")
    fh.write(struct.pack("<I", len(raw)))
    fh.write(raw)


def _read_str(fh) -> str:
    (n,) = struct.unpack("<I", fh.read(4))
    return fh.read(n).decode("utf-8")


def _open_section(fh, kind: str) -> None:
    fh.write(_MAGICS[kind])
    fh.write(struct.pack("<I", _VERSION))


def _check_section(fh, kind: str, path: str) -> None:
    magic = fh.read(8)
    if magic != _MAGICS[kind]:
        raise DataError(f"{path}: bad magic {magic!r}")
    (version,) = struct.unpack("<I", fh.read(4))
    if version != _VERSION:
        raise DataError(f"{path}: unsupported version {version}")


def save_index(index: InvertedIndex, directory: str) -> None:
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, "stats.bin"), "wb") as fh:
        _open_section(fh, "stats")
        fh.write(struct.pack("<QI", index.collection_length, index.doc_count))
        _write_str(fh, json.dumps(index.analyzer.to_dict(), sort_keys=True))
    with open(os.path.join(directory, "postings.bin"), "wb") as fh:
        _open_section(fh, "postings")
        fh.write(struct.pack("<I", len(index.postings)))
        for term in sorted(index.postings):
            plist = index.postings[term]
            _write_str(fh, term)
            fh.write(struct.pack("<QI", index.collection_tf[term], len(plist)))
            for ordinal, tf in plist:
                fh.write(struct.pack("<II", ordinal, tf))
    with open(os.path.join(directory, "docstore.bin"), "wb") as fh:
        _open_section(fh, "docstore")
        fh.write(struct.pack("<I", index.doc_count))
        for ordinal, doc_id in enumerate(index.doc_ids):
            doc = index.docs[doc_id]
            _write_str(fh, doc_id)
            fh.write(struct.pack("<I", index.doc_lengths[ordinal]))
            _write_str(fh, doc.raw_text)
            fh.write(struct.pack("<I", len(doc.tokens)))
            for tok in doc.tokens.tokens:
                _write_str(fh, tok)


def load_index(directory: str) -> InvertedIndex:
    stats_path = os.path.join(directory, "stats.bin")
    with open(stats_path, "rb") as fh:
        _check_section(fh, "stats", stats_path)
        collection_length, doc_count = struct.unpack("<QI", fh.read(12))
        analyzer = AnalyzerConfig.from_dict(json.loads(_read_str(fh)))
    index = InvertedIndex(analyzer=analyzer, collection_length=collection_length)
    postings_path = os.path.join(directory, "postings.bin")
    with open(postings_path, "rb") as fh:
        _check_section(fh, "postings", postings_path)
        (term_count,) = struct.unpack("<I", fh.read(4))
        for _ in range(term_count):
            term = _read_str(fh)
            ctf, df = struct.unpack("<QI", fh.read(12))
            plist = [struct.unpack("<II", fh.read(8)) for _ in range(df)]
            index.postings[term] = [(int(o), int(tf)) for o, tf in plist]
            index.collection_tf[term] = int(ctf)
    docstore_path = os.path.join(directory, "docstore.bin")
    with open(docstore_path, "rb") as fh:
        _check_section(fh, "docstore", docstore_path)
        (stored_count,) = struct.unpack("<I", fh.read(4))
        if stored_count != doc_count:
            raise DataError(f"{docstore_path}: doc count disagrees with stats")
        for _ in range(stored_count):
            doc_id = _read_str(fh)
            (dl,) = struct.unpack("<I", fh.read(4))
            raw_text = _read_str(fh)
            (n_tokens,) = struct.unpack("<I", fh.read(4))
            toks = tuple(_read_str(fh) for _ in range(n_tokens))
            index.doc_ids.append(doc_id)
            index.doc_lengths.append(dl)
            index.docs[doc_id] = StoredDoc(doc_id, raw_text, TokenSequence(toks))
    return index
