"""Text analysis chain: tokenize, lowercase, possessive strip, stop, stem.

The same chain (with different switches) feeds indexing, querying and the
embedding scorers, so analysis must stay a pure function of (text, config).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources

from .porter import stem as porter_stem

# [^\W_] = Unicode alphanumeric without the underscore
_TOKEN_RE = re.compile(r"[^\W_]+")
_POSSESSIVE_RE = re.compile(r"['’][sS](?![^\W_])")


def load_stopwords(path=None) -> frozenset[str]:
    """Read a stopword file: one surface form per line, '#' comments allowed."""
    if path is None:
        text = resources.files("embrank.data").joinpath("stopwords_en.txt").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    words = set()
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line)
    return frozenset(words)


DEFAULT_STOPWORDS = load_stopwords()


@dataclass(frozen=True)
class AnalyzerConfig:
    lowercase: bool = True
    stopword_list: frozenset[str] = DEFAULT_STOPWORDS
    strip_possessive: bool = True
    stem: bool = True

    def surface_variant(self) -> "AnalyzerConfig":
        """Same chain without stemming; used for embedding lookups."""
        return AnalyzerConfig(
            lowercase=self.lowercase,
            stopword_list=self.stopword_list,
            strip_possessive=self.strip_possessive,
            stem=False,
        )

    def to_dict(self) -> dict:
        return {
            "lowercase": self.lowercase,
            "stopwords": sorted(self.stopword_list),
            "strip_possessive": self.strip_possessive,
            "stem": self.stem,
        }

    @staticmethod
    def from_dict(d: dict) -> "AnalyzerConfig":
        return AnalyzerConfig(
            lowercase=d["lowercase"],
            stopword_list=frozenset(d["stopwords"]),
            strip_possessive=d["strip_possessive"],
            stem=d["stem"],
        )


@dataclass(frozen=True)
class TokenSequence:
    tokens: tuple[str, ...]
    source_length: int = field(default=-1)

    def __post_init__(self):
        if self.source_length < 0:
            object.__setattr__(self, "source_length", len(self.tokens))

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)


def analyze(text: str, config: AnalyzerConfig) -> TokenSequence:
    """Run the full analysis chain over raw text.

    Order: lowercase, possessive strip, split on non-alphanumeric runs,
    stopword filter, Porter stem. Empty input yields an empty sequence.
    """
    if config.lowercase:
        text = text.lower()
    if config.strip_possessive:
        text = _POSSESSIVE_RE.sub("", text)
    raw_tokens = _TOKEN_RE.findall(text)
    source_length = len(raw_tokens)
    kept = [t for t in raw_tokens if t not in config.stopword_list]
    if config.stem:
        kept = [porter_stem(t) for t in kept]
    return TokenSequence(tuple(kept), source_length)


def ngrams(seq: TokenSequence, n: int) -> list[str]:
    """Contiguous space-joined n-grams, in order. Empty when len(seq) < n."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    toks = seq.tokens
    return [" ".join(toks[i : i + n]) for i in range(len(toks) - n + 1)]
