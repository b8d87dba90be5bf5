"""Word-vector table: loaders for word2vec/GloVe formats plus cosine helpers.

Vectors are L2-normalized once at load so every cosine in the scoring hot
loops reduces to a dot product.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .porter import stem as porter_stem

NORM_TOLERANCE = 1e-4


class EmbeddingFormatError(ValueError):
    """Malformed embedding file; message carries line number or byte offset."""


@dataclass(frozen=True)
class LookupPolicy:
    try_surface_then_stem: bool = True
    oov_handling: str = "skip"

    def to_dict(self) -> dict:
        return {
            "try_surface_then_stem": self.try_surface_then_stem,
            "oov_handling": self.oov_handling,
        }


class EmbeddingTable:
    """Immutable vocabulary -> unit vector map."""

    def __init__(self, tokens: list[str], matrix: np.ndarray,
                 dropped_zero: int = 0, duplicates: int = 0):
        if matrix.ndim != 2 or len(tokens) != matrix.shape[0]:
            raise ValueError("token list and matrix rows disagree")
        self.dim = int(matrix.shape[1])
        self.matrix = np.ascontiguousarray(matrix, dtype=np.float64)
        self._index = {tok: i for i, tok in enumerate(tokens)}
        self.tokens = list(tokens)
        self.unit_normalized = True
        self.dropped_zero = dropped_zero
        self.duplicates = duplicates

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def row(self, token: str) -> int:
        """Row index for a token, -1 when out of vocabulary."""
        return self._index.get(token, -1)

    def vector(self, token: str) -> np.ndarray | None:
        i = self._index.get(token)
        return None if i is None else self.matrix[i]


def _finalize(tokens: list[str], rows: list[np.ndarray], dim: int) -> EmbeddingTable:
    """Dedupe by first occurrence, drop zero-norm rows, unit-normalize."""
    seen: dict[str, int] = {}
    kept_tokens: list[str] = []
    kept_rows: list[np.ndarray] = []
    duplicates = 0
    dropped_zero = 0
    for tok, vec in zip(tokens, rows):
        if tok in seen:
            duplicates += 1
            continue
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            dropped_zero += 1
            continue
        seen[tok] = len(kept_tokens)
        kept_tokens.append(tok)
        kept_rows.append(vec / norm)
    matrix = np.vstack(kept_rows) if kept_rows else np.zeros((0, dim))
    return EmbeddingTable(kept_tokens, matrix, dropped_zero, duplicates)


def _load_text(path: str, expect_header: bool) -> EmbeddingTable:
    tokens: list[str] = []
    rows: list[np.ndarray] = []
    dim = None
    declared_count = None
    with open(path, encoding="utf-8") as fh:
        lineno = 0
        if expect_header:
            lineno += 1
            header = fh.readline()
            parts = header.split()
            if len(parts) != 2:
                raise EmbeddingFormatError(
                    f"{path}:1: expected header '<count> <dim>', got {header.rstrip()!r}")
            try:
                declared_count, dim = int(parts[0]), int(parts[1])
            except ValueError:
                raise EmbeddingFormatError(
                    f"{path}:1: non-integer header fields {header.rstrip()!r}") from None
            if dim < 1 or declared_count < 0:
                raise EmbeddingFormatError(f"{path}:1: invalid header values")
        for line in fh:
            lineno += 1
            if not line.strip():
                continue
            parts = line.rstrip("\n").split(" ")
            parts = [p for p in parts if p != ""]
            tok = parts[0]
            values = parts[1:]
            if dim is None:
                dim = len(values)
                if dim < 1:
                    raise EmbeddingFormatError(f"{path}:{lineno}: row has no vector components")
            if len(values) != dim:
                raise EmbeddingFormatError(
                    f"{path}:{lineno}: expected {dim} components, got {len(values)}")
            try:
                vec = np.array([float(v) for v in values], dtype=np.float64)
            except ValueError:
                raise EmbeddingFormatError(f"{path}:{lineno}: non-numeric component") from None
            tokens.append(tok)
            rows.append(vec)
    if declared_count is not None and len(tokens) != declared_count:
        raise EmbeddingFormatError(
            f"{path}: header declares {declared_count} rows, file has {len(tokens)}")
    if dim is None:
        raise EmbeddingFormatError(f"{path}: empty embedding file")
    return _finalize(tokens, rows, dim)


def _load_binary(path: str) -> EmbeddingTable:
    with open(path, "rb") as fh:
        data = fh.read()
    nl = data.find(b"\n")
    if nl < 0:
        raise EmbeddingFormatError(f"{path}: offset 0: no header line")
    parts = data[:nl].split()
    if len(parts) != 2:
        raise EmbeddingFormatError(f"{path}: offset 0: expected header '<count> <dim>'")
    try:
        count, dim = int(parts[0]), int(parts[1])
    except ValueError:
        raise EmbeddingFormatError(f"{path}: offset 0: non-integer header") from None
    offset = nl + 1
    tokens: list[str] = []
    rows: list[np.ndarray] = []
    vec_bytes = 4 * dim
    for _ in range(count):
        # tolerate a newline before the token, as the common writers emit
        while offset < len(data) and data[offset : offset + 1] == b"\n":
            offset += 1
        end = data.find(b" ", offset)
        if end < 0:
            raise EmbeddingFormatError(f"{path}: offset {offset}: unterminated token")
        try:
            tok = data[offset:end].decode("utf-8")
        except UnicodeDecodeError:
            raise EmbeddingFormatError(f"{path}: offset {offset}: invalid UTF-8 token") from None
        offset = end + 1
        if offset + vec_bytes > len(data):
            raise EmbeddingFormatError(f"{path}: offset {offset}: truncated vector")
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=offset).astype(np.float64)
        offset += vec_bytes
        tokens.append(tok)
        rows.append(vec)
    return _finalize(tokens, rows, dim)


def load_embeddings(path: str, format: str = "word2vec_text") -> EmbeddingTable:
    """Load a vector table; vectors come back unit-normalized.

    Supported formats: word2vec_text, word2vec_binary, glove_text.
    """
    if format == "word2vec_text":
        return _load_text(path, expect_header=True)
    if format == "glove_text":
        return _load_text(path, expect_header=False)
    if format == "word2vec_binary":
        return _load_binary(path)
    raise ValueError(f"unknown embedding format {format!r}")


def save_word2vec_text(table: EmbeddingTable, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(table)} {table.dim}\n")
        for tok in table.tokens:
            vec = table.matrix[table.row(tok)]
            fh.write(tok + " " + " ".join(repr(float(v)) for v in vec) + "\n")


def save_word2vec_binary(table: EmbeddingTable, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(f"{len(table)} {table.dim}\n".encode("utf-8"))
        for tok in table.tokens:
            vec = table.matrix[table.row(tok)].astype("<f4")
            fh.write(tok.encode("utf-8") + b" ")
            fh.write(struct.pack(f"<{table.dim}f", *vec))


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity, clamped to [-1, 1] against rounding."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimensionality mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine undefined for the zero vector")
    value = float(np.dot(a, b)) / (na * nb)
    return max(-1.0, min(1.0, value))


def lookup(token: str, table: EmbeddingTable,
           policy: LookupPolicy = LookupPolicy()) -> np.ndarray | None:
    """Vector for the surface token, falling back to its stem; None when OOV."""
    vec = table.vector(token)
    if vec is None and policy.try_surface_then_stem:
        vec = table.vector(porter_stem(token))
    return vec


def lookup_rows(tokens, table: EmbeddingTable,
                policy: LookupPolicy = LookupPolicy()) -> np.ndarray:
    """Row index per token (-1 for OOV), honoring the stem fallback."""
    out = np.empty(len(tokens), dtype=np.int64)
    for i, tok in enumerate(tokens):
        r = table.row(tok)
        if r < 0 and policy.try_surface_then_stem:
            r = table.row(porter_stem(tok))
        out[i] = r
    return out
