"""Word-vector tables and averaged sentence vectors.

A sentence vector is the arithmetic mean of the pre-trained vectors of its
in-vocabulary tokens. Out-of-vocabulary tokens are skipped; a sentence with
no known token is an error, never a silent zero vector.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .errors import AllTokensUnknown, ParseError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SentenceVector:
    """Mean of ``token_count`` table vectors (duplicates counted separately)."""

    values: np.ndarray
    token_count: int


class WordVectorTable:
    """Immutable token -> d-dimensional vector lookup."""

    def __init__(self, tokens: Iterable[str], matrix, duplicates_skipped: int = 0):
        matrix = np.ascontiguousarray(matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise ValueError("matrix must be 2-dimensional (vocab x dim)")
        tokens = list(tokens)
        if len(tokens) != matrix.shape[0]:
            raise ValueError("token count does not match matrix rows")
        self._index = {}
        for i, tok in enumerate(tokens):
            if tok in self._index:
                raise ValueError(f"duplicate token {tok!r}")
            self._index[tok] = i
        matrix.setflags(write=False)
        self._matrix = matrix
        self.duplicates_skipped = duplicates_skipped

    @classmethod
    def from_mapping(cls, mapping) -> "WordVectorTable":
        tokens = list(mapping)
        matrix = np.array([np.asarray(mapping[t], dtype=np.float64) for t in tokens])
        return cls(tokens, matrix)

    @property
    def dimension(self) -> int:
        return int(self._matrix.shape[1])

    @property
    def vocab_size(self) -> int:
        return len(self._index)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def __len__(self) -> int:
        return len(self._index)

    def vector(self, token: str) -> np.ndarray:
        """Read-only view of the stored vector; KeyError for unknown tokens."""
        return self._matrix[self._index[token]]

    def get(self, token: str) -> Optional[np.ndarray]:
        i = self._index.get(token)
        return None if i is None else self._matrix[i]


def _looks_like_header(fields: list[str]) -> bool:
    if len(fields) != 2:
        return False
    try:
        count, dim = int(fields[0]), int(fields[1])
    except ValueError:
        return False
    return count >= 0 and dim >= 0


def load_word_vectors(path, expected_dim: Optional[int] = None) -> WordVectorTable:
    """Parse a whitespace-separated text vector file into a table.

    Each line is ``token v1 ... vd``. An optional first line ``count dim``
    (two integer fields, the Word2vec text-export header) is skipped. The
    dimension is inferred from the first data line, or validated against
    ``expected_dim`` when given. Duplicate tokens keep the first occurrence.
    """
    tokens: list[str] = []
    rows: list[np.ndarray] = []
    index: dict[str, int] = {}
    duplicates = 0
    dim = expected_dim

    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            fields = line.rstrip("\n").split()
            if not fields:
                continue
            if lineno == 1 and _looks_like_header(fields):
                continue
            token, values = fields[0], fields[1:]
            if dim is None:
                if not values:
                    raise ParseError("line has a token but no vector components",
                                     path=path, line=lineno)
                dim = len(values)
            if len(values) != dim:
                raise ParseError(
                    f"expected {dim} vector components, found {len(values)}",
                    path=path, line=lineno)
            try:
                vec = np.array([float(v) for v in values], dtype=np.float64)
            except ValueError as exc:
                raise ParseError(f"non-numeric vector component: {exc}",
                                 path=path, line=lineno) from None
            if token in index:
                duplicates += 1
                continue
            index[token] = len(tokens)
            tokens.append(token)
            rows.append(vec)

    if not rows:
        raise ParseError("no vector entries found", path=path)
    if duplicates:
        log.warning("%s: skipped %d duplicate token(s), first occurrence kept",
                    path, duplicates)
    return WordVectorTable(tokens, np.vstack(rows), duplicates_skipped=duplicates)


def _strip_outer(token: str) -> str:
    start, end = 0, len(token)
    while start < end and not token[start].isalnum():
        start += 1
    while end > start and not token[end - 1].isalnum():
        end -= 1
    return token[start:end]


def tokenize(sentence: str) -> list[str]:
    """Lowercase, split on whitespace, strip non-alphanumeric edges, drop empties."""
    out = []
    for raw in sentence.lower().split():
        tok = _strip_outer(raw)
        if tok:
            out.append(tok)
    return out


def embed_sentence(table: WordVectorTable, sentence: str) -> SentenceVector:
    """Average the table vectors of the sentence's in-vocabulary tokens.

    Raises AllTokensUnknown when no token is in the table.
    """
    total = np.zeros(table.dimension, dtype=np.float64)
    count = 0
    for tok in tokenize(sentence):
        vec = table.get(tok)
        if vec is None:
            continue
        total += vec
        count += 1
    if count == 0:
        raise AllTokensUnknown(sentence)
    total /= count
    return SentenceVector(values=total, token_count=count)


class CachingEmbedder:
    """Memoizing wrapper around an ``embedder(sentence) -> SentenceVector``.

    AllTokensUnknown results are cached too, so repeated failures stay cheap
    across training epochs.
    """

    def __init__(self, embedder):
        self._embedder = embedder
        self._cache: dict[str, SentenceVector | None] = {}

    def __call__(self, sentence: str) -> SentenceVector:
        hit = self._cache.get(sentence, False)
        if hit is not False:
            if hit is None:
                raise AllTokensUnknown(sentence)
            return hit
        try:
            value = self._embedder(sentence)
        except AllTokensUnknown:
            self._cache[sentence] = None
            raise
        self._cache[sentence] = value
        return value
