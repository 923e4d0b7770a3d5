"""Load, save and query fixed-dimension word-embedding spaces.

Supports the text word2vec format: a "<count> <dim>" header followed by
one "<token> v1 ... v_dim" line per word.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateInputError, DuplicateError, LookupError_, ParseError


class EmbeddingSpace:
    """Immutable vocabulary-indexed dense vector matrix."""

    def __init__(self, tokens, vectors, name: str = ""):
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2:
            raise ParseError("vectors must form a 2-D matrix")
        if len(tokens) != vectors.shape[0]:
            raise ParseError("token count != vector row count")
        if not np.all(np.isfinite(vectors)):
            raise ParseError("non-finite vector entries")
        self.tokens = list(tokens)
        self.vectors = vectors
        self.name = name
        self._index = {}
        for i, tok in enumerate(self.tokens):
            if tok in self._index:
                raise DuplicateError(f"duplicate token {tok!r}")
            self._index[tok] = i

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self._index

    def vector(self, token: str) -> np.ndarray:
        """Row for token; raises on unknown tokens, never imputes."""
        try:
            return self.vectors[self._index[token]]
        except KeyError:
            raise LookupError_(f"token {token!r} not in space {self.name!r}") from None

    def get(self, token: str):
        i = self._index.get(token)
        return None if i is None else self.vectors[i]


def load_space(path, name: str | None = None) -> EmbeddingSpace:
    """Parse a text word2vec file into an EmbeddingSpace."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        parts = header.split()
        if len(parts) != 2:
            raise ParseError(f"header must be '<count> <dim>', got {header!r}",
                             line_number=1)
        try:
            count, dim = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"non-integer header fields in {header!r}",
                             line_number=1) from None
        if count < 0 or dim < 1:
            raise ParseError("count must be >= 0 and dim >= 1", line_number=1)
        tokens = []
        vectors = np.empty((count, dim))
        for i in range(count):
            line = fh.readline()
            lineno = i + 2
            if not line:
                raise ParseError(f"expected {count} rows, file ended early",
                                 line_number=lineno)
            fields = line.split()
            if len(fields) != dim + 1:
                raise ParseError(
                    f"expected {dim} values for token {fields[0] if fields else '?'!r}, "
                    f"got {len(fields) - 1}", line_number=lineno)
            try:
                vectors[i] = [float(v) for v in fields[1:]]
            except ValueError:
                raise ParseError("non-numeric vector entry", line_number=lineno) from None
            tokens.append(fields[0])
    if name is None:
        name = str(path)
    return EmbeddingSpace(tokens, vectors, name=name)


def save_space(space: EmbeddingSpace, path):
    """Write a space in the same text format load_space reads (round-trip exact)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{len(space)} {space.dim}\n")
        for tok, row in zip(space.tokens, space.vectors):
            values = " ".join(repr(float(v)) for v in row)
            fh.write(f"{tok} {values}\n")


def cosine(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise DegenerateInputError("cosine undefined for zero vector")
    return float(u @ v / (nu * nv))


def nearest_neighbors(space: EmbeddingSpace, query, k: int, exclude=()):
    """k nearest tokens by cosine, descending; ties broken by vocabulary order.

    Returns fewer than k results only when exclusions shrink the pool.
    """
    query = np.asarray(query, dtype=np.float64)
    qnorm = np.linalg.norm(query)
    if qnorm == 0.0:
        raise DegenerateInputError("zero query vector")
    if k < 1:
        raise ValueError("k must be >= 1")
    exclude = set(exclude)
    norms = np.linalg.norm(space.vectors, axis=1)
    safe = np.where(norms == 0.0, 1.0, norms)
    sims = space.vectors @ query / (safe * qnorm)
    sims[norms == 0.0] = -np.inf
    order = sorted(range(len(space)), key=lambda i: (-sims[i], i))
    out = []
    for i in order:
        if space.tokens[i] in exclude or not np.isfinite(sims[i]):
            continue
        out.append((space.tokens[i], float(sims[i])))
        if len(out) == k:
            break
    return out
