"""Pretrained word2vec vectors and the trainable embedding table.

Binary word2vec layout: an ASCII header ``"<count> <dim>\\n"``, then per entry
the token bytes, one space, ``dim`` little-endian float32 values, and an
optional newline.
"""

from __future__ import annotations

import mmap
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimMismatch, FormatError
from .text import PAD_ID, RESERVED, Vocab

DEFAULT_DIM = 300
OOV_SCALE = 0.05


@dataclass
class EmbeddingTable:
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def trainable(self) -> np.ndarray:
        mask = np.ones(self.matrix.shape[0], dtype=bool)
        mask[PAD_ID] = False
        return mask


@dataclass
class CoverageReport:
    hits: int = 0
    misses: int = 0
    lowercase_hits: int = 0
    missing: list[str] = field(default_factory=list)


def random_table(vocab_size: int, dim: int, rng: np.random.Generator) -> EmbeddingTable:
    matrix = rng.uniform(-OOV_SCALE, OOV_SCALE, size=(vocab_size, dim)).astype(np.float32)
    matrix[PAD_ID] = 0.0
    return EmbeddingTable(matrix)


def iter_word2vec(path: str | Path):
    """Yield ``(count, dim)`` once, then ``(token, vector)`` for each entry."""
    with open(path, "rb") as f:
        size = os.fstat(f.fileno()).st_size
        if size == 0:
            raise FormatError(f"{path}: empty file")
        with mmap.mmap(f.fileno(), 0, access=mmap.ACCESS_READ) as mm:
            eol = mm.find(b"\n")
            header = mm[: eol if eol >= 0 else 40]
            try:
                count, dim = (int(x) for x in header.decode("ascii").split())
            except (UnicodeDecodeError, ValueError):
                raise FormatError(f"{path}: bad header {header[:40]!r}") from None
            if eol < 0 or count < 0 or dim <= 0:
                raise FormatError(f"{path}: bad header {header[:40]!r}")
            yield count, dim
            nbytes = 4 * dim
            pos = eol + 1
            for n in range(count):
                while pos < size and mm[pos] in b"\n ":
                    pos += 1
                stop = mm.find(b" ", pos)
                if pos >= size or stop < 0:
                    raise FormatError(f"{path}: header promises {count} vectors, found {n}")
                token = mm[pos:stop].decode("utf-8", errors="replace")
                pos = stop + 1
                if pos + nbytes > size:
                    raise FormatError(f"{path}: truncated vector for entry {n}")
                yield token, np.frombuffer(mm[pos : pos + nbytes], dtype="<f4")
                pos += nbytes


def load_word2vec_binary(
    path: str | Path,
    vocab: Vocab,
    rng: np.random.Generator,
    dim: int = DEFAULT_DIM,
) -> tuple[EmbeddingTable, CoverageReport]:
    """Build the embedding table for ``vocab`` from a word2vec binary file.

    Exact-case matches win over matches on the lowercased file token; among
    several lowercase matches the first in file order is kept. Tokens with no
    vector get uniform noise in [-0.05, 0.05]; the PAD row is zero.
    """
    entries = iter_word2vec(path)
    _, file_dim = next(entries)
    if file_dim != dim:
        raise DimMismatch(f"{path}: vectors have dimension {file_dim}, expected {dim}")
    exact: dict[str, np.ndarray] = {}
    lower: dict[str, np.ndarray] = {}
    for token, vec in entries:
        if token in vocab:
            exact.setdefault(token, vec)
            continue
        folded = token.lower()
        if folded in vocab and folded not in lower:
            lower[folded] = vec

    table = random_table(len(vocab), dim, rng)
    report = CoverageReport()
    for idx, token in enumerate(vocab.tokens, start=len(RESERVED)):
        vec = exact.get(token)
        if vec is None:
            vec = lower.get(token)
            if vec is not None:
                report.lowercase_hits += 1
        if vec is None:
            report.misses += 1
            report.missing.append(token)
        else:
            report.hits += 1
            table.matrix[idx] = vec
    return table, report


def write_word2vec_binary(
    path: str | Path, words: list[str], vectors: np.ndarray, trailing_newline: bool = True
) -> None:
    vectors = np.asarray(vectors, dtype="<f4")
    with open(path, "wb") as f:
        f.write(f"{len(words)} {vectors.shape[1]}\n".encode("ascii"))
        for word, vec in zip(words, vectors):
            f.write(word.encode("utf-8") + b" ")
            f.write(vec.tobytes())
            if trailing_newline:
                f.write(b"\n")


def lookup_sequence(table: EmbeddingTable | np.ndarray, tokens) -> np.ndarray:
    matrix = table.matrix if isinstance(table, EmbeddingTable) else table
    return matrix[np.asarray(tokens)]
