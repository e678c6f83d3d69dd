"""Tokenization and vocabulary.

Vocabulary files are UTF-8 text with one token per line. The two reserved
ids (0 = PAD, 1 = UNK) are not written, so line ``n`` (0-based) holds the
token with id ``n + 2``.
"""

from __future__ import annotations

import string
from collections import Counter
from collections.abc import Iterable, Sequence
from pathlib import Path

from .errors import EmptyCorpus, FormatError

PAD_ID = 0
UNK_ID = 1
PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
RESERVED = (PAD_TOKEN, UNK_TOKEN)

_PUNCT = string.punctuation


def tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace, strip ASCII punctuation from token ends."""
    tokens = []
    for raw in text.lower().split():
        tok = raw.strip(_PUNCT)
        if tok:
            tokens.append(tok)
    return tokens


class Vocab:
    """Immutable token <-> id mapping with reserved PAD/UNK ids."""

    def __init__(self, tokens: Sequence[str]):
        self._itos = list(RESERVED) + list(tokens)
        self._stoi = {tok: i for i, tok in enumerate(self._itos)}
        if len(self._stoi) != len(self._itos):
            raise ValueError("duplicate tokens in vocabulary")

    def __len__(self) -> int:
        return len(self._itos)

    def __contains__(self, token: str) -> bool:
        return token in self._stoi

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocab) and self._itos == other._itos

    def lookup(self, token: str) -> int:
        return self._stoi.get(token, UNK_ID)

    def encode(self, tokens: Iterable[str]) -> list[int]:
        return [self.lookup(t) for t in tokens]

    def token(self, idx: int) -> str:
        return self._itos[idx]

    @property
    def tokens(self) -> list[str]:
        """Non-reserved tokens in id order."""
        return self._itos[len(RESERVED):]

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for tok in self.tokens:
                f.write(tok + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "Vocab":
        with open(path, encoding="utf-8", newline="") as f:
            lines = f.read().split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        for n, tok in enumerate(lines):
            if not tok or any(c.isspace() for c in tok):
                raise FormatError(f"{path}: bad vocabulary entry on line {n + 1}")
        try:
            return cls(lines)
        except ValueError as exc:
            raise FormatError(f"{path}: {exc}") from None


def build_vocab(corpus: Iterable[Sequence[str]]) -> Vocab:
    """Vocabulary over all training tokens.

    Ids are assigned by descending frequency, ties broken lexicographically,
    so the result does not depend on corpus order.
    """
    counts = Counter()
    for tokens in corpus:
        counts.update(tokens)
    for tok in RESERVED:
        counts.pop(tok, None)
    if not counts:
        raise EmptyCorpus("cannot build a vocabulary from an empty corpus")
    ordered = sorted(counts, key=lambda t: (-counts[t], t))
    return Vocab(ordered)
