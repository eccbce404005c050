"""Word embedding store for synonym lookup and cheap sentence encoding.

The store reads the classic text format (one "word v1 ... vd" line per
word) used by counter-fitted vector releases.  Nearest-neighbour queries
back the WS candidate generator; the mean-of-word-vectors sentence
encoder is the default semantic check when no contextual encoder is
attached.
"""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np


class EmbeddingStore:
    def __init__(self, words: Sequence[str], vectors: np.ndarray) -> None:
        if len(words) != vectors.shape[0]:
            raise ValueError("word count and vector count differ")
        if len(set(words)) != len(words):
            raise ValueError("duplicate words in embedding store")
        self.words = list(words)
        self.vectors = np.asarray(vectors, dtype=np.float64)
        norms = np.linalg.norm(self.vectors, axis=1)
        if np.any(norms == 0.0):
            raise ValueError("zero vector in embedding store")
        self._unit = self.vectors / norms[:, None]
        self._row = {w: i for i, w in enumerate(self.words)}

    def __contains__(self, word: str) -> bool:
        return word in self._row

    def __len__(self) -> int:
        return len(self.words)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def vector(self, word: str) -> np.ndarray:
        return self.vectors[self._row[word]]

    def neighbors(
        self, word: str, n: int = 50, delta: float = 0.7
    ) -> list[tuple[str, float]]:
        """Up to n nearest neighbours with cosine strictly above delta.

        Results are (word, cosine) pairs in descending cosine order, ties
        broken alphabetically; the query word itself is excluded.  An
        out-of-vocabulary query returns the empty list.
        """
        row = self._row.get(word)
        if row is None:
            return []
        sims = self._unit @ self._unit[row]
        keep = [
            (float(sims[i]), self.words[i])
            for i in range(len(self.words))
            if i != row and sims[i] > delta
        ]
        keep.sort(key=lambda pair: (-pair[0], pair[1]))
        return [(w, s) for s, w in keep[:n]]

    def encode_sentence(self, surfaces: Sequence[str]) -> np.ndarray:
        """L2-normalized mean of the vectors of in-store words.

        Tokens missing from the store are skipped; a sentence with no
        known words encodes to the zero vector.
        """
        rows = [self._row[s] for s in surfaces if s in self._row]
        if not rows:
            return np.zeros(self.dim)
        mean = self.vectors[rows].mean(axis=0)
        norm = float(np.linalg.norm(mean))
        return mean / norm if norm > 0.0 else mean


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity; 0.0 when either vector is zero."""
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(a @ b) / (na * nb)


def load_store(path: str | Path) -> EmbeddingStore:
    words: list[str] = []
    rows: list[list[float]] = []
    dim: int | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ")
            if len(parts) < 2 or not parts[0]:
                raise ValueError(f"{path}:{lineno}: bad embedding line")
            vec = [float(x) for x in parts[1:]]
            if dim is None:
                dim = len(vec)
            elif len(vec) != dim:
                raise ValueError(f"{path}:{lineno}: inconsistent dimension")
            words.append(parts[0])
            rows.append(vec)
    if not words:
        raise ValueError(f"{path}: empty embedding store")
    return EmbeddingStore(words, np.array(rows, dtype=np.float64))


def save_store(path: str | Path, store: EmbeddingStore) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for word, vec in zip(store.words, store.vectors):
            fh.write(word + " " + " ".join(repr(float(x)) for x in vec) + "\n")
