"""Per-node input vectors for the classifier.

Five input variants are supported, from pure one-hot POS vectors up to word
embeddings concatenated with one-hot POS, dependency-relation and averaged
character vectors.  Vocabularies are built from the training split only and
frozen; symbols unseen at test time map to the zero vector, not an index.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .conllu import ParsedQuestion


class FeatureError(Exception):
    pass


def _ordered_index(symbols) -> dict[str, int]:
    return {s: i for i, s in enumerate(sorted(set(symbols)))}


@dataclass
class Vocabularies:
    pos: dict[str, int]
    rels: dict[str, int]
    chars: dict[str, int]

    @classmethod
    def build(cls, train: list[ParsedQuestion]) -> "Vocabularies":
        if not train:
            raise FeatureError("cannot build vocabularies from an empty training set")
        pos, rels, chars = set(), set(), set()
        for q in train:
            for t in q.tokens:
                pos.add(t.pos)
                rels.add(t.rel)
                chars.update(t.surface)
        return cls(_ordered_index(pos), _ordered_index(rels), _ordered_index(chars))

    def to_dict(self) -> dict:
        return {
            "pos": sorted(self.pos, key=self.pos.get),
            "rels": sorted(self.rels, key=self.rels.get),
            "chars": sorted(self.chars, key=self.chars.get),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Vocabularies":
        return cls(
            {s: i for i, s in enumerate(doc["pos"])},
            {s: i for i, s in enumerate(doc["rels"])},
            {s: i for i, s in enumerate(doc["chars"])},
        )

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:16]


class EmbeddingStore:
    """Token -> dense vector table; absent tokens give the zero vector."""

    def __init__(self, dimension: int, table: dict[str, np.ndarray]):
        self.dimension = dimension
        self.table = table
        self._zero = np.zeros(dimension)

    def __len__(self) -> int:
        return len(self.table)

    def __contains__(self, token: str) -> bool:
        return self.lookup_key(token) is not None

    def lookup_key(self, token: str) -> str | None:
        """Verbatim lookup first, lowercased as fallback."""
        if token in self.table:
            return token
        low = token.lower()
        if low in self.table:
            return low
        return None

    def vector(self, token: str) -> np.ndarray:
        key = self.lookup_key(token)
        return self.table[key] if key is not None else self._zero

    def coverage(self, tokens) -> float:
        tokens = list(tokens)
        if not tokens:
            return 1.0
        return sum(1 for t in tokens if t in self) / len(tokens)


def load_embeddings(path) -> EmbeddingStore:
    """Text .vec format: optional 'count dim' header, then 'token v1 .. vd'."""
    table: dict[str, np.ndarray] = {}
    dimension = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ")
            if lineno == 1 and len(parts) == 2:
                continue  # header
            if len(parts) < 2 or not parts[0]:
                continue
            try:
                vec = np.array([float(v) for v in parts[1:] if v != ""])
            except ValueError:
                raise FeatureError(f"{path}:{lineno}: non-numeric embedding value") from None
            if dimension is None:
                dimension = len(vec)
            elif len(vec) != dimension:
                raise FeatureError(
                    f"{path}:{lineno}: ragged row, expected {dimension} values got {len(vec)}"
                )
            table[parts[0]] = vec
    if dimension is None:
        raise FeatureError(f"{path}: no embedding rows")
    return EmbeddingStore(dimension, table)


class FeatureVariant(Enum):
    POS = "pos"
    POS_RELS = "pos-rels"
    FASTTEXT = "emb"
    FASTTEXT_POS_RELS = "emb-pos-rels"
    FASTTEXT_POS_RELS_CHARS = "emb-pos-rels-chars"

    @property
    def uses_embedding(self) -> bool:
        return self in (
            FeatureVariant.FASTTEXT,
            FeatureVariant.FASTTEXT_POS_RELS,
            FeatureVariant.FASTTEXT_POS_RELS_CHARS,
        )

    @property
    def uses_pos(self) -> bool:
        return self is not FeatureVariant.FASTTEXT

    @property
    def uses_rels(self) -> bool:
        return self in (
            FeatureVariant.POS_RELS,
            FeatureVariant.FASTTEXT_POS_RELS,
            FeatureVariant.FASTTEXT_POS_RELS_CHARS,
        )

    @property
    def uses_chars(self) -> bool:
        return self is FeatureVariant.FASTTEXT_POS_RELS_CHARS

    def dimension(self, vocab: Vocabularies, embedding_dim: int = 0) -> int:
        dim = 0
        if self.uses_embedding:
            dim += embedding_dim
        if self.uses_pos:
            dim += len(vocab.pos)
        if self.uses_rels:
            dim += len(vocab.rels)
        if self.uses_chars:
            dim += len(vocab.chars)
        return dim

    def static_dimension(self, vocab: Vocabularies) -> int:
        """Width of the non-embedding (one-hot) feature segment."""
        return self.dimension(vocab, embedding_dim=0)


def one_hot(symbol: str, index: dict[str, int]) -> np.ndarray:
    vec = np.zeros(len(index))
    i = index.get(symbol)
    if i is not None:
        vec[i] = 1.0
    return vec


def char_vector(word: str, chars: dict[str, int]) -> np.ndarray:
    """Mean of the one-hot vectors of the word's characters."""
    if not word:
        raise FeatureError("char_vector of empty word")
    vec = np.zeros(len(chars))
    for ch in word:
        i = chars.get(ch)
        if i is not None:
            vec[i] += 1.0
    return vec / len(word)


def static_features(
    q: ParsedQuestion, variant: FeatureVariant, vocab: Vocabularies
) -> np.ndarray:
    """Non-embedding feature columns, shape (static_dim, n_tokens), in
    [pos | rels | chars] row order."""
    cols = []
    for t in q.tokens:
        parts = []
        if variant.uses_pos:
            parts.append(one_hot(t.pos, vocab.pos))
        if variant.uses_rels:
            parts.append(one_hot(t.rel, vocab.rels))
        if variant.uses_chars:
            parts.append(char_vector(t.surface, vocab.chars))
        cols.append(np.concatenate(parts) if parts else np.zeros(0))
    return np.stack(cols, axis=1) if cols else np.zeros((0, 0))


def vectorize(
    q: ParsedQuestion,
    variant: FeatureVariant,
    vocab: Vocabularies,
    emb: EmbeddingStore | None = None,
) -> list[np.ndarray]:
    """One input vector per tree node, [embedding | pos | rels | chars]."""
    if variant.uses_embedding:
        if emb is None:
            raise FeatureError(f"variant {variant.value} requires an embedding store")
        emb_cols = np.stack([emb.vector(t.surface) for t in q.tokens], axis=1)
    else:
        emb_cols = np.zeros((0, len(q.tokens)))
    static = static_features(q, variant, vocab)
    full = np.concatenate([emb_cols, static], axis=0)
    return [full[:, j] for j in range(full.shape[1])]
