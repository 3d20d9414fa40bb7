"""Hashed bag-of-words text encoder with a single trainable projection.

A text is lowercased, split on whitespace, and each token is hashed with
32-bit FNV-1a into one of ``feature_dim`` buckets. The feature vector is the
mean of the token one-hots; the encoding is that vector times ``projection``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

FNV_OFFSET = 0x811C9DC5
FNV_PRIME = 0x01000193


def fnv1a_32(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & 0xFFFFFFFF
    return h


@lru_cache(maxsize=1 << 16)
def _token_hash(token: str) -> int:
    return fnv1a_32(token.encode("utf-8"))


def tokenize(text: str) -> list:
    return text.lower().split()


def hashed_features(text: str, feature_dim: int) -> np.ndarray:
    out = np.zeros(feature_dim, dtype=np.float64)
    toks = tokenize(text)
    if not toks:
        return out
    for t in toks:
        out[_token_hash(t) % feature_dim] += 1.0
    out /= len(toks)
    return out


def feature_matrix(texts, feature_dim: int) -> np.ndarray:
    """Stack :func:`hashed_features` for every text; shape ``(len(texts), D)``."""
    out = np.zeros((len(texts), feature_dim), dtype=np.float64)
    for i, t in enumerate(texts):
        out[i] = hashed_features(t, feature_dim)
    return out


@dataclass
class EncoderModel:
    projection: np.ndarray  # (feature_dim, embed_dim)

    @property
    def feature_dim(self) -> int:
        return self.projection.shape[0]

    @property
    def embed_dim(self) -> int:
        return self.projection.shape[1]

    @classmethod
    def init(cls, feature_dim=1024, embed_dim=64, seed=0) -> "EncoderModel":
        rng = np.random.default_rng(seed)
        proj = rng.normal(0.0, 1.0 / np.sqrt(embed_dim), size=(feature_dim, embed_dim))
        return cls(proj)

    def features(self, texts) -> np.ndarray:
        return feature_matrix(texts, self.feature_dim)

    def encode(self, text: str) -> np.ndarray:
        return hashed_features(text, self.feature_dim) @ self.projection

    def encode_batch(self, texts) -> np.ndarray:
        return self.features(texts) @ self.projection


def encode(model: EncoderModel, text: str) -> np.ndarray:
    return model.encode(text)
