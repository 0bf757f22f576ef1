"""Embedding providers and cosine similarity for in-context example selection.

Two providers: a deterministic local TF-IDF embedder (offline, reproducible,
used by tests and replay runs) and a remote HTTP endpoint speaking the common
embeddings wire schema. Both yield fixed-dimension vectors per provider.
"""
from __future__ import annotations

import math
import os
import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Protocol

import numpy as np
import requests

_TOKEN_RE = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]
    provider_tag: str

    def __post_init__(self):
        if len(self.values) == 0:
            raise ValueError("embedding vector must be non-empty")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("embedding vector contains non-finite values")


class EmbeddingProvider(Protocol):
    tag: str

    def embed(self, text: str) -> EmbeddingVector: ...


def _tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.casefold())


class LocalTfidfEmbedder:
    """Vocabulary-based TF-IDF embedder fitted on a document pool.

    Fully deterministic: the vocabulary is the sorted set of tokens seen at
    fit time and IDF uses smoothed log weighting. Embedding before fit is an
    error. The dimension is constant per fitted provider.
    """

    tag = "local-tfidf"

    def __init__(self):
        self._vocab: dict[str, int] | None = None
        self._idf: np.ndarray | None = None

    @property
    def fitted(self) -> bool:
        return self._vocab is not None

    def fit(self, texts: Iterable[str]) -> "LocalTfidfEmbedder":
        texts = list(texts)
        if not texts:
            raise ValueError("cannot fit an embedder on an empty pool")
        vocab = sorted({tok for t in texts for tok in _tokenize(t)})
        self._vocab = {tok: i for i, tok in enumerate(vocab)}
        df = np.zeros(len(vocab))
        for t in texts:
            for tok in set(_tokenize(t)):
                df[self._vocab[tok]] += 1
        n = len(texts)
        self._idf = np.log((1 + n) / (1 + df)) + 1.0
        return self

    def embed(self, text: str) -> EmbeddingVector:
        if not text:
            raise ValueError("cannot embed empty text")
        if self._vocab is None:
            raise ValueError("local embedder must be fitted before embedding")
        assert self._idf is not None
        counts = Counter(_tokenize(text))
        vec = np.zeros(len(self._vocab))
        for tok, count in counts.items():
            idx = self._vocab.get(tok)
            if idx is not None:
                vec[idx] = (1.0 + math.log(count)) * self._idf[idx]
        return EmbeddingVector(values=tuple(vec.tolist()), provider_tag=self.tag)


class RemoteEmbedder:
    """HTTP embedding endpoint; base URL and key come from the environment."""

    tag = "remote"

    def __init__(
        self,
        model: str = "",
        base_url_env: str = "EMBEDDINGS_BASE_URL",
        api_key_env: str = "EMBEDDINGS_API_KEY",
        timeout: float = 60.0,
    ):
        self.model = model
        self.base_url = os.environ.get(base_url_env, "").rstrip("/")
        self.api_key = os.environ.get(api_key_env, "")
        self.timeout = timeout
        if not self.base_url:
            raise RuntimeError(f"remote embedder needs {base_url_env} set")
        self.tag = f"remote:{model}" if model else "remote"

    def embed(self, text: str) -> EmbeddingVector:
        if not text:
            raise ValueError("cannot embed empty text")
        return self.embed_batch([text])[0]

    def embed_batch(self, texts: list[str]) -> list[EmbeddingVector]:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload: dict = {"input": texts}
        if self.model:
            payload["model"] = self.model
        resp = requests.post(
            f"{self.base_url}/embeddings", json=payload, headers=headers, timeout=self.timeout
        )
        resp.raise_for_status()
        data = resp.json()["data"]
        data = sorted(data, key=lambda item: item.get("index", 0))
        return [
            EmbeddingVector(values=tuple(item["embedding"]), provider_tag=self.tag)
            for item in data
        ]


def cosine(u: EmbeddingVector, v: EmbeddingVector) -> float:
    """Standard cosine similarity; errors on dimension mismatch or zero vectors."""
    if len(u.values) != len(v.values):
        raise ValueError(f"dimension mismatch: {len(u.values)} vs {len(v.values)}")
    a = np.asarray(u.values)
    b = np.asarray(v.values)
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine undefined for zero vectors")
    return float(np.dot(a, b) / (na * nb))
