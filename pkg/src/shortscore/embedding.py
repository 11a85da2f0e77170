"""Word-vector store and the 301-style sentence feature vector.

A response is represented by the mean of the L2-normalized vectors of its
in-vocabulary tokens, concatenated with one word-count feature normalized to
[0, 1] by the maximum count seen in training.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, ParseError


@dataclass(frozen=True)
class VectorStore:
    dim: int
    table: dict[str, np.ndarray]

    def __contains__(self, token: str) -> bool:
        return token in self.table

    def __len__(self) -> int:
        return len(self.table)


@dataclass(frozen=True)
class FeaturizerConfig:
    max_train_word_count: int
    dim: int
    oov_policy: str = "skip"

    def __post_init__(self) -> None:
        if self.max_train_word_count < 1:
            raise ConfigError(f"max_train_word_count must be >= 1, got {self.max_train_word_count}")
        if self.oov_policy != "skip":
            raise ConfigError(f"unsupported oov_policy {self.oov_policy!r}")


def load_vectors(path: str | Path) -> VectorStore:
    """Parse a plain-text vector file: header ``vocab_count dim``, then one
    ``token v1 .. v_dim`` row per line. Duplicate tokens keep their first
    vector (with a warning); malformed rows raise with the line number.
    """
    path = Path(path)
    table: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ParseError(f"{path}:1: expected header 'vocab_count dim'")
        try:
            vocab_count, dim = int(header[0]), int(header[1])
        except ValueError:
            raise ParseError(f"{path}:1: header fields must be integers")
        if dim <= 0:
            raise ParseError(f"{path}:1: dim must be positive, got {dim}")
        for line_no, line in enumerate(fh, start=2):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != dim + 1:
                raise ParseError(
                    f"{path}:{line_no}: expected {dim} values after token, got {len(parts) - 1}"
                )
            token = parts[0]
            try:
                vec = np.array([float(v) for v in parts[1:]], dtype=np.float64)
            except ValueError:
                raise ParseError(f"{path}:{line_no}: non-numeric vector value")
            if not np.all(np.isfinite(vec)):
                raise ParseError(f"{path}:{line_no}: non-finite vector value")
            if token in table:
                warnings.warn(f"{path}:{line_no}: duplicate token {token!r}, keeping first")
                continue
            table[token] = vec
    if len(table) != vocab_count:
        warnings.warn(f"{path}: header declared {vocab_count} tokens, parsed {len(table)}")
    return VectorStore(dim=dim, table=table)


def sentence_embedding(tokens: Sequence[str], store: VectorStore) -> tuple[np.ndarray, int]:
    """Mean of unit-normalized vectors of the tokens present in the store.

    Tokens missing from the store, or whose vector has zero norm, are excluded
    from both the sum and the divisor. Returns ``(vector, n_used)``;
    ``n_used == 0`` flags an all-out-of-vocabulary sentence and the vector is
    all zeros.
    """
    acc = np.zeros(store.dim, dtype=np.float64)
    used = 0
    for tok in tokens:
        vec = store.table.get(tok)
        if vec is None:
            continue
        norm = math.sqrt(float(np.dot(vec, vec)))
        if norm == 0.0:
            continue
        acc += vec / norm
        used += 1
    if used == 0:
        return acc, 0
    return acc / used, used


def featurize(tokens: Sequence[str], store: VectorStore, cfg: FeaturizerConfig) -> np.ndarray:
    """Embedding average plus the clamped word-count feature (dim + 1 values)."""
    if cfg.dim != store.dim:
        raise ConfigError(f"featurizer dim {cfg.dim} != store dim {store.dim}")
    emb, _ = sentence_embedding(tokens, store)
    length = min(1.0, len(tokens) / cfg.max_train_word_count)
    return np.concatenate([emb, [length]])


def featurize_many(
    token_lists: Sequence[Sequence[str]], store: VectorStore, cfg: FeaturizerConfig
) -> np.ndarray:
    return np.vstack([featurize(toks, store, cfg) for toks in token_lists])
