"""Minority-class upsampling by interpolation between nearest neighbors."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ValidationError
from .seeding import spawn_rng


@dataclass(frozen=True)
class BalanceConfig:
    synth_fraction: float = 0.10
    k_neighbors: int = 5
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.synth_fraction <= 1.0:
            raise ConfigError(f"synth_fraction must be in [0, 1], got {self.synth_fraction}")
        if self.k_neighbors < 1:
            raise ConfigError(f"k_neighbors must be >= 1, got {self.k_neighbors}")


def smote_interpolate(a: np.ndarray, b: np.ndarray, u: float) -> np.ndarray:
    """Point at parameter ``u`` on the segment from ``a`` to ``b``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValidationError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a + u * (b - a)


def _minority_label(y: np.ndarray) -> int:
    ones = int(np.sum(y == 1))
    zeros = int(np.sum(y == 0))
    # tie: treat the correct class as minority
    return 1 if ones <= zeros else 0


def _nearest_neighbors(minority: np.ndarray, k: int) -> np.ndarray:
    """Index matrix of the k nearest minority rows per minority row
    (self excluded, Euclidean distance, ties broken by lower index)."""
    m = len(minority)
    diffs = minority[:, None, :] - minority[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diffs, diffs)
    np.fill_diagonal(d2, np.inf)
    k = min(k, m - 1)
    # stable argsort on distance gives the lower-index tie-break
    order = np.argsort(d2, axis=1, kind="stable")
    return order[:, :k]


def balance_dataset(
    X: np.ndarray, y: np.ndarray, cfg: BalanceConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Append ``round(synth_fraction * n)`` synthetic minority rows.

    Each synthetic row interpolates between a uniformly chosen minority row
    and one of its k nearest minority neighbors at u ~ Uniform[0, 1). The
    original rows are returned unchanged and in order, followed by the
    synthetic block. Deterministic in ``cfg.seed``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=int)
    if X.shape[0] != y.shape[0]:
        raise ValidationError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    classes = set(y.tolist())
    if classes - {0, 1}:
        raise ValidationError(f"labels must be binary, got {sorted(classes)}")
    if len(classes) < 2:
        raise ValidationError("both classes must be present for balancing")
    label = _minority_label(y)
    minority_idx = np.flatnonzero(y == label)
    if len(minority_idx) < 2:
        raise ValidationError("minority class needs at least 2 rows to interpolate")

    n_synth = int(math.floor(cfg.synth_fraction * len(y) + 0.5))  # round half up
    if n_synth == 0:
        return X.copy(), y.copy()

    minority = X[minority_idx]
    neighbors = _nearest_neighbors(minority, cfg.k_neighbors)
    rng = spawn_rng(cfg.seed)
    rows = rng.integers(0, len(minority), size=n_synth)
    picks = rng.integers(0, neighbors.shape[1], size=n_synth)
    us = rng.random(size=n_synth)
    synth = np.empty((n_synth, X.shape[1]), dtype=np.float64)
    for j in range(n_synth):
        a = minority[rows[j]]
        b = minority[neighbors[rows[j], picks[j]]]
        synth[j] = smote_interpolate(a, b, us[j])
    X_out = np.vstack([X, synth])
    y_out = np.concatenate([y, np.full(n_synth, label, dtype=int)])
    return X_out, y_out
