"""Gradient-boosted regression trees for binary classification.

Trees are grown greedily with the second-order split gain
``0.5 * (GL^2/(HL+lam) + GR^2/(HR+lam) - (GL+GR)^2/(HL+HR+lam))`` over exact
candidate thresholds (midpoints between consecutive distinct feature values),
leaf values ``-G/(H+lam)``, logistic loss, shrinkage, and per-round row
subsampling without replacement.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.special import expit

from .errors import ValidationError
from .seeding import spawn_rng

BASE_SCORE_CLIP = 10.0


@dataclass
class TreeNode:
    """Internal node (feature/threshold/children) or leaf (value only)."""

    feature: Optional[int] = None
    threshold: float = 0.0
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None
    value: float = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


class Split(NamedTuple):
    feature: int
    threshold: float
    gain: float


@dataclass
class GbdtModel:
    trees: list[TreeNode]
    learning_rate: float
    base_score: float
    max_depth: int
    reg_lambda: float
    subsample: float
    n_features: int


def best_split(
    rows: np.ndarray, X: np.ndarray, g: np.ndarray, h: np.ndarray, reg_lambda: float
) -> Optional[Split]:
    """Exhaustive best (feature, threshold) by second-order gain.

    Candidates are midpoints between consecutive distinct sorted values of
    each feature, restricted to ``rows``. Returns None when no candidate has
    positive gain. Ties prefer the lower feature index, then the lower
    threshold.
    """
    rows = np.asarray(rows, dtype=int)
    if len(rows) < 2:
        return None
    g_rows = g[rows]
    h_rows = h[rows]
    g_total = g_rows.sum()
    h_total = h_rows.sum()
    parent = g_total * g_total / (h_total + reg_lambda)
    best: Optional[Split] = None
    for f in range(X.shape[1]):
        xf = X[rows, f]
        order = np.argsort(xf, kind="stable")
        xs = xf[order]
        boundary = xs[:-1] != xs[1:]
        if not boundary.any():
            continue
        gl = np.cumsum(g_rows[order])[:-1]
        hl = np.cumsum(h_rows[order])[:-1]
        gr = g_total - gl
        hr = h_total - hl
        gains = 0.5 * (gl * gl / (hl + reg_lambda) + gr * gr / (hr + reg_lambda) - parent)
        gains = np.where(boundary, gains, -np.inf)
        i = int(np.argmax(gains))  # first max = lowest threshold
        if gains[i] > 0.0 and (best is None or gains[i] > best.gain):
            best = Split(f, float((xs[i] + xs[i + 1]) / 2.0), float(gains[i]))
    return best


def _leaf(rows: np.ndarray, g: np.ndarray, h: np.ndarray, reg_lambda: float) -> TreeNode:
    return TreeNode(value=float(-g[rows].sum() / (h[rows].sum() + reg_lambda)))


def _grow(
    rows: np.ndarray,
    X: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    depth: int,
    max_depth: int,
    reg_lambda: float,
) -> TreeNode:
    if depth >= max_depth or len(rows) < 2:
        return _leaf(rows, g, h, reg_lambda)
    split = best_split(rows, X, g, h, reg_lambda)
    if split is None:
        return _leaf(rows, g, h, reg_lambda)
    mask = X[rows, split.feature] < split.threshold
    left = _grow(rows[mask], X, g, h, depth + 1, max_depth, reg_lambda)
    right = _grow(rows[~mask], X, g, h, depth + 1, max_depth, reg_lambda)
    return TreeNode(feature=split.feature, threshold=split.threshold, left=left, right=right)


def tree_predict(node: TreeNode, X: np.ndarray) -> np.ndarray:
    """Leaf value per row of X (raw, before shrinkage)."""
    out = np.empty(X.shape[0], dtype=np.float64)
    idx = np.arange(X.shape[0])

    def visit(nd: TreeNode, sel: np.ndarray) -> None:
        if nd.is_leaf:
            out[sel] = nd.value
            return
        mask = X[sel, nd.feature] < nd.threshold
        visit(nd.left, sel[mask])
        visit(nd.right, sel[~mask])

    visit(node, idx)
    return out


def train_gbdt(
    X: np.ndarray,
    y: np.ndarray,
    n_estimators: int,
    learning_rate: float,
    subsample: float = 1.0,
    max_depth: int = 6,
    reg_lambda: float = 1.0,
    seed: int = 0,
) -> GbdtModel:
    """Boost ``n_estimators`` rounds of logistic-loss Newton trees.

    The initial margin is the clipped train-set log-odds. Each round samples
    ``round(subsample * n)`` rows without replacement, fits one tree to the
    current gradients/hessians, and adds ``learning_rate`` times its output to
    every row's margin. A single-class ``y`` yields a prior-only model (all
    trees are zero leaves) with a warning.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if n_estimators < 1:
        raise ValidationError(f"n_estimators must be >= 1, got {n_estimators}")
    if not 0.0 < subsample <= 1.0:
        raise ValidationError(f"subsample must be in (0, 1], got {subsample}")
    if X.shape[0] != y.shape[0]:
        raise ValidationError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")

    p_bar = float(y.mean())
    if p_bar <= 0.0:
        base = -BASE_SCORE_CLIP
    elif p_bar >= 1.0:
        base = BASE_SCORE_CLIP
    else:
        base = float(np.clip(math.log(p_bar / (1.0 - p_bar)), -BASE_SCORE_CLIP, BASE_SCORE_CLIP))

    model = GbdtModel(
        trees=[],
        learning_rate=learning_rate,
        base_score=base,
        max_depth=max_depth,
        reg_lambda=reg_lambda,
        subsample=subsample,
        n_features=X.shape[1],
    )
    if p_bar in (0.0, 1.0):
        warnings.warn("single-class targets: boosting skipped, prior-only model")
        model.trees = [TreeNode(value=0.0) for _ in range(n_estimators)]
        return model

    rng = spawn_rng(seed)
    n = X.shape[0]
    m = max(1, int(math.floor(subsample * n + 0.5)))
    margins = np.full(n, base)
    for _ in range(n_estimators):
        p = expit(margins)
        g = p - y
        h = p * (1.0 - p)
        rows = np.arange(n) if m == n else np.sort(rng.choice(n, size=m, replace=False))
        tree = _grow(rows, X, g, h, 0, max_depth, reg_lambda)
        margins += learning_rate * tree_predict(tree, X)
        model.trees.append(tree)
    return model


def predict_margin(model: GbdtModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValidationError(
            f"input shape {X.shape} incompatible with {model.n_features} features"
        )
    margin = np.full(X.shape[0], model.base_score)
    for tree in model.trees:
        margin += model.learning_rate * tree_predict(tree, X)
    return margin


def predict_proba(model: GbdtModel, X: np.ndarray) -> np.ndarray:
    """Per-row class distribution (P(y=0), P(y=1)), shape (n, 2)."""
    p1 = expit(predict_margin(model, X))
    return np.column_stack([1.0 - p1, p1])
