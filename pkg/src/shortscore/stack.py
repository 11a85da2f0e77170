"""Two-level stacking: MLP + GBDT base classifiers feeding a small final MLP.

The final model consumes the four concatenated base-class probabilities. Its
training inputs are built out-of-fold: five internal stratified folds, each
held-out block scored by base models trained on the complement, so no meta
training row was seen by the models that produced it. The base models are then
refit on all rows for inference.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import gbdt, nnet
from .corpus import stratified_fold_indices
from .embedding import FeaturizerConfig
from .errors import ValidationError
from .seeding import ROLE_BASE_GBDT, ROLE_BASE_MLP, ROLE_FOLDS, ROLE_META, child_seed
from .tpe import Hyperparameters

N_META_FEATURES = 4
STACK_FOLDS = 5


@dataclass
class StackingModel:
    base_mlp: nnet.MlpModel
    base_gbdt: gbdt.GbdtModel
    meta: nnet.MlpModel
    hp: Hyperparameters
    featurizer: Optional[FeaturizerConfig] = None
    # training-time bookkeeping, not part of the persisted model
    fold_log: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list, repr=False)


def meta_features(
    base_mlp: nnet.MlpModel, base_gbdt: gbdt.GbdtModel, X: np.ndarray
) -> np.ndarray:
    """(mlp_p0, mlp_p1, gbdt_p0, gbdt_p1) per row."""
    return np.hstack([nnet.predict_proba(base_mlp, X), gbdt.predict_proba(base_gbdt, X)])


def _base_arch(n_features: int, hp: Hyperparameters) -> tuple[int, ...]:
    return (n_features, hp.base_neurons, hp.base_neurons, nnet.N_CLASSES)


def _meta_arch(hp: Hyperparameters) -> tuple[int, ...]:
    if hp.meta_layers == 0:
        return (N_META_FEATURES, nnet.N_CLASSES)
    return (N_META_FEATURES, hp.meta_neurons, nnet.N_CLASSES)


def _fit_bases(
    X: np.ndarray, y: np.ndarray, hp: Hyperparameters, seed: int, tag: int
) -> tuple[nnet.MlpModel, gbdt.GbdtModel]:
    mlp = nnet.train_mlp(
        nnet.init_mlp(_base_arch(X.shape[1], hp), child_seed(seed, ROLE_BASE_MLP, tag)),
        X,
        y,
        nnet.TrainSpec(hp.base_lr, hp.base_iters, seed),
    )
    booster = gbdt.train_gbdt(
        X,
        y,
        n_estimators=hp.gbdt_estimators,
        learning_rate=hp.gbdt_lr,
        subsample=hp.gbdt_subsample,
        seed=child_seed(seed, ROLE_BASE_GBDT, tag),
    )
    return mlp, booster


def fit_stacking(
    X: np.ndarray,
    y: np.ndarray,
    hp: Hyperparameters,
    seed: int,
    oof: bool = True,
    featurizer: Optional[FeaturizerConfig] = None,
) -> StackingModel:
    """Train the full two-level ensemble; deterministic in ``seed``.

    ``oof=False`` switches to naive same-data stacking (meta features from
    bases trained on all rows), kept only for comparison runs.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=int)
    if len(set(y.tolist())) < 2:
        raise ValidationError("both classes must be present to fit the stacking model")

    n = X.shape[0]
    fold_log: list[tuple[np.ndarray, np.ndarray]] = []
    if oof:
        folds = stratified_fold_indices(y, STACK_FOLDS, child_seed(seed, ROLE_FOLDS))
        oof_meta = np.zeros((n, N_META_FEATURES))
        for fi, holdout in enumerate(folds):
            mask = np.ones(n, dtype=bool)
            mask[holdout] = False
            train_idx = np.flatnonzero(mask)
            mlp_f, gbdt_f = _fit_bases(X[train_idx], y[train_idx], hp, seed, fi)
            oof_meta[holdout] = meta_features(mlp_f, gbdt_f, X[holdout])
            fold_log.append((train_idx, holdout))
    base_mlp, base_gbdt = _fit_bases(X, y, hp, seed, STACK_FOLDS)
    if not oof:
        oof_meta = meta_features(base_mlp, base_gbdt, X)

    meta = nnet.train_mlp(
        nnet.init_mlp(_meta_arch(hp), child_seed(seed, ROLE_META)),
        oof_meta,
        y,
        nnet.TrainSpec(hp.meta_lr, hp.meta_iters, seed),
    )
    return StackingModel(
        base_mlp=base_mlp,
        base_gbdt=base_gbdt,
        meta=meta,
        hp=hp,
        featurizer=featurizer,
        fold_log=fold_log,
    )


def predict(model: StackingModel, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Labels and meta-model probabilities; ties at 0.5 resolve to label 1."""
    probs = nnet.predict_proba(model.meta, meta_features(model.base_mlp, model.base_gbdt, X))
    labels = (probs[:, 1] >= probs[:, 0]).astype(int)
    return labels, probs
