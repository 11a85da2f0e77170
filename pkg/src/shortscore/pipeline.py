"""End-to-end glue: fit preprocessing state, featurize, train, predict.

Preprocessing statistics (stoplist, length normalizer) are always fit on the
training rows they will be applied with, never on held-out data.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from . import stack
from .balance import balance_dataset
from .config import PipelineConfig
from .corpus import Dataset, Stoplist, StoplistPolicy, build_stoplist, preprocess, with_tokens
from .embedding import FeaturizerConfig, VectorStore, featurize_many
from .errors import ValidationError
from .seeding import ROLE_PIPELINE, ROLE_SMOTE, child_seed
from .tpe import Hyperparameters


@dataclass(frozen=True)
class Preprocessor:
    """Frozen text-to-tokens state fit on one training set."""

    lexicon: Mapping[str, str]
    stoplist: Stoplist
    max_word_count: int

    def tokenize(self, text: str) -> list[str]:
        return preprocess(text, self.lexicon, self.stoplist)


def fit_preprocessor(
    train: Dataset, lexicon: Mapping[str, str] | None, policy: StoplistPolicy
) -> Preprocessor:
    """Stoplist from training frequencies, length normalizer from the longest
    post-preprocessing training response."""
    tokenized = with_tokens(train, lexicon)
    stoplist = build_stoplist(tokenized, policy)
    final = with_tokens(train, lexicon, stoplist)
    max_count = max((len(it.tokens) for it in final.items), default=0)
    return Preprocessor(
        lexicon=dict(lexicon or {}),
        stoplist=stoplist,
        max_word_count=max(1, max_count),
    )


def featurize_texts(
    texts: Sequence[str], pre: Preprocessor, store: VectorStore
) -> np.ndarray:
    cfg = FeaturizerConfig(max_train_word_count=pre.max_word_count, dim=store.dim)
    return featurize_many([pre.tokenize(t) for t in texts], store, cfg)


@dataclass
class PipelineModel:
    """Everything needed to score new responses for one question."""

    question_id: str
    preprocessor: Preprocessor
    stack_model: stack.StackingModel
    hp: Hyperparameters
    seed: int
    dim: int
    embeddings_path: str = ""
    embeddings_digest: str = ""


def train_pipeline(
    train: Dataset,
    store: VectorStore,
    hp: Hyperparameters,
    cfg: PipelineConfig,
    seed: int,
) -> PipelineModel:
    """Fit preprocessing on ``train``, balance, and train the stacking model."""
    if train.split != "train":
        raise ValidationError(f"expected a train split, got {train.split!r}")
    pre = fit_preprocessor(train, cfg.preprocess.lexicon, cfg.preprocess.stoplist)
    X = featurize_texts(train.texts, pre, store)
    y = train.labels
    bal = replace(cfg.balance, seed=child_seed(seed, ROLE_SMOTE))
    X_bal, y_bal = balance_dataset(X, y, bal)
    model = stack.fit_stacking(
        X_bal,
        y_bal,
        hp,
        child_seed(seed, ROLE_PIPELINE),
        featurizer=FeaturizerConfig(max_train_word_count=pre.max_word_count, dim=store.dim),
    )
    return PipelineModel(
        question_id=train.question_id,
        preprocessor=pre,
        stack_model=model,
        hp=hp,
        seed=seed,
        dim=store.dim,
    )


def pipeline_predict(
    model: PipelineModel, texts: Sequence[str], store: VectorStore
) -> tuple[np.ndarray, np.ndarray]:
    if store.dim != model.dim:
        raise ValidationError(f"model expects {model.dim}-dim vectors, store has {store.dim}")
    X = featurize_texts(texts, model.preprocessor, store)
    return stack.predict(model.stack_model, X)
