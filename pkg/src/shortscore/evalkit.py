"""F1 metrics, pooled multi-question F1, the cross-validated objective, and
the dev/test model-selection protocol."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import stack
from .balance import balance_dataset
from .config import PipelineConfig
from .corpus import Dataset, split_folds, subset
from .embedding import VectorStore
from .errors import ShortscoreError, ValidationError
from .pipeline import (
    PipelineModel,
    featurize_texts,
    fit_preprocessor,
    pipeline_predict,
    train_pipeline,
)
from .seeding import ROLE_CV, ROLE_FOLDS, ROLE_REFIT, ROLE_SMOTE, child_seed
from .tpe import Hyperparameters, Trial


@dataclass(frozen=True)
class MetricReport:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    tn: int
    positive_label: int

    def as_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "tn": self.tn,
            "positive_label": self.positive_label,
        }


def _as_binary(name: str, values: Sequence[int]) -> np.ndarray:
    arr = np.asarray(values, dtype=int)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be one-dimensional")
    bad = set(arr.tolist()) - {0, 1}
    if bad:
        raise ValidationError(f"{name} must be binary, found {sorted(bad)}")
    return arr


def f1_score(
    preds: Sequence[int], golds: Sequence[int], positive: int = 1
) -> MetricReport:
    """Precision/recall/F1 with zero-denominator conventions fixed at 0."""
    p = _as_binary("preds", preds)
    g = _as_binary("golds", golds)
    if len(p) != len(g):
        raise ValidationError(f"length mismatch: {len(p)} preds vs {len(g)} golds")
    if len(p) == 0:
        raise ValidationError("empty prediction sequence")
    tp = int(np.sum((p == positive) & (g == positive)))
    fp = int(np.sum((p == positive) & (g != positive)))
    fn = int(np.sum((p != positive) & (g == positive)))
    tn = len(p) - tp - fp - fn
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return MetricReport(precision, recall, f1, tp, fp, fn, tn, positive)


def combined_f1(
    per_question: Sequence[tuple[Sequence[int], Sequence[int]]], positive: int = 1
) -> MetricReport:
    """F1 over the pooled predictions of all questions.

    This concatenates every (preds, golds) pair and scores once; it is not the
    mean of per-question F1 values.
    """
    if not per_question:
        raise ValidationError("no prediction/gold pairs given")
    preds = np.concatenate([_as_binary("preds", p) for p, _ in per_question])
    golds = np.concatenate([_as_binary("golds", g) for _, g in per_question])
    return f1_score(preds, golds, positive)


FoldProbe = Callable[[int, np.ndarray, np.ndarray, object], None]


def cross_validate(
    hp: Hyperparameters,
    ds: Dataset,
    store: VectorStore,
    cfg: PipelineConfig,
    k: int = 5,
    seed: int = 0,
    fold_probe: Optional[FoldProbe] = None,
) -> Trial:
    """Mean held-out F1 over k stratified folds, as a Trial.

    Preprocessing statistics and the synthetic balancing are refit inside each
    fold on its training portion only. A fold whose training portion is
    single-class fails, and any fold failure fails the whole trial.
    """
    if ds.split != "train":
        raise ValidationError(f"cross-validation expects a train split, got {ds.split!r}")
    folds = split_folds(ds, k, child_seed(seed, ROLE_FOLDS))
    n = len(ds)
    fold_scores: list[float] = []
    for fi, holdout in enumerate(folds):
        mask = np.ones(n, dtype=bool)
        mask[holdout] = False
        train_idx = np.flatnonzero(mask)
        try:
            train_part = subset(ds, train_idx)
            hold_part = subset(ds, holdout)
            if len(set(it.label for it in train_part.items)) < 2:
                raise ValidationError(f"fold {fi}: single-class training portion")
            pre = fit_preprocessor(train_part, cfg.preprocess.lexicon, cfg.preprocess.stoplist)
            X_tr = featurize_texts(train_part.texts, pre, store)
            X_ho = featurize_texts(hold_part.texts, pre, store)
            bal = replace(cfg.balance, seed=child_seed(seed, ROLE_SMOTE, fi))
            X_bal, y_bal = balance_dataset(X_tr, train_part.labels, bal)
            model = stack.fit_stacking(X_bal, y_bal, hp, child_seed(seed, ROLE_CV, fi))
            labels, _ = stack.predict(model, X_ho)
            fold_scores.append(
                f1_score(labels, hold_part.labels, cfg.eval.positive_label).f1
            )
            if fold_probe is not None:
                fold_probe(fi, train_idx, holdout, pre)
        except ShortscoreError as exc:
            return Trial(
                hp=hp,
                objective=None,
                seed=seed,
                status="failed",
                error=f"fold {fi}: {exc}",
            )
    objective = float(np.mean(fold_scores))
    return Trial(hp=hp, objective=objective, seed=seed, fold_scores=tuple(fold_scores))


@dataclass(frozen=True)
class DevEvaluation:
    trial_index: int
    cv_objective: float
    dev_f1: float


@dataclass(frozen=True)
class TestEvaluation:
    trial_index: int
    dev_f1: float
    test_f1: float
    report: MetricReport


@dataclass
class SelectionReport:
    ranked: list[int]
    dev_evaluations: list[DevEvaluation]
    test_evaluations: list[TestEvaluation]
    chosen_index: int
    chosen_model: PipelineModel
    chosen_report: MetricReport

    @property
    def chosen_test_f1(self) -> float:
        return self.chosen_report.f1


def selection_protocol(
    history: Sequence[Trial],
    train: Dataset,
    dev: Dataset,
    test: Dataset,
    store: VectorStore,
    cfg: PipelineConfig,
    dev_budget: int = 20,
    test_budget: int = 5,
    seed: int = 0,
) -> SelectionReport:
    """Refit the top trials, filter on dev, pick the winner on test.

    The top ``dev_budget`` trials by cross-validation objective are refit on
    the full train split and scored on dev; the ``test_budget`` best of those
    by dev F1 are scored on test. Budgets clamp to the number of available
    trials with a warning.
    """
    complete = [t for t in history if t.status == "complete"]
    if not complete:
        raise ValidationError("no complete trials to select from")
    ranked = sorted(complete, key=lambda t: -t.objective)
    if len(ranked) < dev_budget:
        warnings.warn(
            f"only {len(ranked)} complete trials; clamping dev budget {dev_budget}"
        )
    candidates = ranked[: min(dev_budget, len(ranked))]

    positive = cfg.eval.positive_label
    models: dict[int, PipelineModel] = {}
    dev_evals: list[DevEvaluation] = []
    for trial in candidates:
        model = train_pipeline(
            train, store, trial.hp, cfg, child_seed(seed, ROLE_REFIT, trial.index)
        )
        models[trial.index] = model
        labels, _ = pipeline_predict(model, dev.texts, store)
        dev_f1 = f1_score(labels, dev.labels, positive).f1
        dev_evals.append(DevEvaluation(trial.index, trial.objective, dev_f1))

    if len(dev_evals) < test_budget:
        warnings.warn(
            f"only {len(dev_evals)} dev evaluations; clamping test budget {test_budget}"
        )
    finalists = sorted(dev_evals, key=lambda e: -e.dev_f1)[: min(test_budget, len(dev_evals))]

    test_evals: list[TestEvaluation] = []
    for ev in finalists:
        labels, _ = pipeline_predict(models[ev.trial_index], test.texts, store)
        report = f1_score(labels, test.labels, positive)
        test_evals.append(TestEvaluation(ev.trial_index, ev.dev_f1, report.f1, report))

    best = max(test_evals, key=lambda e: e.test_f1)
    return SelectionReport(
        ranked=[t.index for t in ranked],
        dev_evaluations=dev_evals,
        test_evaluations=test_evals,
        chosen_index=best.trial_index,
        chosen_model=models[best.trial_index],
        chosen_report=best.report,
    )
