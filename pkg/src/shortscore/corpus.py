"""Dataset loading, text preprocessing, and deterministic fold splits."""

from __future__ import annotations

import csv
import unicodedata
import warnings
from collections import Counter
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, ParseError, ValidationError
from .seeding import spawn_rng

CSV_HEADER = ("id", "response", "label")


@dataclass(frozen=True)
class LabeledResponse:
    """One student response with its binary score (1 = correct)."""

    id: str
    raw_text: str
    label: int
    tokens: tuple[str, ...] = ()


@dataclass(frozen=True)
class Dataset:
    question_id: str
    items: tuple[LabeledResponse, ...]
    split: str  # train | dev | test

    def __post_init__(self) -> None:
        if self.split not in ("train", "dev", "test"):
            raise ValidationError(f"unknown split {self.split!r}")
        ids = [it.id for it in self.items]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ValidationError(f"duplicate response ids: {dupes[:5]}")
        if self.split == "train" and not self.items:
            raise ValidationError("train split must not be empty")

    def __len__(self) -> int:
        return len(self.items)

    @property
    def labels(self) -> np.ndarray:
        return np.array([it.label for it in self.items], dtype=int)

    @property
    def texts(self) -> list[str]:
        return [it.raw_text for it in self.items]


@dataclass(frozen=True)
class StoplistPolicy:
    mode: str = "doc_fraction"  # doc_fraction | top_k | none
    threshold: float = 0.9

    def __post_init__(self) -> None:
        if self.mode not in ("doc_fraction", "top_k", "none"):
            raise ConfigError(f"unknown stoplist mode {self.mode!r}")
        if self.mode == "doc_fraction" and not 0.0 <= self.threshold <= 1.0:
            raise ConfigError(
                f"doc_fraction threshold must be in [0, 1], got {self.threshold}"
            )
        if self.mode == "top_k" and (self.threshold < 0 or self.threshold != int(self.threshold)):
            raise ConfigError(f"top_k threshold must be a non-negative integer, got {self.threshold}")


@dataclass(frozen=True)
class Stoplist:
    removed_tokens: frozenset[str] = frozenset()
    policy: StoplistPolicy = field(default_factory=lambda: StoplistPolicy(mode="none"))

    @classmethod
    def none(cls) -> "Stoplist":
        return cls(frozenset(), StoplistPolicy(mode="none", threshold=0.0))


def load_dataset(path: str | Path, split: str, question_id: str | None = None) -> Dataset:
    """Read a labeled response CSV (header ``id,response,label``).

    Raw text is preserved verbatim; tokens are left empty until
    :func:`with_tokens` runs. Unknown labels and malformed rows raise with the
    offending line number.
    """
    path = Path(path)
    if question_id is None:
        question_id = path.stem
    items = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file, expected header {','.join(CSV_HEADER)}")
        if [h.strip().lower() for h in header] != list(CSV_HEADER):
            raise ParseError(f"{path}:1: expected header {','.join(CSV_HEADER)}, got {','.join(header)}")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ParseError(f"{path}:{line_no}: expected 3 columns, got {len(row)}")
            rid, text, label_raw = row
            if label_raw.strip() not in ("0", "1"):
                raise ValidationError(
                    f"{path}:{line_no}: label must be 0 or 1, got {label_raw!r} (id={rid!r})"
                )
            items.append(LabeledResponse(id=rid, raw_text=text, label=int(label_raw)))
    if not items:
        warnings.warn(f"{path}: no data rows")
    elif len({it.label for it in items}) == 1:
        warnings.warn(f"{path}: only one label present")
    return Dataset(question_id=question_id, items=tuple(items), split=split)


def load_responses(path: str | Path) -> list[tuple[str, str]]:
    """Read (id, response) pairs for prediction; a label column is ignored."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip().lower() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path}: empty file")
        try:
            id_col = header.index("id")
            text_col = header.index("response")
        except ValueError:
            raise ParseError(f"{path}:1: header must contain 'id' and 'response' columns")
        out = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}:{line_no}: expected {len(header)} columns, got {len(row)}")
            out.append((row[id_col], row[text_col]))
    return out


def load_lexicon(path: str | Path) -> dict[str, str]:
    """Load a normalization lexicon: ``nonstandard<TAB>standard`` per line."""
    lex: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ParseError(f"{path}:{line_no}: expected 2 tab-separated columns")
            lex[parts[0]] = parts[1]
    return lex


def default_lexicon() -> dict[str, str]:
    """The lexicon shipped with the package."""
    ref = resources.files("shortscore").joinpath("data/lexicon_id.tsv")
    with resources.as_file(ref) as p:
        return load_lexicon(p)


def _strip_punctuation(text: str) -> str:
    return "".join(c for c in text if not unicodedata.category(c).startswith("P"))


def preprocess(
    text: str,
    lexicon: Mapping[str, str] | None = None,
    stoplist: Stoplist | None = None,
    strip_punctuation: bool = True,
) -> list[str]:
    """Case-fold, strip punctuation, tokenize, normalize, filter.

    Steps in order: lowercase the whole string, remove Unicode punctuation,
    split on whitespace, map each token through the lexicon, drop stoplist
    tokens. Pure and deterministic; an empty result is valid.
    """
    lexicon = lexicon or {}
    removed = stoplist.removed_tokens if stoplist is not None else frozenset()
    folded = text.lower()
    if strip_punctuation:
        folded = _strip_punctuation(folded)
    tokens = [lexicon.get(tok, tok) for tok in folded.split()]
    return [tok for tok in tokens if tok not in removed]


def with_tokens(
    ds: Dataset,
    lexicon: Mapping[str, str] | None = None,
    stoplist: Stoplist | None = None,
) -> Dataset:
    """Return a copy of ``ds`` with tokens filled by :func:`preprocess`."""
    items = tuple(
        replace(it, tokens=tuple(preprocess(it.raw_text, lexicon, stoplist)))
        for it in ds.items
    )
    return replace(ds, items=items)


def build_stoplist(train: Dataset, policy: StoplistPolicy) -> Stoplist:
    """Derive the removed-token set from training-set frequencies.

    ``doc_fraction`` removes tokens appearing in more than ``threshold`` of the
    documents; ``top_k`` removes the ``threshold`` tokens with the highest
    total count, ties broken lexicographically; ``none`` removes nothing.
    """
    if policy.mode == "none":
        return Stoplist(frozenset(), policy)
    doc_freq: Counter[str] = Counter()
    term_freq: Counter[str] = Counter()
    n_docs = 0
    for it in train.items:
        n_docs += 1
        term_freq.update(it.tokens)
        doc_freq.update(set(it.tokens))
    if policy.mode == "doc_fraction":
        if n_docs == 0:
            return Stoplist(frozenset(), policy)
        removed = {t for t, c in doc_freq.items() if c / n_docs > policy.threshold}
        return Stoplist(frozenset(removed), policy)
    # top_k: highest total count first, lexicographic on ties
    k = int(policy.threshold)
    ranked = sorted(term_freq.items(), key=lambda tc: (-tc[1], tc[0]))
    return Stoplist(frozenset(t for t, _ in ranked[:k]), policy)


def stratified_fold_indices(labels: Sequence[int], k: int, seed: int) -> list[np.ndarray]:
    """Partition ``range(len(labels))`` into k label-stratified folds.

    Indices are shuffled within each label class and dealt round-robin with a
    position counter running across classes, so global fold sizes differ by at
    most one and per-fold class counts differ from an even share by at most
    one. Deterministic in ``seed``.
    """
    labels = np.asarray(labels, dtype=int)
    n = len(labels)
    if k < 2:
        raise ValidationError(f"k must be >= 2, got {k}")
    if n < k:
        raise ValidationError(f"cannot split {n} items into {k} folds")
    rng = spawn_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    pos = 0
    for label in sorted(set(labels.tolist())):
        idx = np.flatnonzero(labels == label)
        idx = idx[rng.permutation(len(idx))]
        for i in idx:
            folds[pos % k].append(int(i))
            pos += 1
    return [np.array(sorted(f), dtype=int) for f in folds]


def split_folds(ds: Dataset, k: int, seed: int) -> list[np.ndarray]:
    """Stratified k-fold index sets over ``ds`` (see stratified_fold_indices)."""
    return stratified_fold_indices([it.label for it in ds.items], k, seed)


def subset(ds: Dataset, indices: Iterable[int], split: str | None = None) -> Dataset:
    items = tuple(ds.items[int(i)] for i in indices)
    return Dataset(question_id=ds.question_id, items=items, split=split or ds.split)
