"""Pipeline configuration: defaults plus optional YAML/JSON file overlay."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional

import yaml

from .balance import BalanceConfig
from .corpus import StoplistPolicy, default_lexicon, load_lexicon
from .errors import ConfigError
from .tpe import Hyperparameters


@dataclass(frozen=True)
class PreprocessConfig:
    lexicon: Mapping[str, str] = field(default_factory=default_lexicon)
    stoplist: StoplistPolicy = field(default_factory=StoplistPolicy)


@dataclass(frozen=True)
class FeatureConfig:
    embeddings: str = ""
    dim: int = 0  # 0 = take the store's dimension


@dataclass(frozen=True)
class SearchConfig:
    n_trials: int = 200
    seed: int = 0
    space: Mapping[str, dict] = field(default_factory=dict)


@dataclass(frozen=True)
class EvalConfig:
    k: int = 5
    dev_budget: int = 20
    test_budget: int = 5
    positive_label: int = 1


@dataclass(frozen=True)
class PipelineConfig:
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    balance: BalanceConfig = field(default_factory=BalanceConfig)
    search: SearchConfig = field(default_factory=SearchConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    hp: Optional[Hyperparameters] = None  # fixed point used by the train command


def default_hyperparameters() -> Hyperparameters:
    """Mid-range point used by `train` when the config gives no hp section."""
    return Hyperparameters(
        base_neurons=100,
        base_lr=1e-3,
        base_iters=200,
        gbdt_estimators=100,
        gbdt_lr=0.1,
        gbdt_subsample=1.0,
        meta_layers=1,
        meta_neurons=20,
        meta_lr=1e-3,
        meta_iters=100,
    )


def _parse_lexicon(value) -> Mapping[str, str]:
    if value is None:
        return default_lexicon()
    if isinstance(value, str):
        return load_lexicon(value)
    if isinstance(value, dict):
        return {str(k): str(v) for k, v in value.items()}
    raise ConfigError(f"lexicon must be a path or a mapping, got {type(value).__name__}")


def load_config(path: str | Path | None = None) -> PipelineConfig:
    """Build the run configuration, overlaying the file on the defaults."""
    if path is None:
        return PipelineConfig()
    raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    known = {"preprocess", "features", "balance", "search", "eval", "hp"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"{path}: unknown config sections {sorted(unknown)}")

    pp = raw.get("preprocess", {}) or {}
    stop = pp.get("stoplist", {}) or {}
    preprocess = PreprocessConfig(
        lexicon=_parse_lexicon(pp.get("lexicon")),
        stoplist=StoplistPolicy(
            mode=stop.get("mode", "doc_fraction"),
            threshold=float(stop.get("threshold", 0.9)),
        ),
    )
    feat = raw.get("features", {}) or {}
    features = FeatureConfig(
        embeddings=str(feat.get("embeddings", "")), dim=int(feat.get("dim", 0))
    )
    bal = raw.get("balance", {}) or {}
    balance = BalanceConfig(
        synth_fraction=float(bal.get("synth_fraction", 0.10)),
        k_neighbors=int(bal.get("k_neighbors", 5)),
    )
    search = raw.get("search", {}) or {}
    search_cfg = SearchConfig(
        n_trials=int(search.get("trials", 200)),
        seed=int(search.get("seed", 0)),
        space={str(k): dict(v) for k, v in (search.get("space", {}) or {}).items()},
    )
    ev = raw.get("eval", {}) or {}
    eval_cfg = EvalConfig(
        k=int(ev.get("k", 5)),
        dev_budget=int(ev.get("dev_budget", 20)),
        test_budget=int(ev.get("test_budget", 5)),
        positive_label=int(ev.get("positive_label", 1)),
    )
    hp = None
    if raw.get("hp"):
        merged = default_hyperparameters().as_dict()
        unknown_hp = set(raw["hp"]) - set(merged)
        if unknown_hp:
            raise ConfigError(f"{path}: unknown hp fields {sorted(unknown_hp)}")
        merged.update(raw["hp"])
        hp = Hyperparameters.from_dict(merged)
    return PipelineConfig(
        preprocess=preprocess,
        features=features,
        balance=balance,
        search=search_cfg,
        eval=eval_cfg,
        hp=hp,
    )
