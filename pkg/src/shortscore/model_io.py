"""Versioned model persistence.

The model file is a JSON document with all numeric arrays in decimal, so it
is portable and diffable; save -> load -> save is byte-identical. Word
vectors are not embedded, only the source file's digest, so loading for
prediction requires the original vector file.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from pathlib import Path

import numpy as np

from . import gbdt, nnet, stack
from .corpus import Stoplist, StoplistPolicy
from .embedding import FeaturizerConfig
from .errors import ParseError
from .pipeline import PipelineModel, Preprocessor
from .tpe import Hyperparameters

FORMAT_VERSION = 1


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _mlp_to_doc(model: nnet.MlpModel) -> dict:
    return {
        "layer_sizes": list(model.layer_sizes),
        "weights": [w.tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
    }


def _mlp_from_doc(doc: dict) -> nnet.MlpModel:
    return nnet.MlpModel(
        layer_sizes=tuple(doc["layer_sizes"]),
        weights=[np.array(w, dtype=np.float64) for w in doc["weights"]],
        biases=[np.array(b, dtype=np.float64) for b in doc["biases"]],
    )


def _tree_to_doc(node: gbdt.TreeNode) -> dict:
    if node.is_leaf:
        return {"value": float(node.value)}
    return {
        "feature": int(node.feature),
        "threshold": float(node.threshold),
        "left": _tree_to_doc(node.left),
        "right": _tree_to_doc(node.right),
    }


def _tree_from_doc(doc: dict) -> gbdt.TreeNode:
    if "value" in doc:
        return gbdt.TreeNode(value=doc["value"])
    return gbdt.TreeNode(
        feature=doc["feature"],
        threshold=doc["threshold"],
        left=_tree_from_doc(doc["left"]),
        right=_tree_from_doc(doc["right"]),
    )


def _gbdt_to_doc(model: gbdt.GbdtModel) -> dict:
    return {
        "trees": [_tree_to_doc(t) for t in model.trees],
        "learning_rate": float(model.learning_rate),
        "base_score": float(model.base_score),
        "max_depth": int(model.max_depth),
        "reg_lambda": float(model.reg_lambda),
        "subsample": float(model.subsample),
        "n_features": int(model.n_features),
    }


def _gbdt_from_doc(doc: dict) -> gbdt.GbdtModel:
    return gbdt.GbdtModel(
        trees=[_tree_from_doc(t) for t in doc["trees"]],
        learning_rate=doc["learning_rate"],
        base_score=doc["base_score"],
        max_depth=doc["max_depth"],
        reg_lambda=doc["reg_lambda"],
        subsample=doc["subsample"],
        n_features=doc["n_features"],
    )


def model_to_doc(model: PipelineModel) -> dict:
    pre = model.preprocessor
    return {
        "format_version": FORMAT_VERSION,
        "question_id": model.question_id,
        "seed": model.seed,
        "hp": model.hp.as_dict(),
        "preprocessor": {
            "lexicon": dict(pre.lexicon),
            "stoplist": {
                "mode": pre.stoplist.policy.mode,
                "threshold": pre.stoplist.policy.threshold,
                "removed": sorted(pre.stoplist.removed_tokens),
            },
            "max_word_count": pre.max_word_count,
        },
        "embeddings": {
            "path": model.embeddings_path,
            "sha256": model.embeddings_digest,
            "dim": model.dim,
        },
        "base_mlp": _mlp_to_doc(model.stack_model.base_mlp),
        "gbdt": _gbdt_to_doc(model.stack_model.base_gbdt),
        "meta_mlp": _mlp_to_doc(model.stack_model.meta),
    }


def dumps(model: PipelineModel) -> str:
    return json.dumps(model_to_doc(model), sort_keys=True, indent=1) + "\n"


def model_from_doc(doc: dict) -> PipelineModel:
    if doc.get("format_version") != FORMAT_VERSION:
        raise ParseError(
            f"unsupported model format_version {doc.get('format_version')!r}"
        )
    pre_doc = doc["preprocessor"]
    pre = Preprocessor(
        lexicon=dict(pre_doc["lexicon"]),
        stoplist=Stoplist(
            removed_tokens=frozenset(pre_doc["stoplist"]["removed"]),
            policy=StoplistPolicy(
                mode=pre_doc["stoplist"]["mode"],
                threshold=pre_doc["stoplist"]["threshold"],
            ),
        ),
        max_word_count=pre_doc["max_word_count"],
    )
    hp = Hyperparameters.from_dict(doc["hp"])
    dim = doc["embeddings"]["dim"]
    stack_model = stack.StackingModel(
        base_mlp=_mlp_from_doc(doc["base_mlp"]),
        base_gbdt=_gbdt_from_doc(doc["gbdt"]),
        meta=_mlp_from_doc(doc["meta_mlp"]),
        hp=hp,
        featurizer=FeaturizerConfig(max_train_word_count=pre.max_word_count, dim=dim),
    )
    return PipelineModel(
        question_id=doc["question_id"],
        preprocessor=pre,
        stack_model=stack_model,
        hp=hp,
        seed=doc["seed"],
        dim=dim,
        embeddings_path=doc["embeddings"]["path"],
        embeddings_digest=doc["embeddings"]["sha256"],
    )


def save_model(model: PipelineModel, path: str | Path) -> None:
    """Atomic write: temp file in the target directory, then rename."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(dumps(model), encoding="utf-8")
    tmp.replace(path)


def load_model(path: str | Path) -> PipelineModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not a valid model file ({exc})")
    return model_from_doc(doc)


def check_embeddings_digest(model: PipelineModel, path: str | Path) -> None:
    """Warn when the vector file differs from the one used at training time."""
    if model.embeddings_digest and file_digest(path) != model.embeddings_digest:
        warnings.warn(
            f"{path}: digest differs from the embedding file the model was trained with"
        )
