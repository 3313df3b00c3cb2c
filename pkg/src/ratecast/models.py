"""Gradient-boosted and random-forest regression ensembles.

Both ensembles are built from the exact-greedy regression tree in
:mod:`ratecast.tree`: boosting fits each tree to the residuals of the running
prediction with shrinkage, the forest averages trees fit on bootstrap
samples. Predictions are clamped at zero, since a negative transfer rate is
meaningless. Importances are per-feature split gains normalized to sum to 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .tree import RegressionTree, grow_tree

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class HyperParams:
    """Ensemble knobs; defaults are the tuned boosting settings.

    ``max_features`` values >= 1 are rounded to a candidate-feature count per
    split; values below 1 are a fraction of the feature count. Fractional
    counts like 4.12 come out of random hyperparameter sampling.
    """

    learning_rate: float = 0.1
    n_estimators: int = 600
    max_depth: int = 11
    min_samples_split: int = 700
    min_samples_leaf: int = 10
    max_features: float = 4.12
    subsample: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        for name in ("n_estimators", "max_depth", "min_samples_split", "min_samples_leaf"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if self.min_samples_leaf > self.min_samples_split:
            raise ValueError("min_samples_leaf must not exceed min_samples_split")
        if self.max_features <= 0:
            raise ValueError("max_features must be positive")
        if not 0 < self.subsample <= 1:
            raise ValueError("subsample must be in (0, 1]")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def resolve_max_features(self, n_features: int) -> int:
        if self.max_features >= 1:
            count = int(round(self.max_features))
            if count > n_features:
                raise ValueError(
                    f"max_features rounds to {count} but only {n_features} features exist"
                )
            return count
        return max(1, int(round(self.max_features * n_features)))

    def to_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "n_estimators": self.n_estimators,
            "max_depth": self.max_depth,
            "min_samples_split": self.min_samples_split,
            "min_samples_leaf": self.min_samples_leaf,
            "max_features": self.max_features,
            "subsample": self.subsample,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "HyperParams":
        return cls(**payload)


@dataclass
class GbtModel:
    params: HyperParams
    feature_names: list[str]
    base_prediction: float
    trees: list[RegressionTree]
    importances: np.ndarray
    train_loss: list[float] = field(default_factory=list)


@dataclass
class RfModel:
    params: HyperParams
    feature_names: list[str]
    trees: list[RegressionTree]
    importances: np.ndarray
    bootstrap: bool = True


def _validate_training_input(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be a 2-d array")
    if y.ndim != 1 or len(y) != X.shape[0]:
        raise ValueError("y must be 1-d with one value per row of X")
    if X.shape[0] < 2:
        raise ValueError("need at least 2 training rows")
    if X.shape[1] < 1:
        raise ValueError("need at least one feature column")
    return X, y


def _resolve_names(feature_names: Sequence[str] | None, n_features: int) -> list[str]:
    if feature_names is None:
        return [f"f{i}" for i in range(n_features)]
    names = list(feature_names)
    if len(names) != n_features:
        raise ValueError("feature_names length does not match X columns")
    return names


def _aggregate_importances(trees: Sequence[RegressionTree], n_features: int) -> np.ndarray:
    total = np.zeros(n_features)
    for tree in trees:
        total += tree.feature_gains
    gain_sum = total.sum()
    if gain_sum <= 0:
        return np.zeros(n_features)  # no splits anywhere (constant target)
    return total / gain_sum


def fit_gbt(
    X: np.ndarray,
    y: np.ndarray,
    params: HyperParams,
    feature_names: Sequence[str] | None = None,
) -> GbtModel:
    """Stagewise least-squares boosting on residuals with shrinkage.

    With ``subsample=1`` the recorded training loss is non-increasing in the
    number of trees; row subsampling trades that guarantee for variance
    reduction.
    """
    X, y = _validate_training_input(X, y)
    n, n_features = X.shape
    names = _resolve_names(feature_names, n_features)
    n_candidates = params.resolve_max_features(n_features)
    rng = np.random.default_rng(params.seed)

    base = float(y.mean())
    current = np.full(n, base)
    trees: list[RegressionTree] = []
    train_loss: list[float] = []
    all_rows = np.arange(n)
    subsample_size = max(1, int(round(params.subsample * n)))
    for _ in range(params.n_estimators):
        residual = y - current
        if params.subsample < 1.0:
            rows = np.sort(rng.choice(n, size=subsample_size, replace=False))
        else:
            rows = all_rows
        tree = grow_tree(
            X,
            residual,
            rows,
            max_depth=params.max_depth,
            min_samples_split=params.min_samples_split,
            min_samples_leaf=params.min_samples_leaf,
            n_candidate_features=n_candidates,
            rng=rng,
        )
        current = current + params.learning_rate * tree.predict(X)
        trees.append(tree)
        train_loss.append(float(np.mean((y - current) ** 2)))

    return GbtModel(
        params=params,
        feature_names=names,
        base_prediction=base,
        trees=trees,
        importances=_aggregate_importances(trees, n_features),
        train_loss=train_loss,
    )


def fit_rf(
    X: np.ndarray,
    y: np.ndarray,
    params: HyperParams,
    feature_names: Sequence[str] | None = None,
    bootstrap: bool = True,
) -> RfModel:
    """Random forest: bagged exact-greedy trees, prediction = mean over trees.

    ``bootstrap=False`` fits every tree on all rows, so a single-tree forest
    with all features as candidates reproduces a plain tree fit.
    """
    X, y = _validate_training_input(X, y)
    n, n_features = X.shape
    names = _resolve_names(feature_names, n_features)
    n_candidates = params.resolve_max_features(n_features)
    rng = np.random.default_rng(params.seed)

    trees: list[RegressionTree] = []
    sample_size = max(1, int(round(params.subsample * n)))
    for _ in range(params.n_estimators):
        if bootstrap:
            rows = np.sort(rng.choice(n, size=sample_size, replace=True))
        else:
            rows = np.arange(n)
        trees.append(
            grow_tree(
                X,
                y,
                rows,
                max_depth=params.max_depth,
                min_samples_split=params.min_samples_split,
                min_samples_leaf=params.min_samples_leaf,
                n_candidate_features=n_candidates,
                rng=rng,
            )
        )
    return RfModel(
        params=params,
        feature_names=names,
        trees=trees,
        importances=_aggregate_importances(trees, n_features),
        bootstrap=bootstrap,
    )


def predict_raw(model: GbtModel | RfModel, X: np.ndarray) -> np.ndarray:
    """Unclamped ensemble output; prefer :func:`predict` for reporting."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be a 2-d array")
    if X.shape[1] != len(model.feature_names):
        raise ValueError(
            f"feature count mismatch: model has {len(model.feature_names)}, "
            f"X has {X.shape[1]}"
        )
    if X.shape[0] == 0:
        return np.zeros(0)
    if isinstance(model, GbtModel):
        out = np.full(X.shape[0], model.base_prediction)
        for tree in model.trees:
            out += model.params.learning_rate * tree.predict(X)
        return out
    out = np.zeros(X.shape[0])
    for tree in model.trees:
        out += tree.predict(X)
    return out / max(1, len(model.trees))


def predict(model: GbtModel | RfModel, X: np.ndarray) -> np.ndarray:
    """Predicted transfer rates, clamped at zero."""
    return np.maximum(predict_raw(model, X), 0.0)


def feature_importance(model: GbtModel | RfModel) -> list[tuple[str, float]]:
    """(name, share) pairs sorted by descending gain share."""
    pairs = list(zip(model.feature_names, (float(v) for v in model.importances)))
    pairs.sort(key=lambda p: (-p[1], p[0]))
    return pairs


def model_to_dict(model: GbtModel | RfModel) -> dict:
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "family": "gbt" if isinstance(model, GbtModel) else "rf",
        "params": model.params.to_dict(),
        "feature_names": model.feature_names,
        "importances": model.importances.tolist(),
        "trees": [t.to_dict() for t in model.trees],
    }
    if isinstance(model, GbtModel):
        payload["base_prediction"] = model.base_prediction
        payload["train_loss"] = model.train_loss
    else:
        payload["bootstrap"] = model.bootstrap
    return payload


def model_from_dict(payload: dict) -> GbtModel | RfModel:
    version = payload.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version: {version!r}")
    params = HyperParams.from_dict(payload["params"])
    trees = [RegressionTree.from_dict(t) for t in payload["trees"]]
    importances = np.asarray(payload["importances"], dtype=float)
    if payload["family"] == "gbt":
        return GbtModel(
            params=params,
            feature_names=list(payload["feature_names"]),
            base_prediction=float(payload["base_prediction"]),
            trees=trees,
            importances=importances,
            train_loss=[float(v) for v in payload.get("train_loss", [])],
        )
    if payload["family"] == "rf":
        return RfModel(
            params=params,
            feature_names=list(payload["feature_names"]),
            trees=trees,
            importances=importances,
            bootstrap=bool(payload.get("bootstrap", True)),
        )
    raise ValueError(f"unknown model family: {payload['family']!r}")


def save_model(model: GbtModel | RfModel, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, sort_keys=True)
        fh.write("\n")


def load_model(path: str) -> GbtModel | RfModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
