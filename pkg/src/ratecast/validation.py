"""Time-order-preserving model selection and evaluation.

The nested cross validation here never trains on rows that come after the
rows it tests on: each fold places a contiguous training region immediately
before a contiguous test region, then samples row subsets inside each.
Because every training index precedes every test index, lag-style features
cannot leak future information into the score. Scoring always clamps
predictions at zero before computing RMSE.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .models import GbtModel, HyperParams, RfModel, fit_gbt, fit_rf, predict

ModelFamily = Literal["gbt", "rf"]


def rmse(pred: np.ndarray, actual: np.ndarray) -> float:
    pred = np.asarray(pred, dtype=float)
    actual = np.asarray(actual, dtype=float)
    if pred.shape != actual.shape or pred.ndim != 1:
        raise ValueError("pred and actual must be 1-d arrays of equal length")
    if pred.size == 0:
        raise ValueError("rmse of empty arrays is undefined")
    diff = pred - actual
    return float(np.sqrt(np.mean(diff * diff)))


@dataclass(frozen=True)
class CvConfig:
    """Knobs for the fold generator and candidate search."""

    num_params: int = 10
    k: int = 10
    train_width: int = 20000
    test_width: int = 2000
    train_size: int = 5000
    test_size: int = 500
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("num_params", "k", "train_width", "test_width", "train_size", "test_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if self.train_size > self.train_width:
            raise ValueError("train_size must not exceed train_width")
        if self.test_size > self.test_width:
            raise ValueError("test_size must not exceed test_width")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass(frozen=True)
class HyperParamSpace:
    """Sampling ranges per knob: log-uniform learning rate, uniform otherwise.

    ``min_samples_leaf`` is drawn after ``min_samples_split`` and capped by it
    so every draw is a valid :class:`HyperParams`; the space requires
    ``min_samples_leaf[0] <= min_samples_split[0]`` for the cap to be sound.
    Degenerate ranges (lo == hi) pin a knob.
    """

    learning_rate: tuple[float, float] = (0.02, 0.3)
    n_estimators: tuple[int, int] = (50, 400)
    max_depth: tuple[int, int] = (3, 11)
    min_samples_split: tuple[int, int] = (20, 700)
    min_samples_leaf: tuple[int, int] = (5, 20)
    max_features: tuple[float, float] = (1.0, 8.0)
    subsample: tuple[float, float] = (1.0, 1.0)

    def __post_init__(self) -> None:
        for name in (
            "learning_rate",
            "n_estimators",
            "max_depth",
            "min_samples_split",
            "min_samples_leaf",
            "max_features",
            "subsample",
        ):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"empty range for {name}: ({lo}, {hi})")
            if lo <= 0:
                raise ValueError(f"{name} range must be positive")
        if self.learning_rate[0] <= 0:
            raise ValueError("learning_rate range must be positive for log sampling")
        if self.min_samples_leaf[0] > self.min_samples_split[0]:
            raise ValueError(
                "min_samples_leaf lower bound must not exceed min_samples_split lower bound"
            )
        if self.subsample[1] > 1:
            raise ValueError("subsample range must stay within (0, 1]")


def _uniform_int(rng: np.random.Generator, bounds: tuple[int, int]) -> int:
    lo, hi = bounds
    return int(rng.integers(lo, hi + 1))


def sample_hyperparams(space: HyperParamSpace, rng: np.random.Generator) -> HyperParams:
    """Draw one candidate; deterministic for a given generator state."""
    lr_lo, lr_hi = space.learning_rate
    learning_rate = float(math.exp(rng.uniform(math.log(lr_lo), math.log(lr_hi))))
    n_estimators = _uniform_int(rng, space.n_estimators)
    max_depth = _uniform_int(rng, space.max_depth)
    min_samples_split = _uniform_int(rng, space.min_samples_split)
    leaf_hi = min(space.min_samples_leaf[1], min_samples_split)
    min_samples_leaf = _uniform_int(rng, (space.min_samples_leaf[0], leaf_hi))
    max_features = float(rng.uniform(*space.max_features))
    subsample = float(rng.uniform(*space.subsample))
    seed = int(rng.integers(0, 2**31))
    return HyperParams(
        learning_rate=learning_rate,
        n_estimators=n_estimators,
        max_depth=max_depth,
        min_samples_split=min_samples_split,
        min_samples_leaf=min_samples_leaf,
        max_features=max_features,
        subsample=subsample,
        seed=seed,
    )


@dataclass(frozen=True)
class FoldSpec:
    """One fold: contiguous regions plus the row subsets actually used."""

    train_region: tuple[int, int]
    test_region: tuple[int, int]
    train_rows: np.ndarray
    test_rows: np.ndarray


def make_folds(
    n_rows: int, config: CvConfig, rng: np.random.Generator
) -> list[FoldSpec]:
    """Sample ``config.k`` folds; every train row index precedes every test row index.

    The training region start is uniform over all placements that leave room
    for the adjacent test region; regions of different folds may overlap.
    """
    width = config.train_width + config.test_width
    if width > n_rows:
        raise ValueError(
            f"train_width + test_width = {width} exceeds {n_rows} rows"
        )
    folds = []
    for _ in range(config.k):
        a = int(rng.integers(0, n_rows - width + 1))
        train_lo, train_hi = a, a + config.train_width
        test_lo, test_hi = train_hi, train_hi + config.test_width
        train_rows = np.sort(
            rng.choice(
                np.arange(train_lo, train_hi), size=config.train_size, replace=False
            )
        )
        test_rows = np.sort(
            rng.choice(np.arange(test_lo, test_hi), size=config.test_size, replace=False)
        )
        folds.append(
            FoldSpec(
                train_region=(train_lo, train_hi),
                test_region=(test_lo, test_hi),
                train_rows=train_rows,
                test_rows=test_rows,
            )
        )
    return folds


@dataclass
class CvResult:
    candidates: list[HyperParams]
    fold_rmse: list[list[float]]
    mean_rmse: list[float]
    best_index: int

    @property
    def best_params(self) -> HyperParams:
        return self.candidates[self.best_index]

    def to_dict(self) -> dict:
        return {
            "candidates": [c.to_dict() for c in self.candidates],
            "fold_rmse": self.fold_rmse,
            "mean_rmse": self.mean_rmse,
            "best_index": self.best_index,
            "best_params": self.best_params.to_dict(),
        }


def fit_family(
    family: ModelFamily,
    X: np.ndarray,
    y: np.ndarray,
    params: HyperParams,
    feature_names: Sequence[str] | None = None,
) -> GbtModel | RfModel:
    if family == "gbt":
        return fit_gbt(X, y, params, feature_names)
    if family == "rf":
        return fit_rf(X, y, params, feature_names)
    raise ValueError(f"unknown model family: {family!r}")


def nested_cv(
    X: np.ndarray,
    y: np.ndarray,
    config: CvConfig,
    space: HyperParamSpace | None = None,
    family: ModelFamily = "gbt",
    candidates: Sequence[HyperParams] | None = None,
) -> CvResult:
    """Random-search hyperparameters with order-preserving folds.

    Rows of ``X`` must already be in chronological order. Each candidate owns
    an RNG stream derived from (config.seed, candidate index), so scores do
    not depend on evaluation order. The candidate with the lowest mean fold
    RMSE wins; on ties the earliest-sampled candidate is kept. Passing
    explicit ``candidates`` skips sampling (folds are still drawn per
    candidate from its stream).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if space is None:
        space = HyperParamSpace()
    n_candidates = len(candidates) if candidates is not None else config.num_params

    sampled: list[HyperParams] = []
    fold_rmse: list[list[float]] = []
    mean_rmse: list[float] = []
    best_index = 0
    for c in range(n_candidates):
        rng = np.random.default_rng((config.seed, c))
        if candidates is not None:
            params = candidates[c]
        else:
            params = sample_hyperparams(space, rng)
        scores = []
        for fold in make_folds(X.shape[0], config, rng):
            model = fit_family(family, X[fold.train_rows], y[fold.train_rows], params)
            preds = predict(model, X[fold.test_rows])
            scores.append(rmse(preds, y[fold.test_rows]))
        sampled.append(params)
        fold_rmse.append(scores)
        mean_rmse.append(float(np.mean(scores)))
        if mean_rmse[c] < mean_rmse[best_index]:
            best_index = c
    return CvResult(
        candidates=sampled,
        fold_rmse=fold_rmse,
        mean_rmse=mean_rmse,
        best_index=best_index,
    )


def chronological_split(n_rows: int, split: float) -> int:
    """Rows in the training side of a chronological ``split`` fraction."""
    if not 0 < split < 1:
        raise ValueError("split must be in (0, 1)")
    n_train = int(n_rows * split + 1e-9)
    return min(max(n_train, 1), n_rows - 1)


@dataclass
class HoldoutResult:
    rmse_mbs: float
    n_train: int
    train_rows: np.ndarray
    test_rows: np.ndarray
    predictions: np.ndarray
    actuals: np.ndarray


def holdout_eval(
    X: np.ndarray,
    y: np.ndarray,
    params: HyperParams,
    family: ModelFamily = "gbt",
    split: float = 0.9,
    train_subset: int | None = None,
    test_subset: int | None = None,
    seed: int = 0,
) -> HoldoutResult:
    """Chronological holdout: train on the first ``split`` of rows, test on the rest.

    Optional seeded uniform subsets shrink either side, mirroring protocols
    that retrain on a slice of history and score on a slice of the future.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = X.shape[0]
    if n < 2:
        raise ValueError("need at least 2 rows for a holdout split")
    n_train = chronological_split(n, split)
    rng = np.random.default_rng(seed)
    if train_subset is not None:
        if train_subset > n_train:
            raise ValueError(f"train_subset {train_subset} exceeds side of {n_train}")
        train_rows = np.sort(rng.choice(n_train, size=train_subset, replace=False))
    else:
        train_rows = np.arange(n_train)
    n_test_side = n - n_train
    if test_subset is not None:
        if test_subset > n_test_side:
            raise ValueError(f"test_subset {test_subset} exceeds side of {n_test_side}")
        test_rows = np.sort(
            n_train + rng.choice(n_test_side, size=test_subset, replace=False)
        )
    else:
        test_rows = np.arange(n_train, n)

    model = fit_family(family, X[train_rows], y[train_rows], params)
    preds = predict(model, X[test_rows])
    return HoldoutResult(
        rmse_mbs=rmse(preds, y[test_rows]),
        n_train=n_train,
        train_rows=train_rows,
        test_rows=test_rows,
        predictions=preds,
        actuals=y[test_rows],
    )
