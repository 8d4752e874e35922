"""Five regression families implemented natively, plus evaluation and timing.

Families: k-nearest-neighbors, ridge (closed form), elastic net (cyclic
coordinate descent), random forest (bagged variance-reduction trees with
per-split feature subsets), gradient boosting (stage-wise residual trees).
Everything is seed-deterministic; no external ML dependency.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError
from .metrics import round_half_up
from .seeds import mix64, rng_from

FAMILIES = ("knn", "ridge", "elastic_net", "random_forest", "grad_boost")

DEFAULT_HYPERPARAMETERS = {
    "knn": {"k": 5, "distance_weighted": False},
    "ridge": {"l2": 1.0},
    "elastic_net": {"penalty": 0.001, "l1_ratio": 0.5, "max_iter": 1000, "tol": 1e-6},
    "random_forest": {
        "trees": 100,
        "max_depth": 12,
        "min_leaf": 2,
        "feature_subsample": 1.0 / 3.0,
        "bootstrap": True,
    },
    "grad_boost": {"stages": 100, "depth": 3, "learning_rate": 0.1, "subsample": 1.0},
}


@dataclass(frozen=True)
class ModelSpec:
    family: str
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(f"unknown model family: {self.family!r}")
        merged = dict(DEFAULT_HYPERPARAMETERS[self.family])
        unknown = set(self.hyperparameters) - set(merged)
        if unknown:
            raise ConfigurationError(f"unknown hyperparameters for {self.family}: {unknown}")
        merged.update(self.hyperparameters)
        object.__setattr__(self, "hyperparameters", merged)


@dataclass
class FittedModel:
    family: str
    state: object
    n_features: int
    fit_seconds: float = 0.0


# ---------------------------------------------------------------------------
# regression trees (shared by random_forest and grad_boost)


@dataclass
class _Tree:
    feature: np.ndarray   # -1 marks a leaf
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray


def _best_split(X, y, feats, min_leaf):
    """Exhaustive variance-reduction search over midpoints of sorted uniques.

    Ties resolve to the earliest feature in `feats` and the lowest threshold.
    Returns (sse, feature, threshold) or None when no valid split exists.
    """
    n = y.size
    total_s1 = y.sum()
    total_s2 = (y * y).sum()
    positions = np.arange(1, n)
    best = None
    for f in feats:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        ys = y[order]
        valid = xs[1:] != xs[:-1]
        if min_leaf > 1:
            valid = valid & (positions >= min_leaf) & (n - positions >= min_leaf)
        if not valid.any():
            continue
        c1 = np.cumsum(ys)[:-1]
        c2 = np.cumsum(ys * ys)[:-1]
        sse = (c2 - c1 * c1 / positions) + (
            (total_s2 - c2) - (total_s1 - c1) ** 2 / (n - positions)
        )
        sse[~valid] = np.inf
        k = int(np.argmin(sse))
        if best is None or sse[k] < best[0]:
            best = (float(sse[k]), int(f), float((xs[k] + xs[k + 1]) / 2.0))
    return best


def _grow_tree(X, y, rng, max_depth, min_leaf, n_split_features):
    feature, threshold, left, right, value = [], [], [], [], []
    n_total_features = X.shape[1]

    def new_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        return len(feature) - 1

    def grow(rows, depth):
        node = new_node()
        yv = y[rows]
        value[node] = float(yv.mean())
        if depth >= max_depth or rows.size < 2 * min_leaf or yv.min() == yv.max():
            return node
        if n_split_features < n_total_features:
            feats = np.sort(rng.choice(n_total_features, size=n_split_features, replace=False))
        else:
            feats = np.arange(n_total_features)
        parent_sse = float((yv * yv).sum() - yv.sum() ** 2 / rows.size)
        split = _best_split(X[rows], yv, feats, min_leaf)
        if split is None or not (split[0] < parent_sse):
            return node
        _, f, thr = split
        go_left = X[rows, f] <= thr
        if go_left.all() or not go_left.any():
            return node  # midpoint collapsed onto a sample value
        feature[node] = f
        threshold[node] = thr
        left[node] = grow(rows[go_left], depth + 1)
        right[node] = grow(rows[~go_left], depth + 1)
        return node

    grow(np.arange(X.shape[0]), 0)
    return _Tree(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        value=np.array(value, dtype=np.float64),
    )


def _tree_predict(tree: _Tree, X: np.ndarray) -> np.ndarray:
    out = np.empty(X.shape[0])
    node = np.zeros(X.shape[0], dtype=np.int64)
    active = np.arange(X.shape[0])
    while active.size:
        cur = node[active]
        leaf = tree.feature[cur] < 0
        done = active[leaf]
        out[done] = tree.value[node[done]]
        active = active[~leaf]
        if not active.size:
            break
        cur = node[active]
        go_left = X[active, tree.feature[cur]] <= tree.threshold[cur]
        node[active] = np.where(go_left, tree.left[cur], tree.right[cur])
    return out


# ---------------------------------------------------------------------------
# family fits


def _fit_knn(hp, X, y, rng):
    return {"X": X.copy(), "y": y.copy(), "k": hp["k"], "weighted": hp["distance_weighted"]}


def _predict_knn(state, X):
    k = min(state["k"], state["y"].size)
    diff = X[:, None, :] - state["X"][None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=-1))
    neighbors = np.argsort(dist, axis=1, kind="stable")[:, :k]
    ny = state["y"][neighbors]
    if state["weighted"]:
        w = 1.0 / (np.take_along_axis(dist, neighbors, axis=1) + 1e-12)
        return (w * ny).sum(axis=1) / w.sum(axis=1)
    return ny.mean(axis=1)


def _fit_ridge(hp, X, y, rng):
    xbar = X.mean(axis=0)
    ybar = y.mean()
    Xc = X - xbar
    yc = y - ybar
    l2 = hp["l2"]
    if l2 > 0:
        w = np.linalg.solve(Xc.T @ Xc + l2 * np.eye(X.shape[1]), Xc.T @ yc)
    else:
        w = np.linalg.lstsq(Xc, yc, rcond=None)[0]
    return {"w": w, "intercept": float(ybar - xbar @ w)}


def _predict_linear(state, X):
    return X @ state["w"] + state["intercept"]


def _soft_threshold(z, gamma):
    return math.copysign(max(abs(z) - gamma, 0.0), z)


def _fit_elastic_net(hp, X, y, rng):
    """Cyclic coordinate descent on centered data.

    Objective (1/(2n))||y - Xw||^2 + penalty*(l1_ratio*|w|_1
    + (1 - l1_ratio)/2*|w|_2^2); with l1_ratio = 0 the stationary point
    matches ridge with l2 = n * penalty.
    """
    n, F = X.shape
    xbar = X.mean(axis=0)
    ybar = y.mean()
    Xc = X - xbar
    yc = y - ybar
    col_sq = (Xc * Xc).sum(axis=0) / n
    lam1 = hp["penalty"] * hp["l1_ratio"]
    lam2 = hp["penalty"] * (1.0 - hp["l1_ratio"])

    w = np.zeros(F)
    resid = yc.copy()
    for _ in range(hp["max_iter"]):
        max_delta = 0.0
        for j in range(F):
            if col_sq[j] == 0.0:
                continue
            rho = (Xc[:, j] @ resid) / n + col_sq[j] * w[j]
            w_new = _soft_threshold(rho, lam1) / (col_sq[j] + lam2)
            delta = w_new - w[j]
            if delta != 0.0:
                resid -= Xc[:, j] * delta
                w[j] = w_new
                max_delta = max(max_delta, abs(delta))
        if max_delta < hp["tol"]:
            break
    return {"w": w, "intercept": float(ybar - xbar @ w)}


def _fit_random_forest(hp, X, y, rng):
    n, F = X.shape
    n_split_features = max(1, round_half_up(F * hp["feature_subsample"]))
    trees = []
    for _ in range(hp["trees"]):
        if hp["bootstrap"]:
            rows = rng.integers(0, n, size=n)
        else:
            rows = np.arange(n)
        trees.append(
            _grow_tree(X[rows], y[rows], rng, hp["max_depth"], hp["min_leaf"], n_split_features)
        )
    return {"trees": trees}


def _predict_random_forest(state, X):
    acc = np.zeros(X.shape[0])
    for tree in state["trees"]:
        acc += _tree_predict(tree, X)
    return acc / len(state["trees"])


def _fit_grad_boost(hp, X, y, rng):
    n, F = X.shape
    base = float(y.mean())
    pred = np.full(n, base)
    trees = []
    for _ in range(hp["stages"]):
        if hp["subsample"] < 1.0:
            m = max(1, round_half_up(n * hp["subsample"]))
            rows = np.sort(rng.permutation(n)[:m])
        else:
            rows = np.arange(n)
        resid = y - pred
        tree = _grow_tree(X[rows], resid[rows], rng, hp["depth"], 1, F)
        trees.append(tree)
        pred += hp["learning_rate"] * _tree_predict(tree, X)
    return {"base": base, "learning_rate": hp["learning_rate"], "trees": trees}


def _predict_grad_boost(state, X):
    acc = np.full(X.shape[0], state["base"])
    for tree in state["trees"]:
        acc += state["learning_rate"] * _tree_predict(tree, X)
    return acc


_FIT = {
    "knn": _fit_knn,
    "ridge": _fit_ridge,
    "elastic_net": _fit_elastic_net,
    "random_forest": _fit_random_forest,
    "grad_boost": _fit_grad_boost,
}

_PREDICT = {
    "knn": _predict_knn,
    "ridge": _predict_linear,
    "elastic_net": _predict_linear,
    "random_forest": _predict_random_forest,
    "grad_boost": _predict_grad_boost,
}


def fit(spec: ModelSpec, features: np.ndarray, targets: np.ndarray) -> FittedModel:
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ConfigurationError("need a 2-d feature matrix with >= 2 rows")
    if X.shape[0] != y.size:
        raise ConfigurationError("features and targets disagree on row count")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise ConfigurationError("non-finite training data")
    rng = rng_from(mix64(spec.seed, FAMILIES.index(spec.family)))
    t0 = time.perf_counter()
    state = _FIT[spec.family](spec.hyperparameters, X, y, rng)
    fit_seconds = time.perf_counter() - t0
    return FittedModel(
        family=spec.family, state=state, n_features=X.shape[1], fit_seconds=fit_seconds
    )


def predict(model: FittedModel, features: np.ndarray) -> np.ndarray:
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(
            f"expected {model.n_features} feature columns, got {X.shape[1] if X.ndim == 2 else X.ndim}"
        )
    return _PREDICT[model.family](model.state, X)


# ---------------------------------------------------------------------------
# evaluation


def evaluate(y_true: Sequence[float], y_pred: Sequence[float]) -> tuple[float, float, float]:
    """(mae, rmse, r2); r2 is -inf (recorded as missing) for constant targets
    with nonzero residual."""
    y_true = np.asarray(y_true, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    if y_true.size == 0 or y_true.shape != y_pred.shape:
        raise ValueError("y_true and y_pred must have equal nonzero length")
    err = y_pred - y_true
    mae = float(np.abs(err).mean())
    rmse = float(math.sqrt((err * err).mean()))
    ss_res = float((err * err).sum())
    ss_tot = float(((y_true - y_true.mean()) ** 2).sum())
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res == 0.0 else -math.inf
    else:
        r2 = 1.0 - ss_res / ss_tot
    return mae, rmse, r2


@dataclass
class EvalRecord:
    split: str
    family: str
    horizon: int
    mae: float
    rmse: float
    r2: float
    fit_seconds: float
    test_seconds: float
    test_per_sample_seconds: float


def best_by_horizon(records: Sequence[EvalRecord]) -> list[EvalRecord]:
    """Per horizon, the record with maximal r2 (family-order tie-break)."""
    by_T: dict[int, EvalRecord] = {}
    for rec in records:
        cur = by_T.get(rec.horizon)
        if cur is None:
            by_T[rec.horizon] = rec
            continue
        r_new = rec.r2 if math.isfinite(rec.r2) else -math.inf
        r_cur = cur.r2 if math.isfinite(cur.r2) else -math.inf
        if r_new > r_cur or (
            r_new == r_cur and FAMILIES.index(rec.family) < FAMILIES.index(cur.family)
        ):
            by_T[rec.horizon] = rec
    return [by_T[T] for T in sorted(by_T)]
