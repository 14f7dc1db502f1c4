"""Learner-based resolvers trained on labeled show-page pairs.

Three classifiers are implemented from scratch so that results are
reproducible byte-for-byte: full-batch gradient-descent logistic
regression, a Pegasos-style linear SVM, and a random forest with Gini
splits. The asymmetric misclassification costs enter the linear models as
per-class loss weights; the forest stays cost-blind at train time and picks
up the costs only through threshold selection.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateData, KindMismatch
from .features import FeatureVector

LEARNER_KINDS = ("logistic", "linear_svm", "random_forest")

_SPLIT_TOL = 1e-12


@dataclass(frozen=True)
class CostMatrix:
    """Misclassification costs; correct decisions cost nothing."""

    c_fp: float = 1.2
    c_fn: float = 1.0

    def __post_init__(self):
        if self.c_fp <= 0 or self.c_fn <= 0:
            raise ValueError("costs must be positive")


@dataclass
class Dataset:
    """Feature rows in fixed f1..f12 order with binary labels."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        if self.features.ndim != 2 or len(self.features) != len(self.labels):
            raise ValueError("features must be (n, d) with one label per row")
        if len(self.labels) and not set(np.unique(self.labels)) <= {0, 1}:
            raise ValueError("labels must be 0 or 1")

    @classmethod
    def from_pairs(cls, pairs) -> "Dataset":
        rows = [(fv.values() if isinstance(fv, FeatureVector) else list(fv), y) for fv, y in pairs]
        if not rows:
            return cls(np.empty((0, 0)), np.empty((0,), dtype=int))
        return cls(np.array([r[0] for r in rows]), np.array([r[1] for r in rows]))

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def n_features(self) -> int:
        return self.features.shape[1]


@dataclass
class Model:
    """A trained resolver plus its decision threshold on the [0,1] scale."""

    kind: str
    n_features: int
    threshold: float = 0.5
    weights: np.ndarray | None = None
    bias: float = 0.0
    feature_mean: np.ndarray | None = None
    feature_scale: np.ndarray | None = None
    trees: list | None = None
    hyperparams: dict = field(default_factory=dict)
    seed: int | None = None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n_features": self.n_features,
            "threshold": self.threshold,
            "weights": None if self.weights is None else [float(w) for w in self.weights],
            "bias": float(self.bias),
            "feature_mean": None if self.feature_mean is None else [float(v) for v in self.feature_mean],
            "feature_scale": None if self.feature_scale is None else [float(v) for v in self.feature_scale],
            "trees": self.trees,
            "hyperparams": self.hyperparams,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "Model":
        def arr(value):
            return None if value is None else np.asarray(value, dtype=float)

        return cls(
            kind=obj["kind"],
            n_features=obj["n_features"],
            threshold=obj["threshold"],
            weights=arr(obj.get("weights")),
            bias=obj.get("bias", 0.0),
            feature_mean=arr(obj.get("feature_mean")),
            feature_scale=arr(obj.get("feature_scale")),
            trees=obj.get("trees"),
            hyperparams=obj.get("hyperparams", {}),
            seed=obj.get("seed"),
        )


def sample_weights(labels: np.ndarray, cm: CostMatrix) -> np.ndarray:
    """Per-row loss weights: missing a positive costs c_fn, a negative c_fp."""
    return np.where(np.asarray(labels) == 1, cm.c_fn, cm.c_fp)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_objective(
    params: np.ndarray,
    X: np.ndarray,
    y: np.ndarray,
    weights: np.ndarray,
    l2: float,
) -> tuple[float, np.ndarray]:
    """Weighted log-loss with L2 on the weights (bias excluded) and its gradient.

    params packs [w_1..w_d, bias]. Written in the log1p(exp) form so the
    loss stays finite for extreme margins.
    """
    w, b = params[:-1], params[-1]
    z = X @ w + b
    ce = np.logaddexp(0.0, z) - y * z
    n = len(y)
    loss = float(np.dot(weights, ce) / n + 0.5 * l2 * np.dot(w, w))
    r = weights * (_sigmoid(z) - y) / n
    grad = np.concatenate([X.T @ r + l2 * w, [r.sum()]])
    return loss, grad


def _standardize(X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    # A constant column standardizes to zero, so its weight never moves
    # from the zero init.
    scale = np.where(std == 0.0, 1.0, std)
    return (X - mean) / scale, mean, scale


def _check_trainable(data: Dataset) -> None:
    if len(data) == 0:
        raise DegenerateData("empty training data")
    if len(np.unique(data.labels)) < 2:
        raise DegenerateData("training data contains a single class")


def train_logistic(
    data: Dataset,
    cm: CostMatrix = CostMatrix(),
    l2: float = 0.01,
    lr: float = 0.1,
    epochs: int = 500,
    loss_history: list | None = None,
) -> Model:
    """Full-batch gradient descent on cost-weighted log-loss, zero init."""
    _check_trainable(data)
    Xs, mean, scale = _standardize(data.features)
    y = data.labels.astype(float)
    weights = sample_weights(data.labels, cm)
    params = np.zeros(data.n_features + 1)
    for _ in range(epochs):
        loss, grad = logistic_objective(params, Xs, y, weights, l2)
        if loss_history is not None:
            loss_history.append(loss)
        params = params - lr * grad
    return Model(
        kind="logistic",
        n_features=data.n_features,
        weights=params[:-1],
        bias=float(params[-1]),
        feature_mean=mean,
        feature_scale=scale,
        hyperparams={"l2": l2, "lr": lr, "epochs": epochs},
    )


def svm_objective(
    w: np.ndarray,
    b: float,
    X: np.ndarray,
    y_signed: np.ndarray,
    weights: np.ndarray,
    lam: float,
) -> float:
    """Cost-weighted hinge loss plus the L2 term lam * ||w||^2 / 2."""
    margins = y_signed * (X @ w + b)
    hinge = np.maximum(0.0, 1.0 - margins)
    return float(0.5 * lam * np.dot(w, w) + np.mean(weights * hinge))


def train_linear_svm(
    data: Dataset,
    cm: CostMatrix = CostMatrix(),
    lam: float = 0.01,
    epochs: int = 300,
    seed: int = 0,
    objective_history: list | None = None,
) -> Model:
    """Stochastic subgradient descent on the hinge objective, step 1/(lam*t)."""
    _check_trainable(data)
    Xs, mean, scale = _standardize(data.features)
    y_signed = 2.0 * data.labels - 1.0
    weights = sample_weights(data.labels, cm)
    rng = np.random.default_rng(seed)
    n = len(data)
    w = np.zeros(data.n_features)
    b = 0.0
    t = 0
    for _ in range(epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lam * t)
            margin = y_signed[i] * (Xs[i] @ w + b)
            w *= 1.0 - eta * lam
            if margin < 1.0:
                w += eta * weights[i] * y_signed[i] * Xs[i]
                b += eta * weights[i] * y_signed[i]
        if objective_history is not None:
            objective_history.append(svm_objective(w, b, Xs, y_signed, weights, lam))
    return Model(
        kind="linear_svm",
        n_features=data.n_features,
        weights=w,
        bias=b,
        feature_mean=mean,
        feature_scale=scale,
        hyperparams={"lam": lam, "epochs": epochs},
        seed=seed,
    )


def _gini_pair(n_pos: np.ndarray, n_tot: np.ndarray) -> np.ndarray:
    frac = n_pos / n_tot
    return 1.0 - frac**2 - (1.0 - frac) ** 2


def _best_split(X: np.ndarray, y: np.ndarray, feature_ids: np.ndarray):
    """Lowest weighted child Gini over the sampled features; None if no cut."""
    n = len(y)
    best = None
    for f in feature_ids:
        order = np.argsort(X[:, f], kind="stable")
        vs, ys = X[order, f], y[order]
        cuts = np.nonzero(vs[:-1] < vs[1:])[0]
        if len(cuts) == 0:
            continue
        cum_pos = np.cumsum(ys)
        n_left = cuts + 1.0
        n_right = n - n_left
        pos_left = cum_pos[cuts]
        pos_right = cum_pos[-1] - pos_left
        weighted = (
            n_left * _gini_pair(pos_left, n_left) + n_right * _gini_pair(pos_right, n_right)
        ) / n
        i = int(np.argmin(weighted))
        if best is None or weighted[i] < best[0] - _SPLIT_TOL:
            threshold = vs[cuts[i]] / 2.0 + vs[cuts[i] + 1] / 2.0
            if not vs[cuts[i]] <= threshold < vs[cuts[i] + 1]:
                threshold = vs[cuts[i]]  # midpoint rounding collapsed the gap
            best = (float(weighted[i]), int(f), float(threshold))
    return best


def _build_tree(X: np.ndarray, y: np.ndarray, rng, depth: int, max_depth: int, mtry: int) -> dict:
    n = len(y)
    pos_frac = float(y.mean())
    if depth >= max_depth or n < 2 or pos_frac in (0.0, 1.0):
        return {"leaf": pos_frac}
    feature_ids = np.sort(rng.choice(X.shape[1], size=mtry, replace=False))
    node_gini = 1.0 - pos_frac**2 - (1.0 - pos_frac) ** 2
    best = _best_split(X, y, feature_ids)
    if best is None or best[0] >= node_gini - _SPLIT_TOL:
        return {"leaf": pos_frac}
    _, f, threshold = best
    mask = X[:, f] <= threshold
    return {
        "feature": f,
        "threshold": threshold,
        "left": _build_tree(X[mask], y[mask], rng, depth + 1, max_depth, mtry),
        "right": _build_tree(X[~mask], y[~mask], rng, depth + 1, max_depth, mtry),
    }


def _canonical_order(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    # Sort rows so training is a function of the row multiset, not its order.
    keys = [y] + [X[:, j] for j in range(X.shape[1] - 1, -1, -1)]
    return np.lexsort(tuple(keys))


def tree_seeds(seed: int, n_trees: int) -> list:
    """Per-tree seed sequences; the bootstrap draw comes first from each."""
    return np.random.SeedSequence(seed).spawn(n_trees)


def train_random_forest(
    data: Dataset,
    n_trees: int = 50,
    max_depth: int = 6,
    mtry: int = 4,
    seed: int = 0,
) -> Model:
    """Bootstrap-aggregated Gini trees; leaves store the positive fraction."""
    if len(data) == 0:
        raise DegenerateData("empty training data")
    order = _canonical_order(data.features, data.labels)
    X, y = data.features[order], data.labels[order].astype(float)
    mtry = min(mtry, data.n_features)
    n = len(y)
    trees = []
    for child in tree_seeds(seed, n_trees):
        rng = np.random.default_rng(child)
        boot = rng.integers(0, n, size=n)
        trees.append(_build_tree(X[boot], y[boot], rng, 0, max_depth, mtry))
    return Model(
        kind="random_forest",
        n_features=data.n_features,
        trees=trees,
        hyperparams={"n_trees": n_trees, "max_depth": max_depth, "mtry": mtry},
        seed=seed,
    )


def _tree_value(tree: dict, x: np.ndarray) -> float:
    while "leaf" not in tree:
        tree = tree["left"] if x[tree["feature"]] <= tree["threshold"] else tree["right"]
    return tree["leaf"]


def _as_row(fv, n_features: int) -> np.ndarray:
    x = np.asarray(fv.values() if isinstance(fv, FeatureVector) else list(fv), dtype=float)
    if x.shape != (n_features,):
        raise KindMismatch(f"expected {n_features} features, got {x.shape}")
    return x


def predict_proba(model: Model, fv) -> float:
    """Confidence on [0, 1] that the pair resolves to the same entity."""
    x = _as_row(fv, model.n_features)
    if model.kind == "logistic":
        z = (x - model.feature_mean) / model.feature_scale @ model.weights + model.bias
        return float(_sigmoid(np.array([z]))[0])
    if model.kind == "linear_svm":
        margin = (x - model.feature_mean) / model.feature_scale @ model.weights + model.bias
        return float(min(1.0, max(0.0, (margin + 1.0) / 2.0)))
    if model.kind == "random_forest":
        return float(np.mean([_tree_value(tree, x) for tree in model.trees]))
    raise KindMismatch(f"unknown model kind {model.kind!r}")


def predict(model: Model, fv) -> bool:
    return predict_proba(model, fv) >= model.threshold


def train(kind: str, data: Dataset, cm: CostMatrix, params: dict | None = None, seed: int = 0) -> Model:
    """Dispatch to the trainer for `kind` with its hyperparameters."""
    params = dict(params or {})
    if kind == "logistic":
        return train_logistic(data, cm, **params)
    if kind == "linear_svm":
        params.setdefault("seed", seed)
        return train_linear_svm(data, cm, **params)
    if kind == "random_forest":
        params.setdefault("seed", seed)
        return train_random_forest(data, **params)
    raise ValueError(f"unknown learner kind {kind!r}")
