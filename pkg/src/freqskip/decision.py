"""Lightweight decision models over the two handcrafted frequency features.

Three classifier families are available: multinomial logistic regression
(full-batch gradient descent, deterministic zero init), a CART decision tree
(Gini impurity, midpoint thresholds), and a random forest (seeded bootstrap
plus per-split feature subsets).  A fitted model carries its feature
standardizer and the ordered class list (the strategy ladder, most to least
aggressive) it predicts over; ties anywhere resolve toward the less
aggressive class, i.e. the later list position.

Models serialize to a versioned JSON file; a round-trip preserves all
predictions bit-exactly.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

MODEL_FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """Raised for unreadable or unsupported model files."""


@dataclass(frozen=True)
class FeatureVector:
    hf_diff: float
    hf_ratio: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.hf_diff) and math.isfinite(self.hf_ratio)):
            raise ValueError(f"features must be finite, got {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.hf_diff, self.hf_ratio], dtype=np.float64)


@dataclass(frozen=True)
class Standardizer:
    """Per-feature population mean/std; zero-variance features get std 1."""

    means: tuple[float, ...]
    stds: tuple[float, ...]
    zero_variance: tuple[bool, ...]

    def apply(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - np.array(self.means)) / np.array(self.stds)

    @staticmethod
    def identity(n_features: int) -> "Standardizer":
        return Standardizer((0.0,) * n_features, (1.0,) * n_features, (False,) * n_features)


def fit_standardizer(features: np.ndarray) -> Standardizer:
    """Fit per-feature mean and population standard deviation."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise ValueError(f"expected a non-empty (n, d) feature matrix, got shape {x.shape}")
    means = x.mean(axis=0)
    stds = x.std(axis=0)
    zero = stds == 0.0
    stds = np.where(zero, 1.0, stds)
    return Standardizer(
        tuple(float(v) for v in means),
        tuple(float(v) for v in stds),
        tuple(bool(z) for z in zero),
    )


def split_train_val(n: int, ratio: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Seeded shuffle followed by a prefix split; returns index arrays.

    The split is exact (no overlap, full coverage) and both parts are kept
    non-empty.
    """
    if n < 2:
        raise ValueError(f"need at least 2 samples to split, got {n}")
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    perm = np.random.default_rng(seed).permutation(n)
    cut = min(max(int(n * ratio), 1), n - 1)
    return perm[:cut], perm[cut:]


# --------------------------------------------------------------------------
# model configs and containers
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LogRegConfig:
    l2: float = 1e-3
    learning_rate: float = 0.1
    max_epochs: int = 2000
    grad_tol: float = 1e-6


@dataclass(frozen=True)
class TreeConfig:
    max_depth: int = 4
    min_leaf: int = 5


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 50
    max_depth: int = 4
    min_leaf: int = 5
    bootstrap: bool = True
    n_features: int | None = None  # None -> floor(sqrt(d)), at least 1
    seed: int = 0


@dataclass(frozen=True)
class TreeNodes:
    """Flat node arrays; leaf nodes have feature -1 and a class index."""

    feature: tuple[int, ...]
    threshold: tuple[float, ...]
    left: tuple[int, ...]
    right: tuple[int, ...]
    leaf_class: tuple[int, ...]


@dataclass(frozen=True)
class TrainedModel:
    kind: str  # "logreg" | "tree" | "forest" | "two_stage"
    classes: tuple[str, ...]
    standardizer: Standardizer
    weights: np.ndarray | None = None  # logreg: (C, d)
    biases: np.ndarray | None = None  # logreg: (C,)
    tree: TreeNodes | None = None
    trees: tuple[TreeNodes, ...] = ()
    forest_seed: int = 0
    submodels: tuple["TrainedModel", ...] = ()  # two_stage: (skip, uncond)


# --------------------------------------------------------------------------
# training
# --------------------------------------------------------------------------

def _encode_labels(y, classes: tuple[str, ...]) -> np.ndarray:
    index = {c: i for i, c in enumerate(classes)}
    try:
        return np.array([index[label] for label in y], dtype=np.int64)
    except KeyError as exc:
        raise ValueError(f"label {exc.args[0]!r} not in class list {classes}") from None


def _check_training_input(x, y) -> tuple[np.ndarray, list[str]]:
    x = np.asarray(x, dtype=np.float64)
    y = list(y)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError(f"expected a non-empty (n, d) feature matrix, got shape {x.shape}")
    if len(y) != x.shape[0]:
        raise ValueError(f"{len(y)} labels for {x.shape[0]} samples")
    return x, y


def logreg_loss_grad(
    w: np.ndarray, b: np.ndarray, xs: np.ndarray, y_idx: np.ndarray, l2: float
) -> tuple[float, np.ndarray, np.ndarray]:
    """Cross-entropy + L2 loss and its analytic gradient.

    The bias is not regularized.  Exposed at module level so the gradient can
    be checked against finite differences.
    """
    n = xs.shape[0]
    logits = xs @ w.T + b
    logits = logits - logits.max(axis=1, keepdims=True)
    expz = np.exp(logits)
    probs = expz / expz.sum(axis=1, keepdims=True)
    nll = -np.mean(np.log(probs[np.arange(n), y_idx]))
    loss = nll + 0.5 * l2 * float(np.sum(w * w))
    onehot = np.zeros_like(probs)
    onehot[np.arange(n), y_idx] = 1.0
    grad_w = (probs - onehot).T @ xs / n + l2 * w
    grad_b = (probs - onehot).mean(axis=0)
    return float(loss), grad_w, grad_b


def train_logreg(x, y, classes: tuple[str, ...], cfg: LogRegConfig = LogRegConfig()) -> TrainedModel:
    """Multinomial logistic regression by deterministic full-batch descent."""
    x, y = _check_training_input(x, y)
    if len(set(y)) < 2:
        raise ValueError("logistic regression needs at least 2 distinct classes in the data")
    std = fit_standardizer(x)
    xs = std.apply(x)
    y_idx = _encode_labels(y, classes)
    n_classes, n_feat = len(classes), x.shape[1]
    w = np.zeros((n_classes, n_feat))
    b = np.zeros(n_classes)
    for _ in range(cfg.max_epochs):
        _, grad_w, grad_b = logreg_loss_grad(w, b, xs, y_idx, cfg.l2)
        if max(np.abs(grad_w).max(), np.abs(grad_b).max()) < cfg.grad_tol:
            break
        w = w - cfg.learning_rate * grad_w
        b = b - cfg.learning_rate * grad_b
    return TrainedModel(kind="logreg", classes=tuple(classes), standardizer=std, weights=w, biases=b)


def _gini(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - np.sum(p * p))


def _majority(y_idx: np.ndarray, n_classes: int) -> int:
    # ties resolve toward the later (less aggressive) class index
    counts = np.bincount(y_idx, minlength=n_classes)
    best = counts.max()
    return int(np.max(np.where(counts == best)[0]))


def _best_split(
    xs: np.ndarray, y_idx: np.ndarray, n_classes: int, min_leaf: int, features: np.ndarray
) -> tuple[int, float] | None:
    """Exhaustive (feature, midpoint) search minimizing weighted Gini.

    Ties break on lower feature index, then lower threshold, which the
    ascending iteration order realizes by keeping only strict improvements.
    """
    n = xs.shape[0]
    best: tuple[float, int, float] | None = None
    for f in features:
        values = np.unique(xs[:, f])
        if values.size < 2:
            continue
        for lo, hi in zip(values[:-1], values[1:]):
            thr = (lo + hi) / 2.0
            mask = xs[:, f] <= thr
            n_left = int(mask.sum())
            if n_left < min_leaf or n - n_left < min_leaf:
                continue
            score = (
                n_left * _gini(np.bincount(y_idx[mask], minlength=n_classes))
                + (n - n_left) * _gini(np.bincount(y_idx[~mask], minlength=n_classes))
            ) / n
            if best is None or score < best[0]:
                best = (score, int(f), float(thr))
    if best is None:
        return None
    return best[1], best[2]


class _TreeBuilder:
    def __init__(self, n_classes: int, max_depth: int, min_leaf: int):
        self.n_classes = n_classes
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.leaf_class: list[int] = []

    def _add_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.leaf_class.append(-1)
        return len(self.feature) - 1

    def build(self, xs: np.ndarray, y_idx: np.ndarray, depth: int, feature_picker) -> int:
        node = self._add_node()
        pure = np.unique(y_idx).size <= 1
        split = None
        if not pure and depth < self.max_depth:
            split = _best_split(xs, y_idx, self.n_classes, self.min_leaf, feature_picker(xs.shape[1]))
        if split is None:
            self.leaf_class[node] = _majority(y_idx, self.n_classes)
            return node
        f, thr = split
        mask = xs[:, f] <= thr
        self.feature[node] = f
        self.threshold[node] = thr
        self.left[node] = self.build(xs[mask], y_idx[mask], depth + 1, feature_picker)
        self.right[node] = self.build(xs[~mask], y_idx[~mask], depth + 1, feature_picker)
        return node

    def nodes(self) -> TreeNodes:
        return TreeNodes(
            feature=tuple(self.feature),
            threshold=tuple(self.threshold),
            left=tuple(self.left),
            right=tuple(self.right),
            leaf_class=tuple(self.leaf_class),
        )


def _all_features(d: int) -> np.ndarray:
    return np.arange(d)


def train_tree(x, y, classes: tuple[str, ...], cfg: TreeConfig = TreeConfig()) -> TrainedModel:
    """CART with Gini impurity and midpoint candidate thresholds."""
    x, y = _check_training_input(x, y)
    std = fit_standardizer(x)
    xs = std.apply(x)
    y_idx = _encode_labels(y, classes)
    builder = _TreeBuilder(len(classes), cfg.max_depth, cfg.min_leaf)
    builder.build(xs, y_idx, 0, _all_features)
    return TrainedModel(kind="tree", classes=tuple(classes), standardizer=std, tree=builder.nodes())


def train_forest(x, y, classes: tuple[str, ...], cfg: ForestConfig = ForestConfig()) -> TrainedModel:
    """Bagged CART ensemble with per-split random feature subsets."""
    x, y = _check_training_input(x, y)
    if cfg.n_trees < 1:
        raise ValueError(f"n_trees must be >= 1, got {cfg.n_trees}")
    std = fit_standardizer(x)
    xs = std.apply(x)
    y_idx = _encode_labels(y, classes)
    n, d = xs.shape
    n_feat = cfg.n_features if cfg.n_features is not None else max(1, math.isqrt(d))
    trees = []
    for t in range(cfg.n_trees):
        rng = np.random.default_rng((cfg.seed, t))
        idx = rng.integers(0, n, size=n) if cfg.bootstrap else np.arange(n)
        if n_feat >= d:
            picker = _all_features
        else:
            def picker(dim: int, rng=rng, k=n_feat) -> np.ndarray:
                return np.sort(rng.choice(dim, size=min(k, dim), replace=False))
        builder = _TreeBuilder(len(classes), cfg.max_depth, cfg.min_leaf)
        builder.build(xs[idx], y_idx[idx], 0, picker)
        trees.append(builder.nodes())
    return TrainedModel(
        kind="forest",
        classes=tuple(classes),
        standardizer=std,
        trees=tuple(trees),
        forest_seed=cfg.seed,
    )


def train_two_stage(
    x,
    y,
    classes: tuple[str, ...],
    kind: str = "logreg",
    cfg: LogRegConfig | TreeConfig | ForestConfig | None = None,
) -> TrainedModel:
    """Two independent models queried in order: skip decisions, then uncond.

    The skip model sees all samples with non-skip labels collapsed to
    'none'; the uncond model is trained on the non-skip samples only.  At
    prediction time a skip answer wins outright, otherwise the uncond model
    decides.
    """
    x, y = _check_training_input(x, y)
    skip_classes = tuple(c for c in classes if c.startswith("skip_")) + ("none",)
    rest_classes = tuple(c for c in classes if not c.startswith("skip_"))
    y_skip = [label if label.startswith("skip_") else "none" for label in y]
    rest_rows = [i for i, label in enumerate(y) if not label.startswith("skip_")]
    if not rest_rows:
        raise ValueError("two-stage training needs at least one non-skip sample")
    y_rest = [y[i] for i in rest_rows]
    x_rest = x[rest_rows]
    trainer = {"logreg": train_logreg, "tree": train_tree, "forest": train_forest}[kind]
    args = (cfg,) if cfg is not None else ()
    skip_model = trainer(x, y_skip, skip_classes, *args)
    if kind == "logreg" and len(set(y_rest)) < 2:
        # logreg cannot fit a single class; a one-leaf tree is the same constant
        uncond_model = train_tree(x_rest, y_rest, rest_classes)
    else:
        uncond_model = trainer(x_rest, y_rest, rest_classes, *args)
    return TrainedModel(
        kind="two_stage",
        classes=tuple(classes),
        standardizer=fit_standardizer(x),
        submodels=(skip_model, uncond_model),
    )


# --------------------------------------------------------------------------
# prediction
# --------------------------------------------------------------------------

def predict_proba(model: TrainedModel, features: FeatureVector) -> np.ndarray:
    """Class probabilities (logreg only)."""
    if model.kind != "logreg":
        raise ValueError(f"predict_proba needs a logreg model, got {model.kind!r}")
    xs = model.standardizer.apply(features.as_array())
    logits = model.weights @ xs + model.biases
    logits = logits - logits.max()
    expz = np.exp(logits)
    return expz / expz.sum()


def _tree_class(nodes: TreeNodes, xs: np.ndarray) -> int:
    i = 0
    while nodes.leaf_class[i] < 0:
        i = nodes.left[i] if xs[nodes.feature[i]] <= nodes.threshold[i] else nodes.right[i]
    return nodes.leaf_class[i]


def _last_argmax(values: np.ndarray) -> int:
    best = values.max()
    return int(np.max(np.where(values == best)[0]))


def predict(model: TrainedModel, features: FeatureVector) -> str:
    """Predicted strategy identifier; ties resolve to the less aggressive class."""
    xs = model.standardizer.apply(features.as_array())
    if model.kind == "logreg":
        probs = predict_proba(model, features)
        return model.classes[_last_argmax(probs)]
    if model.kind == "tree":
        return model.classes[_tree_class(model.tree, xs)]
    if model.kind == "forest":
        votes = np.zeros(len(model.classes))
        for nodes in model.trees:
            votes[_tree_class(nodes, xs)] += 1.0
        return model.classes[_last_argmax(votes)]
    if model.kind == "two_stage":
        skip_model, uncond_model = model.submodels
        answer = predict(skip_model, features)
        if answer != "none":
            return answer
        return predict(uncond_model, features)
    raise ValueError(f"unknown model kind {model.kind!r}")


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------

def _std_to_json(std: Standardizer) -> dict:
    return {
        "means": list(std.means),
        "stds": list(std.stds),
        "zero_variance": list(std.zero_variance),
    }


def _std_from_json(obj: dict) -> Standardizer:
    return Standardizer(
        means=tuple(obj["means"]),
        stds=tuple(obj["stds"]),
        zero_variance=tuple(bool(z) for z in obj["zero_variance"]),
    )


def _tree_to_json(nodes: TreeNodes) -> dict:
    return {
        "feature": list(nodes.feature),
        "threshold": list(nodes.threshold),
        "left": list(nodes.left),
        "right": list(nodes.right),
        "leaf_class": list(nodes.leaf_class),
    }


def _tree_from_json(obj: dict) -> TreeNodes:
    return TreeNodes(
        feature=tuple(obj["feature"]),
        threshold=tuple(obj["threshold"]),
        left=tuple(obj["left"]),
        right=tuple(obj["right"]),
        leaf_class=tuple(obj["leaf_class"]),
    )


def _model_to_json(model: TrainedModel) -> dict:
    body = {
        "version": MODEL_FORMAT_VERSION,
        "kind": model.kind,
        "classes": list(model.classes),
        "standardizer": _std_to_json(model.standardizer),
    }
    if model.kind == "logreg":
        body["params"] = {"weights": model.weights.tolist(), "biases": model.biases.tolist()}
    elif model.kind == "tree":
        body["params"] = {"tree": _tree_to_json(model.tree)}
    elif model.kind == "forest":
        body["params"] = {"seed": model.forest_seed, "trees": [_tree_to_json(t) for t in model.trees]}
    elif model.kind == "two_stage":
        body["params"] = {
            "skip": _model_to_json(model.submodels[0]),
            "uncond": _model_to_json(model.submodels[1]),
        }
    else:
        raise ValueError(f"unknown model kind {model.kind!r}")
    return body


def _model_from_json(obj: dict) -> TrainedModel:
    if not isinstance(obj, dict) or "version" not in obj:
        raise ModelFormatError("not a model file (missing version field)")
    if obj["version"] != MODEL_FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format version {obj['version']!r}")
    kind = obj.get("kind")
    classes = tuple(obj["classes"])
    std = _std_from_json(obj["standardizer"])
    params = obj["params"]
    if kind == "logreg":
        return TrainedModel(
            kind=kind,
            classes=classes,
            standardizer=std,
            weights=np.array(params["weights"], dtype=np.float64),
            biases=np.array(params["biases"], dtype=np.float64),
        )
    if kind == "tree":
        return TrainedModel(kind=kind, classes=classes, standardizer=std, tree=_tree_from_json(params["tree"]))
    if kind == "forest":
        return TrainedModel(
            kind=kind,
            classes=classes,
            standardizer=std,
            trees=tuple(_tree_from_json(t) for t in params["trees"]),
            forest_seed=params["seed"],
        )
    if kind == "two_stage":
        return TrainedModel(
            kind=kind,
            classes=classes,
            standardizer=std,
            submodels=(_model_from_json(params["skip"]), _model_from_json(params["uncond"])),
        )
    raise ModelFormatError(f"unknown model kind {kind!r}")


def save_model(model: TrainedModel, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="ascii") as fh:
        json.dump(_model_to_json(model), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path: str | os.PathLike) -> TrainedModel:
    try:
        with open(path, "r", encoding="ascii") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{os.fspath(path)}: malformed JSON ({exc})") from exc
    return _model_from_json(obj)
