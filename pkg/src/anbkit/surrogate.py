"""Gradient-boosted regression-tree surrogate.

Least-squares boosting over exact-greedy variance-reduction trees. The
ensemble maps encoded architectures to a metric value and is the
zero-cost stand-in for training or on-device measurement. Models persist
to a versioned JSON format with full round-trip precision.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from anbkit.archspace import as_rng
from anbkit.metrics import kendall_tau, mean_abs_error, r_squared

FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """Model file is truncated, unparseable, or structurally malformed."""


class ModelVersionError(ModelFormatError):
    """Model file declares an unsupported format version."""


@dataclass(frozen=True)
class FitConfig:
    n_trees: int = 300
    max_depth: int = 7
    learning_rate: float = 0.1
    min_samples_leaf: int = 5
    subsample_rows: float = 1.0
    subsample_features: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must be in (0, 1]")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        for name in ("subsample_rows", "subsample_features"):
            frac = getattr(self, name)
            if not 0.0 < frac <= 1.0:
                raise ValueError(f"{name} must be in (0, 1]")


class RegressionTree:
    """Binary regression tree in flat-array form.

    Internal node i routes x to ``left[i]`` when x[feature[i]] < threshold[i],
    else to ``right[i]``. Leaves are marked by feature == -1. Nodes are in
    preorder, so child indices always exceed the parent's.
    """

    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=np.int32)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int32)
        self.right = np.asarray(right, dtype=np.int32)
        self.value = np.asarray(value, dtype=np.float64)

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        idx = np.zeros(X.shape[0], dtype=np.int32)
        feat = self.feature[idx]
        while np.any(feat >= 0):
            active = feat >= 0
            rows = np.flatnonzero(active)
            node = idx[rows]
            go_left = X[rows, self.feature[node]] < self.threshold[node]
            idx[rows] = np.where(go_left, self.left[node], self.right[node])
            feat = self.feature[idx]
        return self.value[idx]

    def predict_one(self, x) -> float:
        node = 0
        feature = self.feature
        while feature[node] >= 0:
            if x[feature[node]] < self.threshold[node]:
                node = self.left[node]
            else:
                node = self.right[node]
        return float(self.value[node])

    def used_features(self) -> set[int]:
        return set(int(f) for f in self.feature if f >= 0)

    def node_dicts(self) -> list[dict]:
        nodes = []
        for i in range(len(self.feature)):
            if self.feature[i] < 0:
                nodes.append({"value": float(self.value[i])})
            else:
                nodes.append({"split_feature": int(self.feature[i]),
                              "threshold": float(self.threshold[i]),
                              "left": int(self.left[i]),
                              "right": int(self.right[i])})
        return nodes


class GBDTEnsemble:
    """Additive ensemble: base_score + learning_rate * sum of tree outputs."""

    def __init__(self, base_score: float, learning_rate: float,
                 feature_dim: int, trees: list[RegressionTree],
                 metric_name: str = ""):
        self.base_score = float(base_score)
        self.learning_rate = float(learning_rate)
        self.feature_dim = int(feature_dim)
        self.trees = list(trees)
        self.metric_name = metric_name

    def predict(self, features) -> float:
        x = np.asarray(features, dtype=np.float64)
        if x.shape != (self.feature_dim,):
            raise ValueError(
                f"expected feature vector of length {self.feature_dim}, "
                f"got shape {x.shape}")
        total = 0.0
        for tree in self.trees:
            total += tree.predict_one(x)
        return self.base_score + self.learning_rate * total

    def predict_batch(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.feature_dim:
            raise ValueError(
                f"expected (n, {self.feature_dim}) feature matrix, "
                f"got shape {X.shape}")
        out = np.full(X.shape[0], 0.0)
        for tree in self.trees:
            out += tree.predict(X)
        return self.base_score + self.learning_rate * out


# ---------------------------------------------------------------------------
# tree construction: exact greedy variance-reduction splits
# ---------------------------------------------------------------------------

def _best_split_binary(X, y, min_leaf):
    """Exact split search specialized to {0,1} feature columns."""
    n = y.size
    ones = X.sum(axis=0)
    zeros = n - ones
    s1 = y @ X
    s0 = y.sum() - s1
    valid = (ones >= min_leaf) & (zeros >= min_leaf)
    with np.errstate(divide="ignore", invalid="ignore"):
        score = np.where(valid, s0 ** 2 / zeros + s1 ** 2 / ones, -np.inf)
    feat = int(np.argmax(score))
    if not np.isfinite(score[feat]):
        return None
    return feat, 0.5, float(score[feat])


def _best_split(X, y, min_leaf, binary=False):
    """Best (feature, threshold, score) over all exact splits, or None."""
    n, d = X.shape
    if n < 2 * min_leaf:
        return None
    if binary:
        return _best_split_binary(X, y, min_leaf)
    order = np.argsort(X, axis=0, kind="stable")
    Xs = np.take_along_axis(X, order, axis=0)
    ys = y[order]
    csum = np.cumsum(ys, axis=0)
    total = csum[-1, :]

    counts = np.arange(1, n, dtype=np.float64)[:, None]
    left_sum = csum[:-1, :]
    right_sum = total[None, :] - left_sum
    score = left_sum ** 2 / counts + right_sum ** 2 / (n - counts)

    valid = Xs[:-1, :] < Xs[1:, :]
    if min_leaf > 1:
        valid[: min_leaf - 1, :] = False
        valid[n - min_leaf:, :] = False
    score = np.where(valid, score, -np.inf)

    flat = np.argmax(score)
    if not np.isfinite(score.flat[flat]):
        return None
    pos, feat = np.unravel_index(flat, score.shape)
    threshold = 0.5 * (Xs[pos, feat] + Xs[pos + 1, feat])
    return int(feat), float(threshold), float(score.flat[flat])


def _grow_tree(X, y, max_depth, min_leaf, feature_map, binary=False):
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        return len(feature) - 1

    def build(rows, depth):
        node = new_node()
        yn = y[rows]
        if depth >= max_depth or yn.size < 2 * min_leaf or np.ptp(yn) == 0.0:
            value[node] = float(yn.mean())
            return node
        split = _best_split(X[rows], yn, min_leaf, binary=binary)
        if split is None:
            value[node] = float(yn.mean())
            return node
        feat, thr, _ = split
        go_left = X[rows, feat] < thr
        feature[node] = feature_map[feat]
        threshold[node] = thr
        left[node] = build(rows[go_left], depth + 1)
        right[node] = build(rows[~go_left], depth + 1)
        return node

    build(np.arange(X.shape[0]), 0)
    return RegressionTree(feature, threshold, left, right, value)


def fit(features, targets, config: FitConfig | None = None,
        metric_name: str = "") -> GBDTEnsemble:
    """Least-squares boosting: each tree fits the current residuals.

    Deterministic given ``config.seed``; when both subsampling fractions
    are 1.0 the seed is never consulted.
    """
    config = config or FitConfig()
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ValueError("features must be (n, d) with matching (n,) targets")
    n, d = X.shape
    if n < 2 * config.min_samples_leaf:
        raise ValueError(
            f"need at least {2 * config.min_samples_leaf} records, got {n}")
    if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
        raise ValueError("features and targets must be finite")

    rng = as_rng(config.seed)
    use_row_sub = config.subsample_rows < 1.0
    use_col_sub = config.subsample_features < 1.0
    n_rows = max(2 * config.min_samples_leaf,
                 int(round(config.subsample_rows * n)))
    n_cols = max(1, int(round(config.subsample_features * d)))

    # one-hot matrices take a cheaper exact splitter with identical results
    binary = bool(np.isin(X, (0.0, 1.0)).all())

    base_score = float(y.mean())
    pred = np.full(n, base_score)
    trees: list[RegressionTree] = []
    for _ in range(config.n_trees):
        resid = y - pred
        rows = (np.sort(rng.choice(n, size=n_rows, replace=False))
                if use_row_sub else np.arange(n))
        cols = (np.sort(rng.choice(d, size=n_cols, replace=False))
                if use_col_sub else np.arange(d))
        tree = _grow_tree(X[np.ix_(rows, cols)], resid[rows],
                          config.max_depth, config.min_samples_leaf,
                          feature_map=cols, binary=binary)
        trees.append(tree)
        pred += config.learning_rate * tree.predict(X)
    return GBDTEnsemble(base_score, config.learning_rate, d, trees,
                        metric_name=metric_name)


# ---------------------------------------------------------------------------
# hyperparameter tuning and evaluation
# ---------------------------------------------------------------------------

# Fixed random-search grid; the tuner draws uniformly from the cross
# product and keeps the config with the best validation rank correlation.
TUNE_GRID = {
    "n_trees": (100, 300, 1000),
    "max_depth": (3, 5, 7, 9),
    "learning_rate": (0.03, 0.1, 0.3),
    "min_samples_leaf": (1, 5, 20),
    "subsample_rows": (0.7, 1.0),
    "subsample_features": (0.7, 1.0),
}


def tune(train_features, train_targets, val_features, val_targets,
         budget: int, rng) -> tuple[FitConfig, float]:
    """Seeded random search over TUNE_GRID.

    Selects the draw maximizing validation Kendall tau; ties broken by
    lower validation MAE, then by earlier draw. Returns the winning
    config (with its fit seed) and its validation tau.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    rng = as_rng(rng)
    val_y = np.asarray(val_targets, dtype=np.float64)

    best = None
    for draw in range(budget):
        choices = {name: values[rng.integers(len(values))]
                   for name, values in TUNE_GRID.items()}
        config = FitConfig(seed=int(rng.integers(2 ** 31)), **choices)
        model = fit(train_features, train_targets, config)
        pred = model.predict_batch(val_features)
        tau = kendall_tau(val_y, pred)
        mae = mean_abs_error(val_y, pred)
        key = (-tau, mae, draw)
        if best is None or key < best[0]:
            best = (key, config, tau)
    return best[1], best[2]


def evaluate(model: GBDTEnsemble, features, targets) -> dict[str, float]:
    """Test-split report with exactly the keys r2, tau and mae."""
    y = np.asarray(targets, dtype=np.float64)
    if y.size == 0:
        raise ValueError("empty evaluation split")
    pred = model.predict_batch(features)
    if y.size == 1:
        return {"r2": math.nan, "tau": math.nan,
                "mae": mean_abs_error(y, pred)}
    return {"r2": r_squared(y, pred),
            "tau": kendall_tau(y, pred),
            "mae": mean_abs_error(y, pred)}


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def save(model: GBDTEnsemble, path) -> None:
    doc = {
        "format_version": FORMAT_VERSION,
        "metric_name": model.metric_name,
        "feature_dim": model.feature_dim,
        "base_score": model.base_score,
        "learning_rate": model.learning_rate,
        "trees": [{"nodes": tree.node_dicts()} for tree in model.trees],
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True) + "\n")


def _parse_tree(nodes, tree_index: int) -> RegressionTree:
    if not isinstance(nodes, list) or not nodes:
        raise ModelFormatError(f"tree {tree_index}: empty or malformed node list")
    n = len(nodes)
    feature = [-1] * n
    threshold = [0.0] * n
    left = [-1] * n
    right = [-1] * n
    value = [0.0] * n
    for i, node in enumerate(nodes):
        where = f"tree {tree_index} node {i}"
        if not isinstance(node, dict):
            raise ModelFormatError(f"{where}: node must be an object")
        if "value" in node:
            if set(node) != {"value"} or not isinstance(node["value"], (int, float)):
                raise ModelFormatError(f"{where}: malformed leaf")
            value[i] = float(node["value"])
        else:
            expected = {"split_feature", "threshold", "left", "right"}
            if set(node) != expected:
                raise ModelFormatError(f"{where}: malformed internal node")
            li, ri = node["left"], node["right"]
            if not (isinstance(li, int) and isinstance(ri, int)
                    and i < li < n and i < ri < n and li != ri):
                raise ModelFormatError(f"{where}: bad child indices")
            feature[i] = int(node["split_feature"])
            threshold[i] = float(node["threshold"])
            left[i] = li
            right[i] = ri
    return RegressionTree(feature, threshold, left, right, value)


def load(path) -> GBDTEnsemble:
    try:
        text = Path(path).read_text()
        doc = json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"cannot parse model file {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be a JSON object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelVersionError(
            f"unsupported model format_version {version!r}, "
            f"expected {FORMAT_VERSION}")
    try:
        feature_dim = int(doc["feature_dim"])
        trees = [_parse_tree(t.get("nodes"), i)
                 for i, t in enumerate(doc["trees"])]
        model = GBDTEnsemble(float(doc["base_score"]),
                             float(doc["learning_rate"]),
                             feature_dim, trees,
                             metric_name=str(doc.get("metric_name", "")))
    except ModelFormatError:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise ModelFormatError(f"malformed model document: {exc}") from exc
    for i, tree in enumerate(model.trees):
        if np.any(tree.feature >= feature_dim):
            raise ModelFormatError(
                f"tree {i} splits on feature outside feature_dim")
    return model
