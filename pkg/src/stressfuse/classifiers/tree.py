"""CART decision tree with Gini impurity, grown from scratch.

Split ties are broken by lowest feature index, then lowest threshold,
so training is deterministic and invariant to training-row order.
Supports sample weights (needed for boosting) and per-split feature
subsampling through a private hook (needed for forests).
"""

import numpy as np

from ..base import (
    BaseEstimator,
    check_is_fitted,
    check_n_features,
    check_X_y,
    check_array,
)

_GAIN_TOL = 1e-12


class _Node:
    __slots__ = ("feature", "threshold", "left", "right", "proba")

    def __init__(self, feature=-1, threshold=0.0, left=None, right=None, proba=None):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right
        self.proba = proba

    @property
    def is_leaf(self):
        return self.feature < 0


def _class_weights(y, w, n_classes):
    out = np.zeros(n_classes)
    np.add.at(out, y, w)
    return out


def _best_split(X, y, w, n_classes, min_leaf, features):
    """Lowest weighted-Gini split over ``features``; None when the
    leaf-size constraint leaves no candidate."""
    n = len(y)
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), y] = w
    total = onehot.sum(axis=0)
    total_w = total.sum()

    best = None
    for f in features:
        xs_all = X[:, f]
        order = np.argsort(xs_all, kind="stable")
        xs = xs_all[order]
        cum = np.cumsum(onehot[order], axis=0)

        splits = np.arange(min_leaf, n - min_leaf + 1)
        if len(splits) == 0:
            break
        splits = splits[xs[splits] > xs[splits - 1]]
        if len(splits) == 0:
            continue

        left = cum[splits - 1]
        right = total[None, :] - left
        wl = left.sum(axis=1)
        wr = right.sum(axis=1)
        safe_wl = np.maximum(wl, 1e-300)
        safe_wr = np.maximum(wr, 1e-300)
        gini_l = 1.0 - (left**2).sum(axis=1) / safe_wl**2
        gini_r = 1.0 - (right**2).sum(axis=1) / safe_wr**2
        impurity = (wl * gini_l + wr * gini_r) / total_w

        j = int(np.argmin(impurity))
        if best is None or impurity[j] < best[0] - _GAIN_TOL:
            i = splits[j]
            threshold = (xs[i - 1] + xs[i]) / 2.0
            if threshold == xs[i]:
                # midpoint rounded up to the right value; pin to the left
                # one so `x <= threshold` reproduces the evaluated split
                threshold = xs[i - 1]
            best = (float(impurity[j]), int(f), float(threshold))
    return best


def grow_tree(X, y, w, n_classes, min_leaf, max_depth, rng=None, max_features=None):
    """Recursive CART builder; returns the root :class:`_Node`.

    When ``rng`` is given, each node considers a fresh sample of
    ``max_features`` feature indices (drawn without replacement, in
    depth-first order), which is what a random forest needs.
    """
    d = X.shape[1]

    def build(idx, depth):
        ys = y[idx]
        ws = w[idx]
        class_w = _class_weights(ys, ws, n_classes)
        total = class_w.sum()
        proba = class_w / total if total > 0 else np.full(n_classes, 1.0 / n_classes)
        node = _Node(proba=proba)

        if (
            len(idx) < 2 * min_leaf
            or (max_depth is not None and depth >= max_depth)
            or np.count_nonzero(class_w) <= 1
        ):
            return node

        if rng is not None and max_features is not None and max_features < d:
            features = np.sort(rng.choice(d, size=max_features, replace=False))
        else:
            features = np.arange(d)

        found = _best_split(X[idx], ys, ws, n_classes, min_leaf, features)
        if found is None:
            return node
        _, feature, threshold = found

        # A zero-gain split is still taken on an impure node: structure like
        # parity needs a neutral first cut before any gain shows up, and the
        # pure-node check above already stops pointless recursion.
        mask = X[idx, feature] <= threshold
        node.feature = feature
        node.threshold = threshold
        node.left = build(idx[mask], depth + 1)
        node.right = build(idx[~mask], depth + 1)
        return node

    return build(np.arange(len(y)), 0)


def tree_predict_proba(root, X):
    # Deserialized trees carry probabilities only on their leaves, so take
    # the output width from one rather than from the root.
    first = root
    while not first.is_leaf:
        first = first.left
    out = np.empty((len(X), len(first.proba)))
    for i, row in enumerate(X):
        node = root
        while not node.is_leaf:
            node = node.left if row[node.feature] <= node.threshold else node.right
        out[i] = node.proba
    return out


def node_to_dict(node):
    if node.is_leaf:
        return {"p": [float(v) for v in node.proba]}
    return {
        "f": node.feature,
        "t": node.threshold,
        "l": node_to_dict(node.left),
        "r": node_to_dict(node.right),
    }


def node_from_dict(d):
    if "p" in d:
        return _Node(proba=np.asarray(d["p"], dtype=float))
    return _Node(
        feature=int(d["f"]),
        threshold=float(d["t"]),
        left=node_from_dict(d["l"]),
        right=node_from_dict(d["r"]),
    )


class DecisionTreeClassifier(BaseEstimator):
    """CART/Gini tree. ``seed`` is accepted for interface uniformity but
    training is fully deterministic."""

    def __init__(self, max_depth=None, min_samples_leaf=20, seed=0):
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.seed = seed

    def fit(self, X, y, sample_weight=None, n_classes=None):
        X, y, n_classes = check_X_y(X, y, n_classes)
        if sample_weight is None:
            sample_weight = np.ones(len(y))
        else:
            sample_weight = np.asarray(sample_weight, dtype=float)
        self.n_features_ = X.shape[1]
        self.n_classes_ = n_classes
        self.root_ = grow_tree(
            X,
            y,
            sample_weight,
            n_classes,
            self.min_samples_leaf,
            self.max_depth,
        )
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "root_")
        X = check_array(X)
        check_n_features(self, X)
        return tree_predict_proba(self.root_, X)

    def predict(self, X):
        return np.argmax(self.predict_proba(X), axis=1)

    def to_dict(self):
        check_is_fitted(self, "root_")
        return {
            "params": self.get_params(),
            "n_features": self.n_features_,
            "n_classes": self.n_classes_,
            "tree": node_to_dict(self.root_),
        }

    @classmethod
    def from_dict(cls, d):
        model = cls(**d["params"])
        model.n_features_ = int(d["n_features"])
        model.n_classes_ = int(d["n_classes"])
        model.root_ = node_from_dict(d["tree"])
        return model
