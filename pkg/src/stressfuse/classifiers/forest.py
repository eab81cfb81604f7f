"""Random forest over the CART tree, with order-independent resampling.

Training rows are first put into a canonical order (lexicographic by
feature values, then label) and then shuffled with a seed-derived
permutation; bootstrap sampling draws *positions* in that shuffled
array. The fitted forest is therefore a function of the training *set*
and seed, not of the row order the caller happened to use.
"""

import numpy as np

from ..base import (
    BaseEstimator,
    check_is_fitted,
    check_n_features,
    check_X_y,
    check_array,
)
from ..errors import ConfigurationError
from .tree import grow_tree, node_from_dict, node_to_dict, tree_predict_proba


def canonical_order(X, y):
    """Indices sorting rows by feature values then label."""
    keys = [np.asarray(y, dtype=float)]
    keys.extend(X[:, j] for j in range(X.shape[1] - 1, -1, -1))
    return np.lexsort(np.vstack(keys))


class RandomForestClassifier(BaseEstimator):
    def __init__(
        self,
        n_estimators=100,
        min_samples_leaf=20,
        max_depth=None,
        max_features="sqrt",
        seed=0,
    ):
        self.n_estimators = n_estimators
        self.min_samples_leaf = min_samples_leaf
        self.max_depth = max_depth
        self.max_features = max_features
        self.seed = seed

    def _spawn(self):
        # child 0 drives the canonical shuffle; child i+1 drives tree i
        return np.random.SeedSequence(self.seed).spawn(self.n_estimators + 1)

    def _resolve_max_features(self, d):
        if self.max_features is None:
            return d
        if self.max_features == "sqrt":
            return max(1, int(np.sqrt(d)))
        k = int(self.max_features)
        if k < 1:
            raise ConfigurationError(f"max_features {self.max_features!r} invalid")
        return min(k, d)

    def canonical_training_set(self, X, y):
        """The (X, y) actually used for bootstrap draws: canonical order
        plus the seed-derived shuffle."""
        X, y, _ = check_X_y(X, y, getattr(self, "n_classes_", None))
        order = canonical_order(X, y)
        Xc, yc = X[order], y[order]
        shuffle_rng = np.random.default_rng(self._spawn()[0])
        perm = shuffle_rng.permutation(len(yc))
        return Xc[perm], yc[perm]

    def bootstrap_indices(self, n, tree_index):
        """Positions (into the canonical training set) resampled for one
        tree; the first draw from that tree's generator."""
        rng = np.random.default_rng(self._spawn()[tree_index + 1])
        return rng.integers(0, n, size=n)

    def fit(self, X, y, n_classes=None):
        if self.n_estimators < 1:
            raise ConfigurationError("n_estimators must be >= 1")
        X, y, n_classes = check_X_y(X, y, n_classes)
        self.n_features_ = X.shape[1]
        self.n_classes_ = n_classes

        Xc, yc = self.canonical_training_set(X, y)
        n = len(yc)
        seeds = self._spawn()
        max_features = self._resolve_max_features(self.n_features_)
        weights = np.ones(n)

        self.trees_ = []
        for i in range(self.n_estimators):
            rng = np.random.default_rng(seeds[i + 1])
            idx = rng.integers(0, n, size=n)
            root = grow_tree(
                Xc[idx],
                yc[idx],
                weights,
                n_classes,
                self.min_samples_leaf,
                self.max_depth,
                rng=rng,
                max_features=max_features,
            )
            self.trees_.append(root)
        return self

    def predict_proba(self, X):
        """Fraction of trees voting each class (73 of 100 trees voting
        class 0 gives p0 = 0.73)."""
        check_is_fitted(self, "trees_")
        X = check_array(X)
        check_n_features(self, X)
        votes = np.zeros((len(X), self.n_classes_))
        rows = np.arange(len(X))
        for root in self.trees_:
            pred = np.argmax(tree_predict_proba(root, X), axis=1)
            votes[rows, pred] += 1.0
        return votes / self.n_estimators

    def predict(self, X):
        return np.argmax(self.predict_proba(X), axis=1)

    def to_dict(self):
        check_is_fitted(self, "trees_")
        return {
            "params": self.get_params(),
            "n_features": self.n_features_,
            "n_classes": self.n_classes_,
            "trees": [node_to_dict(root) for root in self.trees_],
        }

    @classmethod
    def from_dict(cls, d):
        model = cls(**d["params"])
        model.n_features_ = int(d["n_features"])
        model.n_classes_ = int(d["n_classes"])
        model.trees_ = [node_from_dict(t) for t in d["trees"]]
        return model
