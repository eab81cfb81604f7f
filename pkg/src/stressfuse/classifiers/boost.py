"""AdaBoost (multi-class SAMME) over depth-1 decision stumps."""

import numpy as np

from ..base import (
    BaseEstimator,
    check_is_fitted,
    check_n_features,
    check_X_y,
    check_array,
)
from ..errors import ConfigurationError, DegenerateTrainingError
from .tree import (
    DecisionTreeClassifier,
    node_from_dict,
    node_to_dict,
    tree_predict_proba,
)

_ERR_FLOOR = 1e-10


class AdaBoostClassifier(BaseEstimator):
    def __init__(self, n_estimators=100, seed=0):
        self.n_estimators = n_estimators
        self.seed = seed

    def fit(self, X, y, n_classes=None):
        if self.n_estimators < 1:
            raise ConfigurationError("n_estimators must be >= 1")
        X, y, n_classes = check_X_y(X, y, n_classes)
        self.n_features_ = X.shape[1]
        self.n_classes_ = n_classes

        n = len(y)
        k = n_classes
        w = np.full(n, 1.0 / n)
        self.stumps_ = []
        self.alphas_ = []

        for _ in range(self.n_estimators):
            stump = DecisionTreeClassifier(max_depth=1, min_samples_leaf=1)
            stump.fit(X, y, sample_weight=w, n_classes=k)
            pred = stump.predict(X)
            miss = pred != y
            err = float(w[miss].sum() / w.sum())

            if err >= 1.0 - 1.0 / k - 1e-12:
                # stump no better than chance: unusable as a weak learner
                if not self.stumps_:
                    raise DegenerateTrainingError(
                        f"base stump error {err:.4f} not better than chance"
                    )
                break

            alpha = float(np.log((1.0 - max(err, _ERR_FLOOR)) / max(err, _ERR_FLOOR)))
            alpha += float(np.log(k - 1.0))
            self.stumps_.append(stump.root_)
            self.alphas_.append(alpha)

            if err <= 1e-12:
                break
            w = w * np.exp(alpha * miss)
            w = w / w.sum()

        return self

    def predict_proba(self, X):
        """Alpha-weighted stump vote fractions."""
        check_is_fitted(self, "stumps_")
        X = check_array(X)
        check_n_features(self, X)
        scores = np.zeros((len(X), self.n_classes_))
        rows = np.arange(len(X))
        for root, alpha in zip(self.stumps_, self.alphas_):
            pred = np.argmax(tree_predict_proba(root, X), axis=1)
            scores[rows, pred] += alpha
        return scores / scores.sum(axis=1, keepdims=True)

    def predict(self, X):
        return np.argmax(self.predict_proba(X), axis=1)

    def to_dict(self):
        check_is_fitted(self, "stumps_")
        return {
            "params": self.get_params(),
            "n_features": self.n_features_,
            "n_classes": self.n_classes_,
            "stumps": [node_to_dict(root) for root in self.stumps_],
            "alphas": [float(a) for a in self.alphas_],
        }

    @classmethod
    def from_dict(cls, d):
        model = cls(**d["params"])
        model.n_features_ = int(d["n_features"])
        model.n_classes_ = int(d["n_classes"])
        model.stumps_ = [node_from_dict(s) for s in d["stumps"]]
        model.alphas_ = [float(a) for a in d["alphas"]]
        return model
