"""k-nearest-neighbour classifier (Euclidean, uniform vote)."""

import numpy as np

from ..base import (
    BaseEstimator,
    check_is_fitted,
    check_n_features,
    check_X_y,
    check_array,
)
from ..errors import ConfigurationError
from .forest import canonical_order

_CHUNK = 256


class KNeighborsClassifier(BaseEstimator):
    """Probability = neighbour class frequency among the k nearest.

    Stored rows are kept in canonical order so distance ties resolve
    identically no matter how the caller ordered the training data.
    ``seed`` is inert.
    """

    def __init__(self, k=9, seed=0):
        self.k = k
        self.seed = seed

    def fit(self, X, y, n_classes=None):
        if self.k < 1:
            raise ConfigurationError("k must be >= 1")
        X, y, n_classes = check_X_y(X, y, n_classes)
        order = canonical_order(X, y)
        self.X_ = X[order]
        self.y_ = y[order]
        self.n_features_ = X.shape[1]
        self.n_classes_ = n_classes
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "X_")
        X = check_array(X)
        check_n_features(self, X)
        k = min(self.k, len(self.y_))
        out = np.zeros((len(X), self.n_classes_))
        train_sq = np.sum(self.X_**2, axis=1)
        for start in range(0, len(X), _CHUNK):
            chunk = X[start : start + _CHUNK]
            d2 = (
                np.sum(chunk**2, axis=1)[:, None]
                - 2.0 * chunk @ self.X_.T
                + train_sq[None, :]
            )
            nearest = np.argsort(d2, axis=1, kind="stable")[:, :k]
            for i, row in enumerate(nearest):
                counts = np.bincount(self.y_[row], minlength=self.n_classes_)
                out[start + i] = counts / k
        return out

    def predict(self, X):
        return np.argmax(self.predict_proba(X), axis=1)

    def to_dict(self):
        check_is_fitted(self, "X_")
        return {
            "params": self.get_params(),
            "n_features": self.n_features_,
            "n_classes": self.n_classes_,
            "X": self.X_.tolist(),
            "y": self.y_.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        model = cls(**d["params"])
        model.n_features_ = int(d["n_features"])
        model.n_classes_ = int(d["n_classes"])
        model.X_ = np.asarray(d["X"], dtype=float)
        model.y_ = np.asarray(d["y"], dtype=int)
        return model
