"""Linear discriminant analysis with a trace-scaled ridge."""

import numpy as np

from ..base import (
    BaseEstimator,
    check_is_fitted,
    check_n_features,
    check_X_y,
    check_array,
)
from ..errors import DegenerateTrainingError


class LinearDiscriminantAnalysis(BaseEstimator):
    """Pooled-covariance LDA; probabilities via softmax over the linear
    discriminant scores. ``seed`` is inert (closed-form fit)."""

    def __init__(self, ridge=1e-6, seed=0):
        self.ridge = ridge
        self.seed = seed

    def fit(self, X, y, n_classes=None):
        X, y, n_classes = check_X_y(X, y, n_classes)
        n, d = X.shape
        if n <= n_classes:
            raise DegenerateTrainingError(
                f"need more than {n_classes} rows to pool covariance, got {n}"
            )
        self.n_features_ = d
        self.n_classes_ = n_classes

        means = np.zeros((n_classes, d))
        counts = np.bincount(y, minlength=n_classes).astype(float)
        scatter = np.zeros((d, d))
        for k in range(n_classes):
            rows = X[y == k]
            if len(rows) == 0:
                continue
            means[k] = rows.mean(axis=0)
            centered = rows - means[k]
            scatter += centered.T @ centered
        cov = scatter / (n - n_classes)
        cov = cov + self.ridge * np.trace(cov) * np.eye(d)

        try:
            coef = np.linalg.solve(cov, means.T)  # (d, K)
        except np.linalg.LinAlgError:
            raise DegenerateTrainingError(
                "pooled covariance singular even after ridge"
            ) from None

        priors = counts / n
        with np.errstate(divide="ignore"):
            log_priors = np.where(priors > 0, np.log(np.maximum(priors, 1e-300)), -np.inf)
        self.coef_ = coef
        self.intercept_ = -0.5 * np.sum(means * coef.T, axis=1) + log_priors
        self.means_ = means
        self.priors_ = priors
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        check_n_features(self, X)
        return X @ self.coef_ + self.intercept_

    def predict_proba(self, X):
        scores = self.decision_function(X)
        scores = scores - scores.max(axis=1, keepdims=True)
        e = np.exp(scores)
        return e / e.sum(axis=1, keepdims=True)

    def predict(self, X):
        return np.argmax(self.predict_proba(X), axis=1)

    def to_dict(self):
        check_is_fitted(self, "coef_")
        return {
            "params": self.get_params(),
            "n_features": self.n_features_,
            "n_classes": self.n_classes_,
            "coef": self.coef_.tolist(),
            "intercept": self.intercept_.tolist(),
            "means": self.means_.tolist(),
            "priors": self.priors_.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        model = cls(**d["params"])
        model.n_features_ = int(d["n_features"])
        model.n_classes_ = int(d["n_classes"])
        model.coef_ = np.asarray(d["coef"], dtype=float)
        model.intercept_ = np.asarray(d["intercept"], dtype=float)
        model.means_ = np.asarray(d["means"], dtype=float)
        model.priors_ = np.asarray(d["priors"], dtype=float)
        return model
