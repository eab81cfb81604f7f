"""Estimator base class and input validation helpers.

The classifiers and the gating model follow the familiar estimator
protocol: hyperparameters in ``__init__``, ``fit`` returns ``self``,
``get_params``/``set_params`` round-trip the constructor arguments.
"""

import inspect

import numpy as np

from .errors import DegenerateTrainingError, ValidationError


class BaseEstimator:
    """Minimal estimator base: introspective get_params / set_params."""

    @classmethod
    def _param_names(cls):
        sig = inspect.signature(cls.__init__)
        return [
            name
            for name, p in sig.parameters.items()
            if name != "self" and p.kind != inspect.Parameter.VAR_KEYWORD
        ]

    def get_params(self, deep=True):
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params):
        valid = set(self._param_names())
        for key, value in params.items():
            if key not in valid:
                raise ValidationError(
                    f"invalid parameter {key!r} for {type(self).__name__}"
                )
            setattr(self, key, value)
        return self

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({args})"


def check_array(X, name="X", ndim=2, dtype=float):
    """Coerce to a float ndarray and reject NaN/inf values."""
    X = np.asarray(X, dtype=dtype)
    if X.ndim == 1 and ndim == 2:
        X = X.reshape(1, -1)
    if X.ndim != ndim:
        raise ValidationError(f"{name} must be {ndim}-dimensional, got {X.ndim}")
    if X.size == 0:
        raise ValidationError(f"{name} is empty")
    if not np.all(np.isfinite(X)):
        raise ValidationError(f"{name} contains NaN or infinite values")
    return X


def check_X_y(X, y, n_classes=None, allow_single_class=False):
    """Validate a training matrix and integer label vector together.

    Returns ``(X, y, n_classes)`` with ``n_classes`` inferred from the
    labels when not given. At least two distinct classes are required
    unless ``allow_single_class`` is set (loss evaluation on a slice of
    data is fine with one class; fitting on one is not).
    """
    X = check_array(X)
    y = np.asarray(y)
    if y.ndim != 1:
        raise ValidationError(f"y must be 1-dimensional, got {y.ndim}")
    if len(y) != X.shape[0]:
        raise ValidationError(
            f"X and y disagree on sample count: {X.shape[0]} vs {len(y)}"
        )
    if not np.issubdtype(y.dtype, np.integer):
        yf = np.asarray(y, dtype=float)
        if not np.all(np.isfinite(yf)) or not np.all(yf == np.round(yf)):
            raise ValidationError("y must contain integer class ids")
        y = yf.astype(np.int64)
    else:
        y = y.astype(np.int64)
    if y.min() < 0:
        raise ValidationError("y contains negative class ids")
    inferred = int(y.max()) + 1
    if n_classes is None:
        n_classes = inferred
    elif inferred > n_classes:
        raise ValidationError(
            f"y contains class id {inferred - 1} but n_classes={n_classes}"
        )
    if not allow_single_class and len(np.unique(y)) < 2:
        raise DegenerateTrainingError("training labels contain a single class")
    return X, y, int(n_classes)


def check_is_fitted(estimator, attribute):
    if getattr(estimator, attribute, None) is None:
        raise ValidationError(
            f"{type(estimator).__name__} is not fitted; call fit() first"
        )


def check_n_features(estimator, X):
    """Reject prediction input whose width differs from the fit-time width."""
    if X.shape[1] != estimator.n_features_:
        raise ValidationError(
            f"feature count mismatch: model expects {estimator.n_features_}, "
            f"got {X.shape[1]}"
        )
