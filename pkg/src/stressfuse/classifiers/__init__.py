"""The five branch/gate classifier families, implemented from scratch.

All estimators share the same surface: ``fit(X, y, n_classes=None)``,
``predict_proba(X)``, ``predict(X)``, ``get_params``/``set_params``,
and ``to_dict``/``from_dict`` for serialization. Class ids are dense
integers ``0..n_classes-1`` throughout.
"""

import numpy as np

from ..base import check_X_y
from ..errors import ConfigurationError
from .boost import AdaBoostClassifier
from .discriminant import LinearDiscriminantAnalysis
from .forest import RandomForestClassifier, canonical_order
from .neighbors import KNeighborsClassifier
from .serialize import (
    kind_of,
    load_model,
    model_from_dict,
    model_to_dict,
    save_model,
)
from .tree import DecisionTreeClassifier

CLASSIFIER_KINDS = ("DT", "RF", "AB", "LDA", "KNN")

_CLASSES = {
    "DT": DecisionTreeClassifier,
    "RF": RandomForestClassifier,
    "AB": AdaBoostClassifier,
    "LDA": LinearDiscriminantAnalysis,
    "KNN": KNeighborsClassifier,
}


def make_classifier(kind, seed=0, **overrides):
    """Instantiate an unfitted classifier of the given kind."""
    if kind not in _CLASSES:
        raise ConfigurationError(
            f"unknown classifier kind {kind!r}; expected one of {CLASSIFIER_KINDS}"
        )
    return _CLASSES[kind](seed=seed, **overrides)


def train(kind, X, y, seed=0, n_classes=None, **overrides):
    """Fit a fresh classifier; deterministic given ``seed``."""
    model = make_classifier(kind, seed=seed, **overrides)
    model.fit(X, y, n_classes=n_classes)
    return model


def training_loss(model, X, y):
    """Mean cross-entropy of the model on ``(X, y)``, probabilities
    clamped to [1e-12, 1]. A uniform predictor scores ln(n_classes)."""
    X, y, _ = check_X_y(X, y, model.n_classes_, allow_single_class=True)
    probs = model.predict_proba(X)
    p = np.clip(probs[np.arange(len(y)), y], 1e-12, 1.0)
    return float(-np.mean(np.log(p)))


__all__ = [
    "CLASSIFIER_KINDS",
    "AdaBoostClassifier",
    "DecisionTreeClassifier",
    "KNeighborsClassifier",
    "LinearDiscriminantAnalysis",
    "RandomForestClassifier",
    "canonical_order",
    "kind_of",
    "load_model",
    "make_classifier",
    "model_from_dict",
    "model_to_dict",
    "save_model",
    "train",
    "training_loss",
]
