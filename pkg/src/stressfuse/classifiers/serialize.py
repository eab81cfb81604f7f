"""Versioned JSON round-trip for trained classifier models.

Floats are written with full ``repr`` precision, so a load after a save
reproduces bit-identical parameters.
"""

import json

from ..errors import ValidationError

FORMAT_NAME = "stressfuse-model"
FORMAT_VERSION = 1


def _registry():
    from .boost import AdaBoostClassifier
    from .discriminant import LinearDiscriminantAnalysis
    from .forest import RandomForestClassifier
    from .neighbors import KNeighborsClassifier
    from .tree import DecisionTreeClassifier

    return {
        "DT": DecisionTreeClassifier,
        "RF": RandomForestClassifier,
        "AB": AdaBoostClassifier,
        "LDA": LinearDiscriminantAnalysis,
        "KNN": KNeighborsClassifier,
    }


def kind_of(model):
    for kind, cls in _registry().items():
        if type(model) is cls:
            return kind
    raise ValidationError(f"unknown model type {type(model).__name__}")


def model_to_dict(model):
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "kind": kind_of(model),
        "payload": model.to_dict(),
    }


def model_from_dict(doc):
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
        raise ValidationError("not a model document")
    if doc.get("version") != FORMAT_VERSION:
        raise ValidationError(f"unsupported model version {doc.get('version')!r}")
    registry = _registry()
    kind = doc.get("kind")
    if kind not in registry:
        raise ValidationError(f"unknown model kind {kind!r}")
    return registry[kind].from_dict(doc["payload"])


def save_model(path, model):
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh)
        fh.write("\n")


def load_model(path):
    with open(path) as fh:
        return model_from_dict(json.load(fh))
