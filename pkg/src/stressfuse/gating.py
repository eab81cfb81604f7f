"""Context-aware gating: branch selection, gate labels, gate training,
and the δ trade-off.

The gate is a decision tree over ACC features only — motion context is
available before any other modality is extracted, so the gate's output
can veto the expensive extractions entirely.
"""

from dataclasses import dataclass

import numpy as np

from .base import BaseEstimator, check_array, check_is_fitted
from .classifiers import CLASSIFIER_KINDS, make_classifier, training_loss
from .energy import branch_cost
from .errors import (
    ConfigurationError,
    DegenerateTrainingError,
    ValidationError,
)

#: The five early-fusion sensor combinations.
BRANCH_MODALITIES = {
    "B1": ("BVP", "EDA", "TEMP"),
    "B2": ("ACC", "BVP", "EDA"),
    "B3": ("BVP", "EDA"),
    "B4": ("ACC", "BVP"),
    "B5": ("ACC", "EDA"),
}

BRANCH_IDS = ("B1", "B2", "B3", "B4", "B5")


@dataclass(frozen=True)
class BranchSpec:
    """A branch id paired with the classifier kind that runs on it."""

    id: str
    kind: str

    def __post_init__(self):
        if self.id not in BRANCH_MODALITIES:
            raise ConfigurationError(f"unknown branch id {self.id!r}")
        if self.kind not in CLASSIFIER_KINDS:
            raise ConfigurationError(f"unknown classifier kind {self.kind!r}")

    @property
    def modalities(self):
        return BRANCH_MODALITIES[self.id]


def select_subset(probs, delta):
    """Indices selected by the δ band: the argmax branch always, plus
    every branch with probability strictly greater than max − δ. δ = 1
    selects everything."""
    probs = np.asarray(probs, dtype=float)
    if not 0.0 <= delta <= 1.0:
        raise ValidationError(f"delta {delta} outside [0, 1]")
    if delta >= 1.0:
        return tuple(range(len(probs)))
    top = int(np.argmax(probs))
    band = probs > probs[top] - delta
    band[top] = True
    return tuple(int(i) for i in np.flatnonzero(band))


@dataclass(frozen=True, eq=False)
class GateDecision:
    """Gate output for one window: branch probabilities, the selected
    subset of candidate branches, and the δ used."""

    probs: np.ndarray
    selected: tuple
    delta: float
    specs: tuple

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "selected", tuple(int(i) for i in self.selected))
        object.__setattr__(self, "specs", tuple(self.specs))
        if len(probs) != len(self.specs):
            raise ValidationError("probabilities and specs differ in length")
        if self.selected != select_subset(probs, self.delta):
            raise ValidationError("selected set inconsistent with the δ rule")

    @property
    def selected_specs(self):
        return tuple(self.specs[i] for i in self.selected)


def decide(probs, delta, specs):
    return GateDecision(
        probs=probs, selected=select_subset(probs, delta), delta=delta, specs=specs
    )


def select_branches(branch_features, y, k=3, seed=0, kinds=CLASSIFIER_KINDS):
    """Train every (branch, kind) combination and keep the best.

    ``branch_features`` maps branch id → training feature matrix for
    that branch's modalities (same row order as ``y``). Each branch
    keeps its minimum-training-loss kind, then the k branches with the
    lowest losses win. Returns (specs, models, losses) with specs in
    branch-id order; ``losses`` maps every surviving (branch, kind)
    pair for inspection.

    Combinations whose training fails are excluded; fewer than k
    surviving branches is an error.
    """
    if k < 1:
        raise ConfigurationError("k must be >= 1")
    losses = {}
    best_per_branch = {}
    models = {}
    for branch_id in BRANCH_IDS:
        if branch_id not in branch_features:
            continue
        X = branch_features[branch_id]
        for kind in kinds:
            try:
                model = make_classifier(kind, seed=seed)
                model.fit(X, y)
                loss = training_loss(model, X, y)
            except (DegenerateTrainingError, ValidationError):
                continue
            losses[(branch_id, kind)] = loss
            current = best_per_branch.get(branch_id)
            if current is None or loss < current[0]:
                best_per_branch[branch_id] = (loss, kind)
                models[branch_id] = model

    if len(best_per_branch) < k:
        raise DegenerateTrainingError(
            f"only {len(best_per_branch)} branches trainable, need {k}"
        )
    ranked = sorted(
        best_per_branch.items(), key=lambda item: (item[1][0], item[0])
    )
    winners = sorted(branch_id for branch_id, _ in ranked[:k])
    specs = tuple(
        BranchSpec(id=b, kind=best_per_branch[b][1]) for b in winners
    )
    selected_models = [models[b] for b in winners]
    return specs, selected_models, losses


def make_gate_labels(branch_probs, y, specs, cost_model):
    """Gate label per training window: among branches that classify it
    correctly, the cheapest one; if none is correct, the branch most
    confident in the true class. All ties go to the lowest branch
    index.

    ``branch_probs`` is a list of (n, c) probability matrices aligned
    with ``specs``.
    """
    if len(branch_probs) != len(specs):
        raise ValidationError("branch probabilities and specs differ in length")
    y = np.asarray(y, dtype=int)
    n = len(y)
    costs = np.array([branch_cost(spec, cost_model) for spec in specs])
    correct = np.stack(
        [np.argmax(p, axis=1) == y for p in branch_probs], axis=1
    )  # (n, k)
    true_conf = np.stack(
        [p[np.arange(n), y] for p in branch_probs], axis=1
    )  # (n, k)

    labels = np.empty(n, dtype=int)
    for i in range(n):
        hits = np.flatnonzero(correct[i])
        if len(hits):
            labels[i] = int(hits[np.argmin(costs[hits])])
        else:
            labels[i] = int(np.argmax(true_conf[i]))
    return labels


class ConstantGate(BaseEstimator):
    """Degenerate gate for folds where every training window gets the
    same gate label: predicts that branch with probability one."""

    def __init__(self, branch_index=0, n_branches=1, n_features=12):
        self.branch_index = branch_index
        self.n_branches = n_branches
        self.n_features = n_features
        self.n_features_ = n_features
        self.n_classes_ = n_branches

    def predict_proba(self, X):
        X = check_array(X)
        out = np.zeros((len(X), self.n_branches))
        out[:, self.branch_index] = 1.0
        return out

    def predict(self, X):
        return np.argmax(self.predict_proba(X), axis=1)

    def to_dict(self):
        return {"params": self.get_params()}

    @classmethod
    def from_dict(cls, d):
        return cls(**d["params"])


def train_gate(X_acc, gate_labels, n_branches, seed=0, min_samples_leaf=20):
    """Fit the DT gate on ACC features. A single-label fold yields a
    :class:`ConstantGate` rather than a degenerate tree."""
    X_acc = check_array(X_acc, name="X_acc")
    gate_labels = np.asarray(gate_labels, dtype=int)
    distinct = np.unique(gate_labels)
    if len(distinct) == 1:
        return ConstantGate(
            branch_index=int(distinct[0]),
            n_branches=n_branches,
            n_features=X_acc.shape[1],
        )
    gate = make_classifier("DT", seed=seed, min_samples_leaf=min_samples_leaf)
    gate.fit(X_acc, gate_labels, n_classes=n_branches)
    return gate


def gate(x_acc, gate_model, delta, specs):
    """Gate one window from its ACC feature vector."""
    x_acc = np.asarray(x_acc, dtype=float).reshape(1, -1)
    probs = gate_model.predict_proba(x_acc)[0]
    return decide(probs, delta, specs)


DEFAULT_DELTA = {3: 0.4, 2: 0.1}


def default_delta(n_classes):
    try:
        return DEFAULT_DELTA[n_classes]
    except KeyError:
        raise ConfigurationError(f"no default delta for {n_classes} classes") from None
