"""Relative energy accounting for gated inference.

Costs are dimensionless weights, not joules: what matters downstream
are ratios between pipeline variants. The default profile encodes two
assumptions — feature extraction dominates classifier inference, and
BVP is the most expensive modality to extract (peak detection).

ACC extraction is folded into the gate cost, because the gate always
runs and always needs ACC features; selected branches that use ACC are
therefore not charged for it again (matching the feature cache, which
extracts each modality at most once per window).
"""

from dataclasses import dataclass, field

import numpy as np

from .datamodel import MODALITIES
from .errors import ConfigurationError, ValidationError

DEFAULT_EXTRACTION_COSTS = {"ACC": 1.0, "BVP": 3.0, "EDA": 1.0, "TEMP": 0.5}
DEFAULT_CLASSIFIER_COSTS = {"DT": 0.1, "RF": 1.0, "AB": 1.0, "LDA": 0.1, "KNN": 2.0}
#: ACC extraction (1.0) + gate DT inference (0.1).
DEFAULT_GATE_COST = 1.1


@dataclass(frozen=True)
class CostModel:
    """Dimensionless per-component costs.

    ``overrides`` optionally re-prices a classifier on a specific
    branch, keyed ``(branch_id, kind)``.
    """

    extraction: dict = field(default_factory=lambda: dict(DEFAULT_EXTRACTION_COSTS))
    classifier: dict = field(default_factory=lambda: dict(DEFAULT_CLASSIFIER_COSTS))
    gate_cost: float = DEFAULT_GATE_COST
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, table in (("extraction", self.extraction), ("classifier", self.classifier)):
            for key, value in table.items():
                if not np.isfinite(value) or value < 0:
                    raise ConfigurationError(f"{name} cost for {key!r} must be >= 0")
        missing = set(MODALITIES) - set(self.extraction)
        if missing:
            raise ConfigurationError(f"extraction costs missing for {sorted(missing)}")
        if not np.isfinite(self.gate_cost) or self.gate_cost < 0:
            raise ConfigurationError("gate cost must be >= 0")
        for value in self.overrides.values():
            if not np.isfinite(value) or value < 0:
                raise ConfigurationError("override costs must be >= 0")

    def extraction_cost(self, modality):
        try:
            return float(self.extraction[modality])
        except KeyError:
            raise ConfigurationError(f"no extraction cost for {modality!r}") from None

    def classifier_cost(self, branch_id, kind):
        if (branch_id, kind) in self.overrides:
            return float(self.overrides[(branch_id, kind)])
        try:
            return float(self.classifier[kind])
        except KeyError:
            raise ConfigurationError(
                f"no classifier cost for {kind!r} (branch {branch_id})"
            ) from None


DEFAULT_COST_MODEL = CostModel()


def branch_cost(spec, model):
    """Marginal cost of running one branch once the gate has run:
    extraction of its modalities (ACC already paid by the gate) plus
    its classifier."""
    cost = model.classifier_cost(spec.id, spec.kind)
    for modality in spec.modalities:
        if modality != "ACC":
            cost += model.extraction_cost(modality)
    return cost


def window_cost(decision, model):
    """Cost of one gated window: gate, extraction of the union of the
    selected branches' modalities (each charged once, ACC folded into
    the gate), and every selected branch's classifier."""
    specs = decision.selected_specs
    if not specs:
        raise ValidationError("a gate decision must select at least one branch")
    cost = float(model.gate_cost)
    union = set()
    for spec in specs:
        union.update(spec.modalities)
        cost += model.classifier_cost(spec.id, spec.kind)
    for modality in union - {"ACC"}:
        cost += model.extraction_cost(modality)
    return cost


def ungated_window_cost(specs, model):
    """Cost of one window in a traditional always-on pipeline: no gate,
    so ACC (if any branch needs it) is charged as plain extraction, and
    every branch always runs."""
    if not specs:
        raise ValidationError("need at least one branch")
    cost = 0.0
    union = set()
    for spec in specs:
        union.update(spec.modalities)
        cost += model.classifier_cost(spec.id, spec.kind)
    for modality in union:
        cost += model.extraction_cost(modality)
    return cost


@dataclass(frozen=True, eq=False)
class EnergyReport:
    """Accumulated cost over one evaluated window set."""

    total: float
    window_keys: tuple  # (subject_id, window_index) per window, in order
    branch_counts: dict  # branch id → invocation count
    baseline_ratio: float = None

    @property
    def n_windows(self):
        return len(self.window_keys)

    @property
    def mean_per_window(self):
        return self.total / self.n_windows if self.n_windows else 0.0

    def with_ratio(self, ratio):
        return EnergyReport(
            total=self.total,
            window_keys=self.window_keys,
            branch_counts=self.branch_counts,
            baseline_ratio=ratio,
        )


def report_from_decisions(decisions, model, window_keys):
    """Sum gated window costs into an :class:`EnergyReport`."""
    if len(decisions) != len(window_keys):
        raise ValidationError("decisions and window keys differ in length")
    total = 0.0
    counts = {}
    for decision in decisions:
        total += window_cost(decision, model)
        for spec in decision.selected_specs:
            counts[spec.id] = counts.get(spec.id, 0) + 1
    return EnergyReport(
        total=total, window_keys=tuple(window_keys), branch_counts=counts
    )


def baseline_report(specs, model, window_keys):
    """The traditional-late-fusion comparator: every branch on every
    window, no gate."""
    per_window = ungated_window_cost(specs, model)
    counts = {spec.id: len(window_keys) for spec in specs}
    return EnergyReport(
        total=per_window * len(window_keys),
        window_keys=tuple(window_keys),
        branch_counts=counts,
    )


def compare(candidate, baseline):
    """Efficiency ratio baseline/candidate over the identical window
    set; 2.0 means the candidate uses half the energy."""
    if candidate.window_keys != baseline.window_keys:
        raise ValidationError("energy reports cover different window sets")
    if candidate.total <= 0:
        raise ValidationError("candidate report has non-positive total cost")
    return baseline.total / candidate.total
