"""Leave-one-subject-out harness, metrics, and pipeline orchestration.

The pipeline per fold: segment → train all 25 branch/classifier
combinations on the training subjects → keep the best k branches →
derive gate labels → train the ACC gate → per test window, gate,
run the selected branches, and late-fuse.

Feature extraction is a pure per-window function, so the feature table
is built once for all windows up front; folds then address rows of it.
Training calls only ever receive training-subject rows — an optional
``audit`` callback observes every training call's window list so tests
can prove that.
"""

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .classifiers import CLASSIFIER_KINDS, model_from_dict, model_to_dict
from .datamodel import class_names, label3, to_binary_label
from .energy import (
    DEFAULT_COST_MODEL,
    baseline_report,
    compare,
    report_from_decisions,
    window_cost,
)
from .errors import (
    ConfigurationError,
    FeatureExtractionError,
    ValidationError,
)
from .features import FeatureCache
from .fusion import (
    BranchPrediction,
    default_kalman_config,
    fuse_hard,
    fuse_soft,
    run_kalman_sequence,
)
from .gating import (
    BRANCH_IDS,
    BRANCH_MODALITIES,
    BranchSpec,
    ConstantGate,
    decide,
    default_delta,
    make_gate_labels,
    select_branches,
    train_gate,
)
from .preprocess import DEFAULT_FILTERS, SLIDE_S, WINDOW_S, segment_records

FUSION_KINDS = ("kalman", "soft", "hard", "single")

_BINARY_OF_3CLASS = np.array([to_binary_label(label3(i)).id for i in range(3)])


def loso_split(records):
    """One (train records, test record) fold per subject."""
    if len(records) < 2:
        raise ValidationError("LOSO needs at least 2 subjects")
    ids = [r.subject_id for r in records]
    if len(set(ids)) != len(ids):
        raise ValidationError(f"duplicate subject ids in {ids}")
    folds = []
    for i, test in enumerate(records):
        folds.append(([r for j, r in enumerate(records) if j != i], test))
    return folds


def confusion_matrix(truth, preds, class_count):
    truth = np.asarray(truth, dtype=int)
    preds = np.asarray(preds, dtype=int)
    if truth.shape != preds.shape:
        raise ValidationError("truth and predictions differ in length")
    m = np.zeros((class_count, class_count), dtype=int)
    np.add.at(m, (truth, preds), 1)
    return m


def accuracy(truth, preds):
    truth = np.asarray(truth)
    if len(truth) == 0:
        raise ValidationError("empty prediction set")
    return float(np.mean(truth == np.asarray(preds)))


def macro_f1(truth, preds, class_count):
    """Unweighted mean of per-class F1 over all ``class_count`` classes;
    classes absent from both truth and predictions contribute zero."""
    if len(truth) == 0:
        raise ValidationError("empty prediction set")
    m = confusion_matrix(truth, preds, class_count)
    tp = np.diag(m).astype(float)
    fp = m.sum(axis=0) - tp
    fn = m.sum(axis=1) - tp
    denom = 2 * tp + fp + fn
    f1 = np.where(denom > 0, 2 * tp / np.maximum(denom, 1), 0.0)
    return float(f1.sum() / class_count)


@dataclass(eq=False)
class FeatureTable:
    """Per-modality feature matrices over every usable window."""

    windows: list
    matrices: dict
    labels3: np.ndarray
    dropped: dict  # subject id → windows lost to extraction failure

    def labels(self, n_classes):
        if n_classes == 3:
            return self.labels3
        if n_classes == 2:
            return _BINARY_OF_3CLASS[self.labels3]
        raise ConfigurationError(f"unsupported class count {n_classes}")

    def branch_matrix(self, branch_id, rows):
        parts = [self.matrices[m][rows] for m in BRANCH_MODALITIES[branch_id]]
        return np.hstack(parts)

    def rows_by_subject(self):
        groups = {}
        for i, w in enumerate(self.windows):
            groups.setdefault(w.subject_id, []).append(i)
        return {s: np.asarray(rows) for s, rows in groups.items()}


def build_feature_table(windows):
    """Extract all four modalities for every window; windows where any
    extractor fails (e.g. too few BVP peaks) are dropped and counted."""
    kept = []
    vectors = {m: [] for m in ("ACC", "BVP", "EDA", "TEMP")}
    dropped = {}
    for window in windows:
        cache = FeatureCache()
        try:
            per_modality = {
                m: cache.get(window, m) for m in ("ACC", "BVP", "EDA", "TEMP")
            }
        except FeatureExtractionError:
            dropped[window.subject_id] = dropped.get(window.subject_id, 0) + 1
            continue
        kept.append(window)
        for m, vec in per_modality.items():
            vectors[m].append(vec.values)
    if not kept:
        raise ValidationError("every window failed feature extraction")
    matrices = {m: np.stack(v) for m, v in vectors.items()}
    labels3 = np.array([w.label.id for w in kept], dtype=int)
    return FeatureTable(
        windows=kept, matrices=matrices, labels3=labels3, dropped=dropped
    )


@dataclass(frozen=True)
class PipelineConfig:
    """Everything that determines a pipeline run apart from the data."""

    n_classes: int = 3
    fusion: str = "kalman"
    delta: float = None
    k: int = 3
    seed: int = 0
    kalman: object = None
    cost_model: object = DEFAULT_COST_MODEL
    kinds: tuple = CLASSIFIER_KINDS
    window_s: float = WINDOW_S
    slide_s: float = SLIDE_S
    filters: object = DEFAULT_FILTERS

    def __post_init__(self):
        if self.n_classes not in (2, 3):
            raise ConfigurationError("n_classes must be 2 or 3")
        if self.fusion not in FUSION_KINDS:
            raise ConfigurationError(
                f"fusion {self.fusion!r} not one of {FUSION_KINDS}"
            )
        if self.delta is None:
            object.__setattr__(self, "delta", default_delta(self.n_classes))
        if not 0.0 <= self.delta <= 1.0:
            raise ConfigurationError(f"delta {self.delta} outside [0, 1]")
        if self.kalman is None:
            object.__setattr__(self, "kalman", default_kalman_config(self.n_classes))
        if self.kalman.n_classes != self.n_classes:
            raise ConfigurationError("kalman config class count mismatch")
        if self.k < 1:
            raise ConfigurationError("k must be >= 1")
        unknown = set(self.kinds) - set(CLASSIFIER_KINDS)
        if unknown:
            raise ConfigurationError(f"unknown classifier kinds {sorted(unknown)}")


@dataclass(eq=False)
class TrainedFold:
    """Fold state that does not depend on delta/fusion settings."""

    test_subject: str
    train_rows: np.ndarray
    test_rows: np.ndarray
    specs: tuple
    models: list
    gate_model: object
    losses: dict
    gate_label_counts: dict


@dataclass(eq=False)
class FoldResult:
    subject_id: str
    specs: tuple
    truth: np.ndarray
    preds: np.ndarray
    window_index: np.ndarray
    selections: tuple  # per window: tuple of selected branch ids
    window_costs: np.ndarray
    accuracy: float
    macro_f1: float
    energy: object
    diagnostics: dict = field(default_factory=dict)


@dataclass(eq=False)
class LosoResult:
    folds: list
    n_classes: int
    micro_accuracy: float
    micro_macro_f1: float
    mean_accuracy: float
    mean_macro_f1: float
    energy_ratio: float  # combined baseline/candidate over all folds
    diagnostics: dict = field(default_factory=dict)


def train_fold(table, test_subject, train_rows, test_rows, config, audit=None):
    """Branch selection and gate training for one fold — the δ- and
    fusion-independent part."""
    y_train = table.labels(config.n_classes)[train_rows]
    train_windows = [table.windows[i] for i in train_rows]

    branch_features = {
        bid: table.branch_matrix(bid, train_rows) for bid in BRANCH_IDS
    }
    if audit is not None:
        audit("select_branches", test_subject, train_windows)
    specs, models, losses = select_branches(
        branch_features, y_train, k=config.k, seed=config.seed, kinds=config.kinds
    )

    branch_probs = [
        model.predict_proba(branch_features[spec.id])
        for spec, model in zip(specs, models)
    ]
    gate_labels = make_gate_labels(branch_probs, y_train, specs, config.cost_model)

    if audit is not None:
        audit("train_gate", test_subject, train_windows)
    gate_model = train_gate(
        table.matrices["ACC"][train_rows],
        gate_labels,
        n_branches=len(specs),
        seed=config.seed,
    )
    counts = {
        specs[i].id: int(c)
        for i, c in enumerate(np.bincount(gate_labels, minlength=len(specs)))
    }
    return TrainedFold(
        test_subject=test_subject,
        train_rows=np.asarray(train_rows),
        test_rows=np.asarray(test_rows),
        specs=specs,
        models=list(models),
        gate_model=gate_model,
        losses=losses,
        gate_label_counts=counts,
    )


def evaluate_fold(table, trained, config):
    """Apply one trained fold to its test subject under the configured
    delta/fusion/cost settings."""
    rows = trained.test_rows
    test_windows = [table.windows[i] for i in rows]
    truth = table.labels(config.n_classes)[rows]
    specs = trained.specs

    gate_probs = trained.gate_model.predict_proba(table.matrices["ACC"][rows])
    decisions = [
        decide(gate_probs[i], config.delta, specs) for i in range(len(rows))
    ]

    branch_probs = [
        model.predict_proba(table.branch_matrix(spec.id, rows))
        for spec, model in zip(specs, trained.models)
    ]

    preds_per_window = [
        [BranchPrediction(j, branch_probs[j][i]) for j in decisions[i].selected]
        for i in range(len(rows))
    ]

    diagnostics = {
        "dropped_windows": table.dropped.get(trained.test_subject, 0),
        "gate_label_counts": dict(trained.gate_label_counts),
    }
    if config.fusion == "hard":
        preds = [fuse_hard(p) for p in preds_per_window]
    elif config.fusion == "soft":
        preds = [fuse_soft(p) for p in preds_per_window]
    elif config.fusion == "single":
        tops = [int(np.argmax(d.probs)) for d in decisions]
        preds = [
            int(np.argmax(branch_probs[top][i])) for i, top in enumerate(tops)
        ]
    else:  # kalman
        preds = run_kalman_sequence(
            test_windows, preds_per_window, config.kalman, diagnostics
        )
    preds = np.asarray(preds, dtype=int)

    keys = tuple((w.subject_id, w.window_index) for w in test_windows)
    costs = np.array([window_cost(d, config.cost_model) for d in decisions])
    report = report_from_decisions(decisions, config.cost_model, keys)
    baseline = baseline_report(specs, config.cost_model, keys)
    report = report.with_ratio(compare(report, baseline))
    diagnostics["baseline_total"] = baseline.total

    return FoldResult(
        subject_id=trained.test_subject,
        specs=specs,
        truth=truth,
        preds=preds,
        window_index=np.array([w.window_index for w in test_windows]),
        selections=tuple(
            tuple(s.id for s in d.selected_specs) for d in decisions
        ),
        window_costs=costs,
        accuracy=accuracy(truth, preds),
        macro_f1=macro_f1(truth, preds, config.n_classes),
        energy=report,
        diagnostics=diagnostics,
    )


def aggregate(fold_results, n_classes):
    """Micro (pooled windows) and per-fold-mean aggregation, plus the
    combined energy ratio."""
    if not fold_results:
        raise ValidationError("no folds to aggregate")
    truth = np.concatenate([f.truth for f in fold_results])
    preds = np.concatenate([f.preds for f in fold_results])
    total_candidate = sum(f.energy.total for f in fold_results)
    total_baseline = sum(f.diagnostics["baseline_total"] for f in fold_results)
    dropped = sum(f.diagnostics.get("dropped_windows", 0) for f in fold_results)
    return LosoResult(
        folds=list(fold_results),
        n_classes=n_classes,
        micro_accuracy=accuracy(truth, preds),
        micro_macro_f1=macro_f1(truth, preds, n_classes),
        mean_accuracy=float(np.mean([f.accuracy for f in fold_results])),
        mean_macro_f1=float(np.mean([f.macro_f1 for f in fold_results])),
        energy_ratio=total_baseline / total_candidate,
        diagnostics={"dropped_windows": dropped, "n_windows": len(truth)},
    )


def prepare_table(records, config):
    windows = segment_records(
        records,
        window_s=config.window_s,
        slide_s=config.slide_s,
        filters=config.filters,
    )
    if not windows:
        raise ValidationError("segmentation produced no windows")
    return build_feature_table(windows)


def train_folds(table, config, subjects=None, audit=None):
    rows_by_subject = table.rows_by_subject()
    if subjects is None:
        subjects = list(rows_by_subject)
    if len(subjects) < 2:
        raise ValidationError("LOSO needs at least 2 subjects")
    trained = []
    for subject in subjects:
        if subject not in rows_by_subject:
            raise ValidationError(f"subject {subject} has no usable windows")
        test_rows = rows_by_subject[subject]
        train_rows = np.concatenate(
            [rows for s, rows in rows_by_subject.items() if s != subject]
        )
        trained.append(
            train_fold(table, subject, train_rows, test_rows, config, audit=audit)
        )
    return trained


def run_loso(records, config, audit=None):
    """Full LOSO evaluation of the pipeline on a record list."""
    loso_split(records)  # validates subject count and uniqueness
    table = prepare_table(records, config)
    subjects = [r.subject_id for r in records if r.subject_id in table.rows_by_subject()]
    trained = train_folds(table, config, subjects=subjects, audit=audit)
    results = [evaluate_fold(table, tf, config) for tf in trained]
    return aggregate(results, config.n_classes)


def train_full(table, config, audit=None):
    """Train branch selection and gate on every usable window — the
    deployment path behind the CLI ``train`` command (no held-out
    subject)."""
    rows = np.arange(len(table.windows))
    return train_fold(
        table, None, rows, np.array([], dtype=int), config, audit=audit
    )


# --- CSV emission ------------------------------------------------------------

RESULTS_COLUMNS = (
    "subject",
    "window_index",
    "true_label",
    "true_name",
    "predicted_label",
    "predicted_name",
    "n_selected",
    "selected_branches",
    "window_cost",
)

SUMMARY_COLUMNS = (
    "scope",
    "subject",
    "n_windows",
    "accuracy",
    "macro_f1",
    "energy_total",
    "energy_ratio",
    "selected_branches",
)


def _fmt(x):
    return repr(float(x))


def write_results_csv(path, result):
    """Per-window rows for every fold of a :class:`LosoResult`."""
    names = class_names(result.n_classes)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULTS_COLUMNS)
        for fold in result.folds:
            for i in range(len(fold.truth)):
                selected = fold.selections[i]
                writer.writerow(
                    [
                        fold.subject_id,
                        int(fold.window_index[i]),
                        int(fold.truth[i]),
                        names[int(fold.truth[i])],
                        int(fold.preds[i]),
                        names[int(fold.preds[i])],
                        len(selected),
                        "|".join(selected),
                        _fmt(fold.window_costs[i]),
                    ]
                )


def write_summary_csv(path, result):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for fold in result.folds:
            writer.writerow(
                [
                    "fold",
                    fold.subject_id,
                    len(fold.truth),
                    _fmt(fold.accuracy),
                    _fmt(fold.macro_f1),
                    _fmt(fold.energy.total),
                    _fmt(fold.energy.baseline_ratio),
                    "|".join(f"{s.id}-{s.kind}" for s in fold.specs),
                ]
            )
        n_total = sum(len(f.truth) for f in result.folds)
        writer.writerow(
            [
                "micro",
                "ALL",
                n_total,
                _fmt(result.micro_accuracy),
                _fmt(result.micro_macro_f1),
                _fmt(sum(f.energy.total for f in result.folds)),
                _fmt(result.energy_ratio),
                "",
            ]
        )
        writer.writerow(
            [
                "mean",
                "ALL",
                n_total,
                _fmt(result.mean_accuracy),
                _fmt(result.mean_macro_f1),
                "",
                "",
                "",
            ]
        )


ENERGY_COLUMNS = (
    "scope",
    "subject",
    "n_windows",
    "total_cost",
    "mean_cost_per_window",
    "baseline_total",
    "efficiency_ratio",
    "branch_invocations",
)


def _fmt_counts(counts):
    return "|".join(f"{b}:{counts[b]}" for b in sorted(counts))


def write_energy_csv(path, result):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ENERGY_COLUMNS)
        combined = {}
        for fold in result.folds:
            report = fold.energy
            for b, c in report.branch_counts.items():
                combined[b] = combined.get(b, 0) + c
            writer.writerow(
                [
                    "fold",
                    fold.subject_id,
                    report.n_windows,
                    _fmt(report.total),
                    _fmt(report.mean_per_window),
                    _fmt(fold.diagnostics["baseline_total"]),
                    _fmt(report.baseline_ratio),
                    _fmt_counts(report.branch_counts),
                ]
            )
        n_total = sum(f.energy.n_windows for f in result.folds)
        total = sum(f.energy.total for f in result.folds)
        baseline = sum(f.diagnostics["baseline_total"] for f in result.folds)
        writer.writerow(
            [
                "total",
                "ALL",
                n_total,
                _fmt(total),
                _fmt(total / n_total if n_total else 0.0),
                _fmt(baseline),
                _fmt(result.energy_ratio),
                _fmt_counts(combined),
            ]
        )


# --- model bundle serialization ---------------------------------------------

BUNDLE_FORMAT = "stressfuse-bundle"
BUNDLE_VERSION = 1


def bundle_to_dict(specs, models, gate_model, config):
    if isinstance(gate_model, ConstantGate):
        gate_doc = {"gate_kind": "CONST", "payload": gate_model.to_dict()}
    else:
        gate_doc = {"gate_kind": "MODEL", "payload": model_to_dict(gate_model)}
    return {
        "format": BUNDLE_FORMAT,
        "version": BUNDLE_VERSION,
        "n_classes": config.n_classes,
        "delta": config.delta,
        "fusion": config.fusion,
        "kalman": {
            "x0": list(config.kalman.x0),
            "r_factor": config.kalman.r_factor,
            "epsilon": config.kalman.epsilon,
            "gamma": list(config.kalman.gamma),
            "p0_scale": config.kalman.p0_scale,
            "q_var": config.kalman.q_var,
        },
        "branches": [
            {"id": spec.id, "kind": spec.kind, "model": model_to_dict(model)}
            for spec, model in zip(specs, models)
        ],
        "gate": gate_doc,
    }


def bundle_from_dict(doc):
    if not isinstance(doc, dict) or doc.get("format") != BUNDLE_FORMAT:
        raise ValidationError("not a pipeline bundle document")
    if doc.get("version") != BUNDLE_VERSION:
        raise ValidationError(f"unsupported bundle version {doc.get('version')!r}")
    specs = tuple(
        BranchSpec(id=b["id"], kind=b["kind"]) for b in doc["branches"]
    )
    models = [model_from_dict(b["model"]) for b in doc["branches"]]
    gate_doc = doc["gate"]
    if gate_doc["gate_kind"] == "CONST":
        gate_model = ConstantGate.from_dict(gate_doc["payload"])
    else:
        gate_model = model_from_dict(gate_doc["payload"])
    from .fusion import KalmanConfig

    kalman = KalmanConfig(
        x0=tuple(doc["kalman"]["x0"]),
        r_factor=doc["kalman"]["r_factor"],
        epsilon=doc["kalman"]["epsilon"],
        gamma=tuple(doc["kalman"]["gamma"]),
        p0_scale=doc["kalman"]["p0_scale"],
        q_var=doc["kalman"]["q_var"],
    )
    return {
        "specs": specs,
        "models": models,
        "gate_model": gate_model,
        "n_classes": int(doc["n_classes"]),
        "delta": float(doc["delta"]),
        "fusion": doc["fusion"],
        "kalman": kalman,
    }


def save_bundle(path, specs, models, gate_model, config):
    with open(path, "w") as fh:
        json.dump(bundle_to_dict(specs, models, gate_model, config), fh)
        fh.write("\n")


def load_bundle(path):
    with open(path) as fh:
        return bundle_from_dict(json.load(fh))
