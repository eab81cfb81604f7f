"""Selective multi-modal sensor fusion for wrist-based stress
classification: context-aware gating over early-fusion classifier
branches, Kalman-filter late fusion, and energy-aware evaluation."""

from .datamodel import (
    CHANNEL_COUNTS,
    IGNORE_LABEL,
    MODALITIES,
    SAMPLE_RATES,
    ClassLabel,
    FeatureVector,
    SensorStream,
    SensorWindow,
    class_names,
    label2,
    label3,
    to_binary_label,
)
from .errors import (
    ConfigurationError,
    CsvParseError,
    DegenerateTrainingError,
    FeatureExtractionError,
    InvalidLabelError,
    MissingModalityError,
    StressFuseError,
    ValidationError,
)
from .ingest import (
    ClassSignalProfile,
    SubjectRecord,
    SyntheticProfile,
    generate_synthetic,
    load_dataset,
    load_subject,
    write_subject,
)
from .preprocess import FilterConfig, apply_filters, segment, segment_records
from .features import (
    FeatureCache,
    extract,
    extract_for_branch,
    feature_matrix,
)
from .classifiers import (
    CLASSIFIER_KINDS,
    make_classifier,
    train,
    training_loss,
)
from .gating import (
    BRANCH_IDS,
    BRANCH_MODALITIES,
    BranchSpec,
    GateDecision,
    gate,
    make_gate_labels,
    select_branches,
    select_subset,
    train_gate,
)
from .fusion import (
    KALMAN_2CLASS,
    KALMAN_3CLASS,
    BranchPrediction,
    KalmanConfig,
    KalmanState,
    fuse_hard,
    fuse_soft,
    kalman_init,
    kalman_step,
    run_kalman_sequence,
)
from .energy import (
    DEFAULT_COST_MODEL,
    CostModel,
    EnergyReport,
    compare,
    window_cost,
)
from .eval import (
    FoldResult,
    LosoResult,
    PipelineConfig,
    accuracy,
    loso_split,
    macro_f1,
    run_loso,
)

__version__ = "0.1.0"
