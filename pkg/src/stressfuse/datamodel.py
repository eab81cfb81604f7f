"""Shared domain types: class labels, sensor streams, windows, features.

Class-index conventions used throughout the package:

* 3-class: ``0=baseline, 1=stress, 2=amusement``
* 2-class: ``0=non-stress, 1=stress`` (baseline and amusement both map
  to non-stress)

All types here are immutable after construction and safe to share
between threads.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import FeatureExtractionError, InvalidLabelError, ValidationError

MODALITIES = ("ACC", "BVP", "EDA", "TEMP")

SAMPLE_RATES = {"ACC": 32.0, "BVP": 64.0, "EDA": 4.0, "TEMP": 4.0}

CHANNEL_COUNTS = {"ACC": 3, "BVP": 1, "EDA": 1, "TEMP": 1}

THREE_CLASS_NAMES = ("baseline", "stress", "amusement")
TWO_CLASS_NAMES = ("non-stress", "stress")

#: Sentinel label id for samples outside the three study conditions.
#: Segmentation drops any region carrying it.
IGNORE_LABEL = -1

STUDY_LABEL_IDS = (0, 1, 2)


@dataclass(frozen=True)
class ClassLabel:
    """An integer class id together with its canonical name."""

    id: int
    name: str

    def __post_init__(self):
        if self.name not in THREE_CLASS_NAMES and self.name not in TWO_CLASS_NAMES:
            raise InvalidLabelError(f"unknown class name {self.name!r}")


def label3(label_id):
    """The 3-class label for an id in {0, 1, 2}."""
    if label_id not in (0, 1, 2):
        raise InvalidLabelError(f"invalid 3-class label id {label_id!r}")
    return ClassLabel(int(label_id), THREE_CLASS_NAMES[label_id])


def label2(label_id):
    """The 2-class label for an id in {0, 1}."""
    if label_id not in (0, 1):
        raise InvalidLabelError(f"invalid 2-class label id {label_id!r}")
    return ClassLabel(int(label_id), TWO_CLASS_NAMES[label_id])


def to_binary_label(label):
    """Collapse a 3-class label to the 2-class problem.

    Baseline and amusement become non-stress; stress stays stress.
    """
    if label.name not in THREE_CLASS_NAMES or label.id not in (0, 1, 2):
        raise InvalidLabelError(f"not a 3-class label: {label!r}")
    return label2(1 if label.id == 1 else 0)


def class_names(n_classes):
    if n_classes == 3:
        return THREE_CLASS_NAMES
    if n_classes == 2:
        return TWO_CLASS_NAMES
    raise InvalidLabelError(f"unsupported class count {n_classes}")


def _as_readonly(a, dtype=float):
    out = np.array(a, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class SensorStream:
    """A uniformly sampled stream for one wrist modality.

    ``samples`` has shape ``(n, channels)``: 3 channels for ACC, 1 for
    the others. Samples are spaced at exactly ``1 / sample_rate``
    starting at ``start_time`` seconds.
    """

    modality: str
    sample_rate: float
    samples: np.ndarray
    start_time: float = 0.0

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise ValidationError(f"unknown modality {self.modality!r}")
        if not self.sample_rate > 0:
            raise ValidationError("sample_rate must be strictly positive")
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim == 1:
            samples = samples.reshape(-1, 1)
        expected = CHANNEL_COUNTS[self.modality]
        if samples.ndim != 2 or samples.shape[1] != expected:
            raise ValidationError(
                f"{self.modality} needs {expected} channel(s), "
                f"got shape {samples.shape}"
            )
        object.__setattr__(self, "samples", _as_readonly(samples))

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration_s(self):
        return len(self) / self.sample_rate


@dataclass(frozen=True, eq=False)
class SensorWindow:
    """One fixed-duration multi-modality segment with its ground truth.

    Each modality slice must contain exactly ``round(duration_s * rate)``
    samples; any deviation is rejected outright.
    """

    subject_id: str
    window_index: int
    start_time: float
    slices: dict
    label: ClassLabel
    duration_s: float = 60.0

    def __post_init__(self):
        if set(self.slices) != set(MODALITIES):
            missing = set(MODALITIES) - set(self.slices)
            raise ValidationError(f"window missing modalities: {sorted(missing)}")
        frozen = {}
        for modality, data in self.slices.items():
            arr = np.asarray(data, dtype=float)
            if arr.ndim == 1:
                arr = arr.reshape(-1, 1)
            expected_len = round(self.duration_s * SAMPLE_RATES[modality])
            if arr.shape[0] != expected_len:
                raise ValidationError(
                    f"{modality} slice has {arr.shape[0]} samples, "
                    f"expected exactly {expected_len}"
                )
            if arr.shape[1] != CHANNEL_COUNTS[modality]:
                raise ValidationError(
                    f"{modality} slice has {arr.shape[1]} channels"
                )
            frozen[modality] = _as_readonly(arr)
        object.__setattr__(self, "slices", frozen)

    def modality(self, name):
        return self.slices[name]


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """Named, ordered real-valued features for a modality subset.

    Construction fails loudly on NaN/inf values; a silent NaN must never
    leave feature extraction.
    """

    names: tuple
    values: np.ndarray
    modalities: tuple = field(default=())

    def __post_init__(self):
        names = tuple(self.names)
        values = np.asarray(self.values, dtype=float).ravel()
        if len(names) != len(values):
            raise ValidationError(
                f"{len(names)} feature names but {len(values)} values"
            )
        if not np.all(np.isfinite(values)):
            bad = [n for n, v in zip(names, values) if not np.isfinite(v)]
            raise FeatureExtractionError(
                f"non-finite feature value(s): {', '.join(bad)}"
            )
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "values", _as_readonly(values))
        object.__setattr__(self, "modalities", tuple(self.modalities))

    def __len__(self):
        return len(self.values)

    def concat(self, other):
        return FeatureVector(
            names=self.names + other.names,
            values=np.concatenate([self.values, other.values]),
            modalities=self.modalities + other.modalities,
        )
