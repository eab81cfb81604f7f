"""Load canonical per-subject CSV datasets and generate synthetic ones.

Canonical on-disk layout, one directory per subject (``S1/``, ``S2/``,
...):

* ``ACC.csv``  header ``t,x,y,z`` (seconds, g)
* ``BVP.csv``  header ``t,v`` (seconds, a.u.)
* ``EDA.csv``  header ``t,v`` (seconds, microsiemens)
* ``TEMP.csv`` header ``t,v`` (seconds, degrees C)
* ``labels.csv`` header ``t,label`` with run-length encoded change
  points; label ids are the canonical 3-class ids {0,1,2} plus the
  ignore sentinel -1.

All files are comma-delimited decimal ASCII with LF line endings.
"""

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .datamodel import (
    CHANNEL_COUNTS,
    IGNORE_LABEL,
    MODALITIES,
    SAMPLE_RATES,
    STUDY_LABEL_IDS,
    SensorStream,
)
from .errors import (
    ConfigurationError,
    CsvParseError,
    MissingModalityError,
    ValidationError,
)

_HEADERS = {
    "ACC": "t,x,y,z",
    "BVP": "t,v",
    "EDA": "t,v",
    "TEMP": "t,v",
}

#: Maximum tolerated deviation between consecutive timestamps and the
#: declared sampling interval, in seconds.
_SPACING_TOL = 1e-3

#: Modal durations may disagree by at most this much (seconds).
_DURATION_TOL = 1.0

_VALID_LABEL_IDS = frozenset(STUDY_LABEL_IDS) | {IGNORE_LABEL}


@dataclass(frozen=True, eq=False)
class SubjectRecord:
    """All four wrist streams plus the label timeline for one subject.

    ``labels`` is run-length encoded as ``(start_time_s, label_id)``
    change points sorted by time; each label holds until the next change
    point or the end of the recording.
    """

    subject_id: str
    streams: dict
    labels: tuple

    def __post_init__(self):
        missing = set(MODALITIES) - set(self.streams)
        if missing:
            raise MissingModalityError(
                f"subject {self.subject_id}: missing streams {sorted(missing)}"
            )
        labels = tuple((float(t), int(l)) for t, l in self.labels)
        if not labels:
            raise ValidationError(f"subject {self.subject_id}: empty label timeline")
        if labels[0][0] > 1e-9:
            raise ValidationError(
                f"subject {self.subject_id}: labels start at t={labels[0][0]}, "
                "timeline must cover the stream from t=0"
            )
        times = [t for t, _ in labels]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValidationError(
                f"subject {self.subject_id}: label change points not increasing"
            )
        for _, label_id in labels:
            if label_id not in _VALID_LABEL_IDS:
                raise ValidationError(
                    f"subject {self.subject_id}: invalid label id {label_id}"
                )
        object.__setattr__(self, "labels", labels)

    @property
    def duration_s(self):
        return min(s.duration_s for s in self.streams.values())

    def label_regions(self):
        """Contiguous ``(t_start, t_end, label_id)`` regions, clipped to
        the recording duration."""
        end = self.duration_s
        regions = []
        for i, (t, label_id) in enumerate(self.labels):
            t_next = self.labels[i + 1][0] if i + 1 < len(self.labels) else end
            t_next = min(t_next, end)
            if t_next > t:
                regions.append((t, t_next, label_id))
        return regions

    def with_streams(self, streams):
        return replace(self, streams=streams)


def _read_rows(path, expected_header, n_cols):
    rows = []
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        for line_no, row in enumerate(reader, start=1):
            if line_no == 1:
                if ",".join(row) != expected_header:
                    raise CsvParseError(
                        path, 1, f"expected header {expected_header!r}, got {row}"
                    )
                continue
            if not row:
                continue
            if len(row) != n_cols:
                raise CsvParseError(
                    path, line_no, f"expected {n_cols} fields, got {len(row)}"
                )
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise CsvParseError(path, line_no, str(exc)) from None
    if not rows:
        raise CsvParseError(path, 1, "file contains no data rows")
    return np.asarray(rows, dtype=float)


def _validate_spacing(path, times, rate):
    dt = np.diff(times)
    if len(dt) == 0:
        raise ValidationError(f"{path}: stream has a single sample")
    if np.max(np.abs(dt - 1.0 / rate)) > _SPACING_TOL:
        raise ValidationError(
            f"{path}: timestamps not uniform at the declared {rate} Hz rate"
        )


def load_subject(dir_path):
    """Read one subject directory into a validated :class:`SubjectRecord`."""
    dir_path = Path(dir_path)
    subject_id = dir_path.name
    streams = {}
    for modality in MODALITIES:
        path = dir_path / f"{modality}.csv"
        if not path.exists():
            raise MissingModalityError(f"{subject_id}: {path.name} not found")
        n_cols = 1 + CHANNEL_COUNTS[modality]
        data = _read_rows(path, _HEADERS[modality], n_cols)
        rate = SAMPLE_RATES[modality]
        _validate_spacing(path, data[:, 0], rate)
        streams[modality] = SensorStream(
            modality=modality,
            sample_rate=rate,
            samples=data[:, 1:],
            start_time=float(data[0, 0]),
        )

    durations = {m: s.duration_s for m, s in streams.items()}
    if max(durations.values()) - min(durations.values()) > _DURATION_TOL:
        raise ValidationError(
            f"{subject_id}: modality durations disagree beyond "
            f"{_DURATION_TOL} s: {durations}"
        )

    labels_path = dir_path / "labels.csv"
    if not labels_path.exists():
        raise MissingModalityError(f"{subject_id}: labels.csv not found")
    rows = _read_rows(labels_path, "t,label", 2)
    labels = []
    for line_no, (t, label_val) in enumerate(rows, start=2):
        label_id = int(label_val)
        if label_id != label_val or label_id not in _VALID_LABEL_IDS:
            raise ValidationError(
                f"{labels_path}:{line_no}: invalid label id {label_val}"
            )
        labels.append((float(t), label_id))

    return SubjectRecord(subject_id=subject_id, streams=streams, labels=tuple(labels))


def write_subject(record, dir_path):
    """Write a record in the canonical CSV layout (inverse of
    :func:`load_subject`)."""
    dir_path = Path(dir_path)
    dir_path.mkdir(parents=True, exist_ok=True)
    for modality in MODALITIES:
        stream = record.streams[modality]
        path = dir_path / f"{modality}.csv"
        with open(path, "w", newline="") as fh:
            fh.write(_HEADERS[modality] + "\n")
            rate = stream.sample_rate
            for i, row in enumerate(stream.samples):
                t = stream.start_time + i / rate
                fields = [repr(float(t))] + [repr(float(v)) for v in row]
                fh.write(",".join(fields) + "\n")
    with open(dir_path / "labels.csv", "w", newline="") as fh:
        fh.write("t,label\n")
        for t, label_id in record.labels:
            fh.write(f"{t!r},{label_id}\n")


def load_dataset(root):
    """Load every ``S*/`` subject directory under ``root``, sorted by the
    numeric part of the directory name."""
    root = Path(root)
    subject_dirs = [p for p in root.iterdir() if p.is_dir() and p.name.startswith("S")]
    if not subject_dirs:
        raise ValidationError(f"no subject directories found under {root}")

    def sort_key(p):
        suffix = p.name[1:]
        return (0, int(suffix)) if suffix.isdigit() else (1, suffix)

    return [load_subject(p) for p in sorted(subject_dirs, key=sort_key)]


@dataclass(frozen=True)
class ClassSignalProfile:
    """Per-class signal statistics for the synthetic generator."""

    heart_rate_bpm: float
    eda_level_us: float
    eda_scr_per_min: float
    temp_c: float
    acc_amp_g: float
    acc_freq_hz: float


@dataclass(frozen=True)
class SyntheticProfile:
    """Full parameterization of the synthetic dataset generator.

    The per-class profiles must not all coincide; identical profiles
    would make the classes inseparable by construction.
    """

    classes: tuple = (
        ClassSignalProfile(65.0, 2.0, 2.0, 33.5, 0.05, 0.5),   # baseline
        ClassSignalProfile(95.0, 7.0, 8.0, 32.8, 0.30, 2.0),   # stress
        ClassSignalProfile(78.0, 4.0, 4.0, 34.2, 0.15, 1.2),   # amusement
    )
    bvp_noise: float = 0.05
    eda_noise: float = 0.02
    temp_noise: float = 0.02
    acc_noise: float = 0.02
    temp_drift_c: float = 0.2

    def __post_init__(self):
        if len(self.classes) != 3:
            raise ConfigurationError("profile needs one entry per study class")
        for value in (self.bvp_noise, self.eda_noise, self.temp_noise, self.acc_noise):
            if value < 0:
                raise ConfigurationError("noise levels must be non-negative")
        if len(set(self.classes)) < 2:
            raise ConfigurationError(
                "all class profiles identical; classes would be inseparable"
            )


DEFAULT_PROFILE = SyntheticProfile()

#: Class block boundaries are snapped to this grid so sliding windows
#: align with segmentation defaults.
_BLOCK_GRID_S = 5.0


def _scr_bump(t_rel):
    # fast rise (~0.8 s) with a slow exponential recovery (~4 s)
    return (1.0 - np.exp(-t_rel / 0.8)) * np.exp(-t_rel / 4.0)


def _synth_block(rng, profile, cls, duration):
    """Generate one label block of raw per-modality sample arrays."""
    p = profile.classes[cls]
    out = {}

    n = round(duration * SAMPLE_RATES["BVP"])
    t = np.arange(n) / SAMPLE_RATES["BVP"]
    f = p.heart_rate_bpm / 60.0
    phase = rng.uniform(0, 2 * np.pi)
    bvp = np.sin(2 * np.pi * f * t + phase)
    bvp += 0.3 * np.sin(4 * np.pi * f * t + 2 * phase)
    bvp += profile.bvp_noise * rng.standard_normal(n)
    out["BVP"] = bvp.reshape(-1, 1)

    n = round(duration * SAMPLE_RATES["EDA"])
    t = np.arange(n) / SAMPLE_RATES["EDA"]
    eda = np.full(n, p.eda_level_us, dtype=float)
    if p.eda_scr_per_min > 0:
        mean_gap = 60.0 / p.eda_scr_per_min
        event = rng.exponential(mean_gap)
        while event < duration:
            amp = rng.uniform(0.1, 0.4)
            mask = t >= event
            eda[mask] += amp * _scr_bump(t[mask] - event)
            event += rng.exponential(mean_gap)
    eda += profile.eda_noise * rng.standard_normal(n)
    out["EDA"] = np.clip(eda, 0.01, None).reshape(-1, 1)

    n = round(duration * SAMPLE_RATES["TEMP"])
    t = np.arange(n) / SAMPLE_RATES["TEMP"]
    temp = p.temp_c + profile.temp_drift_c * np.sin(
        2 * np.pi * t / 300.0 + rng.uniform(0, 2 * np.pi)
    )
    temp += profile.temp_noise * rng.standard_normal(n)
    out["TEMP"] = temp.reshape(-1, 1)

    n = round(duration * SAMPLE_RATES["ACC"])
    t = np.arange(n) / SAMPLE_RATES["ACC"]
    w = 2 * np.pi * p.acc_freq_hz
    axes = []
    for offset, scale in ((0.0, 1.0), (0.0, 0.8), (1.0, 0.5)):
        ph = rng.uniform(0, 2 * np.pi)
        axis = offset + scale * p.acc_amp_g * np.sin(w * t + ph)
        axis += profile.acc_noise * rng.standard_normal(n)
        axes.append(axis)
    out["ACC"] = np.stack(axes, axis=1)

    return out


def _block_layout(duration_s, subject_index):
    """Split the timeline into one grid-aligned block per class.

    Every recording opens with a baseline block, mirroring how study
    protocols are run; the order of the stress and amusement blocks then
    alternates with the subject index so the two conditions are
    counterbalanced across the cohort.
    """
    block = np.floor(duration_s / 3.0 / _BLOCK_GRID_S) * _BLOCK_GRID_S
    bounds = [0.0, block, 2 * block, duration_s]
    orders = ((0, 1, 2), (0, 2, 1))
    order = orders[subject_index % 2]
    return [
        (bounds[i], bounds[i + 1], order[i])
        for i in range(3)
        if bounds[i + 1] > bounds[i]
    ]


def generate_synthetic(n_subjects, duration_s, seed, class_profile=None):
    """Build a deterministic synthetic dataset of ``n_subjects`` records.

    Each subject's timeline holds one contiguous block per class, with
    class-conditional signal statistics (heart rate, skin conductance
    level and response rate, temperature, motion) separable by
    construction. Output is a pure function of ``(seed, parameters)``.
    """
    if n_subjects < 2:
        raise ConfigurationError("need at least 2 subjects for LOSO evaluation")
    if duration_s < 120:
        raise ConfigurationError("duration_s must be at least 120 seconds")
    profile = class_profile if class_profile is not None else DEFAULT_PROFILE

    subject_seeds = np.random.SeedSequence(seed).spawn(n_subjects)
    records = []
    for i in range(n_subjects):
        rng = np.random.default_rng(subject_seeds[i])
        layout = _block_layout(duration_s, i)
        parts = {m: [] for m in MODALITIES}
        labels = []
        for t0, t1, cls in layout:
            labels.append((t0, cls))
            block = _synth_block(rng, profile, cls, t1 - t0)
            for m in MODALITIES:
                parts[m].append(block[m])
        streams = {
            m: SensorStream(
                modality=m,
                sample_rate=SAMPLE_RATES[m],
                samples=np.concatenate(parts[m], axis=0),
            )
            for m in MODALITIES
        }
        records.append(
            SubjectRecord(
                subject_id=f"S{i + 1}",
                streams=streams,
                labels=tuple(labels),
            )
        )
    return records
