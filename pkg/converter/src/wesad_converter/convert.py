"""Convert a WESAD per-subject pickle archive into the canonical CSV layout.

The archive is the dataset's native format: a (python-2 era) pickle
holding ``{"subject": "S2", "signal": {"chest": {...}, "wrist": {...}},
"label": <700 Hz condition track>}``. Only the wrist signals are used:

* ``ACC``  (n, 3) at 32 Hz, raw 1/64 g steps -> written in g
* ``BVP``  64 Hz, arbitrary units
* ``EDA``  4 Hz, microsiemens
* ``TEMP`` 4 Hz, degrees Celsius

The label track is run-length encoded into change points. Study
condition ids 1/2/3 (baseline/stress/amusement) map to canonical 0/1/2;
every other id becomes the ignore sentinel -1, which downstream
segmentation excludes.
"""

import hashlib
import json
import pickle
from dataclasses import dataclass
from pathlib import Path

import numpy as np

WRIST_RATES = {"ACC": 32.0, "BVP": 64.0, "EDA": 4.0, "TEMP": 4.0}
LABEL_RATE = 700.0
ID_MAP = {1: 0, 2: 1, 3: 2}
IGNORE_ID = -1
DURATION_TOL_S = 1.0


class ConversionError(Exception):
    """The archive cannot be converted (wrong structure or inconsistent)."""


@dataclass(frozen=True)
class ConversionManifest:
    subject: str
    out_dir: str
    duration_s: float
    sample_counts: dict
    modality_durations: dict
    label_histogram: dict
    checksums: dict

    def to_json(self):
        return json.dumps(
            {
                "subject": self.subject,
                "out_dir": self.out_dir,
                "duration_s": self.duration_s,
                "sample_counts": self.sample_counts,
                "modality_durations": self.modality_durations,
                "label_histogram": self.label_histogram,
                "checksums": self.checksums,
            },
            sort_keys=True,
        )


def load_archive(path):
    """Read and structurally validate one subject pickle."""
    path = Path(path)
    with open(path, "rb") as fh:
        try:
            data = pickle.load(fh, encoding="latin1")
        except Exception as exc:
            raise ConversionError(f"{path}: not a readable pickle ({exc})") from exc

    if not isinstance(data, dict) or not {"signal", "label"} <= set(data):
        found = sorted(map(str, data)) if isinstance(data, dict) else type(data).__name__
        raise ConversionError(
            f"{path}: unexpected archive structure; expected keys "
            f"['label', 'signal', 'subject'], found {found}"
        )

    signal = data["signal"]
    if not isinstance(signal, dict) or "wrist" not in signal:
        found = sorted(map(str, signal)) if isinstance(signal, dict) else type(signal).__name__
        raise ConversionError(
            f"{path}: no wrist signals (chest-only archive?); "
            f"signal groups found: {found}"
        )

    wrist = signal["wrist"]
    missing = sorted(set(WRIST_RATES) - set(wrist))
    if missing:
        raise ConversionError(
            f"{path}: wrist group is missing {missing}; "
            f"found {sorted(map(str, wrist))}"
        )

    subject = data.get("subject") or path.stem
    if isinstance(subject, bytes):
        subject = subject.decode("latin1")

    streams = {}
    for modality in WRIST_RATES:
        arr = np.asarray(wrist[modality], dtype=float)
        if modality == "ACC":
            if arr.ndim != 2 or arr.shape[1] != 3:
                raise ConversionError(
                    f"{path}: wrist ACC must be (n, 3), got {arr.shape}"
                )
            arr = arr / 64.0  # raw 1/64 g steps -> g
        else:
            arr = arr.reshape(len(arr), -1)
            if arr.shape[1] != 1:
                raise ConversionError(
                    f"{path}: wrist {modality} must be a single channel, "
                    f"got shape {arr.shape}"
                )
        if len(arr) == 0:
            raise ConversionError(f"{path}: wrist {modality} is empty")
        streams[modality] = arr

    labels = np.asarray(data["label"]).ravel().astype(int)
    if len(labels) == 0:
        raise ConversionError(f"{path}: label track is empty")

    return str(subject), streams, labels


def label_change_points(labels):
    """Run-length encode the 700 Hz track as (time_s, canonical_id) pairs.

    Times are index/700 rounded to 1 ms; consecutive raw ids mapping to
    the same canonical id collapse into one span.
    """
    canonical = np.array([ID_MAP.get(int(v), IGNORE_ID) for v in labels])
    points = []
    for i in np.flatnonzero(np.r_[True, canonical[1:] != canonical[:-1]]):
        points.append((round(float(i) / LABEL_RATE, 3), int(canonical[i])))
    return points, canonical


def _write_stream(path, header, t, values):
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        for ti, row in zip(t, values):
            fields = [repr(float(ti))] + [repr(float(v)) for v in row]
            fh.write(",".join(fields) + "\n")


def _sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def convert_subject(pickle_path, out_dir):
    """Convert one archive; returns the manifest for the written files."""
    subject, streams, labels = load_archive(pickle_path)

    durations = {
        modality: len(arr) / WRIST_RATES[modality]
        for modality, arr in streams.items()
    }
    durations["label"] = len(labels) / LABEL_RATE
    if max(durations.values()) - min(durations.values()) > DURATION_TOL_S:
        detail = {k: round(v, 3) for k, v in sorted(durations.items())}
        raise ConversionError(
            f"{pickle_path}: modality durations disagree beyond "
            f"{DURATION_TOL_S} s: {detail}"
        )

    subject_dir = Path(out_dir) / subject
    subject_dir.mkdir(parents=True, exist_ok=True)

    headers = {"ACC": "t,x,y,z", "BVP": "t,v", "EDA": "t,v", "TEMP": "t,v"}
    for modality, arr in streams.items():
        t = np.arange(len(arr)) / WRIST_RATES[modality]
        _write_stream(subject_dir / f"{modality}.csv", headers[modality], t, arr)

    points, canonical = label_change_points(labels)
    with open(subject_dir / "labels.csv", "w", newline="") as fh:
        fh.write("t,label\n")
        for t, label_id in points:
            fh.write(f"{t!r},{label_id}\n")

    ids, counts = np.unique(canonical, return_counts=True)
    histogram = {str(int(i)): int(c) for i, c in zip(ids, counts)}
    filenames = [f"{m}.csv" for m in WRIST_RATES] + ["labels.csv"]
    checksums = {name: _sha256(subject_dir / name) for name in filenames}

    return ConversionManifest(
        subject=subject,
        out_dir=str(subject_dir),
        duration_s=durations["label"],
        sample_counts={
            **{m: int(len(arr)) for m, arr in streams.items()},
            "label": int(len(labels)),
        },
        modality_durations={k: float(v) for k, v in durations.items()},
        label_histogram=histogram,
        checksums=checksums,
    )
