"""Per-window feature extraction for the four wrist modalities.

Each extractor maps one window slice to a fixed-length, fixed-order
:class:`~stressfuse.datamodel.FeatureVector`:

* ACC  (12): per-axis mean and standard deviation, magnitude mean and
  standard deviation, per-axis absolute integral (mean |x|), and the
  dominant magnitude frequency.
* BVP   (6): per-beat heart-rate mean and standard deviation, mean
  inter-beat interval, SDNN, RMSSD, pNN50 — all from systolic peaks.
* EDA   (7): tonic-level mean / std / min / max / slope plus phasic
  response count and summed response amplitude.
* TEMP  (5): mean, standard deviation, min, max, slope.

Slopes are least-squares linear trends in signal units per second.
"""

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.signal import find_peaks

from .datamodel import MODALITIES, SAMPLE_RATES, FeatureVector
from .errors import FeatureExtractionError, ValidationError

ACC_FEATURE_NAMES = (
    "acc_mean_x",
    "acc_mean_y",
    "acc_mean_z",
    "acc_std_x",
    "acc_std_y",
    "acc_std_z",
    "acc_mag_mean",
    "acc_mag_std",
    "acc_absint_x",
    "acc_absint_y",
    "acc_absint_z",
    "acc_peak_freq_hz",
)

BVP_FEATURE_NAMES = (
    "bvp_hr_mean_bpm",
    "bvp_hr_std_bpm",
    "bvp_ibi_mean_ms",
    "bvp_sdnn_ms",
    "bvp_rmssd_ms",
    "bvp_pnn50",
)

EDA_FEATURE_NAMES = (
    "eda_tonic_mean_us",
    "eda_tonic_std_us",
    "eda_tonic_min_us",
    "eda_tonic_max_us",
    "eda_tonic_slope_us_s",
    "eda_scr_count",
    "eda_scr_amp_sum_us",
)

TEMP_FEATURE_NAMES = (
    "temp_mean_c",
    "temp_std_c",
    "temp_min_c",
    "temp_max_c",
    "temp_slope_c_s",
)

FEATURE_NAMES = {
    "ACC": ACC_FEATURE_NAMES,
    "BVP": BVP_FEATURE_NAMES,
    "EDA": EDA_FEATURE_NAMES,
    "TEMP": TEMP_FEATURE_NAMES,
}

#: Dominant-frequency search band for ACC, Hz.
ACC_FREQ_BAND_HZ = (0.1, 16.0)

#: Width of the rolling window used for the adaptive BVP peak
#: threshold, seconds.
BVP_THRESHOLD_WINDOW_S = 10.0
BVP_THRESHOLD_STD_GAIN = 0.5
BVP_REFRACTORY_S = 0.4

#: Tonic EDA is the signal smoothed with a moving average of this
#: length, seconds; phasic is the residual.
EDA_TONIC_WINDOW_S = 8.0
EDA_SCR_MIN_PROMINENCE_US = 0.01


def _slope(x, sample_rate):
    t = np.arange(len(x)) / sample_rate
    return float(np.polyfit(t, x, 1)[0])


def _column(samples, modality):
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 2:
        if samples.shape[1] != 1:
            raise ValidationError(f"{modality}: expected a single channel")
        samples = samples[:, 0]
    return samples


def acc_features(samples, sample_rate):
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or samples.shape[1] != 3:
        raise ValidationError("ACC: expected an (n, 3) array")
    mag = np.sqrt(np.sum(samples**2, axis=1))

    centered = mag - np.mean(mag)
    spectrum = np.abs(np.fft.rfft(centered))
    freqs = np.fft.rfftfreq(len(centered), d=1.0 / sample_rate)
    lo, hi = ACC_FREQ_BAND_HZ
    band = (freqs >= lo - 1e-12) & (freqs <= hi + 1e-12)
    if not np.any(band):
        raise FeatureExtractionError("ACC: window too short for spectral band")
    peak_freq = float(freqs[band][np.argmax(spectrum[band])])

    values = np.concatenate(
        [
            np.mean(samples, axis=0),
            np.std(samples, axis=0),
            [np.mean(mag), np.std(mag)],
            np.mean(np.abs(samples), axis=0),
            [peak_freq],
        ]
    )
    return FeatureVector(names=ACC_FEATURE_NAMES, values=values, modalities=("ACC",))


def detect_pulse_peaks(samples, sample_rate):
    """Systolic peak indices: local maxima above a rolling adaptive
    threshold, with a refractory period between accepted peaks."""
    x = _column(samples, "BVP")
    size = max(1, round(BVP_THRESHOLD_WINDOW_S * sample_rate))
    mean = uniform_filter1d(x, size=size, mode="nearest")
    sq_mean = uniform_filter1d(x**2, size=size, mode="nearest")
    std = np.sqrt(np.clip(sq_mean - mean**2, 0.0, None))
    threshold = mean + BVP_THRESHOLD_STD_GAIN * std
    distance = max(1, round(BVP_REFRACTORY_S * sample_rate))
    peaks, _ = find_peaks(x, height=threshold, distance=distance)
    return peaks


def hrv_from_ibi(ibi_ms):
    """The six time-domain HRV statistics from an inter-beat-interval
    sequence (milliseconds). Needs at least two intervals."""
    ibi_ms = np.asarray(ibi_ms, dtype=float)
    if ibi_ms.ndim != 1 or len(ibi_ms) < 2:
        raise FeatureExtractionError("need at least 2 inter-beat intervals")
    hr = 60000.0 / ibi_ms
    diffs = np.diff(ibi_ms)
    return np.array(
        [
            np.mean(hr),
            np.std(hr),
            np.mean(ibi_ms),
            np.std(ibi_ms),
            np.sqrt(np.mean(diffs**2)),
            np.mean(np.abs(diffs) > 50.0),
        ]
    )


def bvp_features(samples, sample_rate):
    x = _column(samples, "BVP")
    peaks = detect_pulse_peaks(x, sample_rate)
    if len(peaks) < 3:
        raise FeatureExtractionError(
            f"BVP: only {len(peaks)} pulse peaks detected, need at least 3"
        )
    ibi_ms = np.diff(peaks) / sample_rate * 1000.0
    values = hrv_from_ibi(ibi_ms)
    return FeatureVector(names=BVP_FEATURE_NAMES, values=values, modalities=("BVP",))


def eda_features(samples, sample_rate):
    x = _column(samples, "EDA")
    size = max(1, round(EDA_TONIC_WINDOW_S * sample_rate))
    tonic = uniform_filter1d(x, size=size, mode="nearest")
    phasic = x - tonic

    peaks, props = find_peaks(phasic, prominence=EDA_SCR_MIN_PROMINENCE_US)
    keep = props["prominences"] > EDA_SCR_MIN_PROMINENCE_US
    amplitudes = props["prominences"][keep]

    # Edge padding flattens the moving average over the first and last
    # half-window, which would bias the trend estimate; fit the slope on
    # the untainted interior only.
    margin = size // 2
    interior = tonic[margin : len(tonic) - margin]
    if len(interior) < 2:
        interior = tonic

    values = np.array(
        [
            np.mean(tonic),
            np.std(tonic),
            np.min(tonic),
            np.max(tonic),
            _slope(interior, sample_rate),
            float(np.count_nonzero(keep)),
            float(np.sum(amplitudes)),
        ]
    )
    return FeatureVector(names=EDA_FEATURE_NAMES, values=values, modalities=("EDA",))


def temp_features(samples, sample_rate):
    x = _column(samples, "TEMP")
    values = np.array(
        [np.mean(x), np.std(x), np.min(x), np.max(x), _slope(x, sample_rate)]
    )
    return FeatureVector(names=TEMP_FEATURE_NAMES, values=values, modalities=("TEMP",))


_EXTRACTORS = {
    "ACC": acc_features,
    "BVP": bvp_features,
    "EDA": eda_features,
    "TEMP": temp_features,
}


class FeatureCache:
    """Per-window memo of modality vectors, so each modality is
    extracted at most once per window no matter how many branches need
    it (the energy accounting charges extraction exactly once too).
    Single-threaded; hold one instance per window."""

    def __init__(self):
        self._vectors = {}
        self.hits = 0
        self.misses = 0

    def get(self, window, modality):
        if modality in self._vectors:
            self.hits += 1
            return self._vectors[modality]
        self.misses += 1
        vector = _EXTRACTORS[modality](
            window.modality(modality), SAMPLE_RATES[modality]
        )
        self._vectors[modality] = vector
        return vector

    @property
    def extracted(self):
        return frozenset(self._vectors)


def extract_for_branch(window, modalities, cache=None):
    """Concatenate features for ``modalities``, always in the canonical
    modality order regardless of the order given. With a cache, repeat
    modalities across calls cost nothing."""
    ordered = [m for m in MODALITIES if m in modalities]
    unknown = set(modalities) - set(MODALITIES)
    if unknown:
        raise ValidationError(f"unknown modalities {sorted(unknown)}")
    if not ordered:
        raise ValidationError("at least one modality required")
    vector = None
    for modality in ordered:
        if cache is not None:
            part = cache.get(window, modality)
        else:
            part = _EXTRACTORS[modality](
                window.modality(modality), SAMPLE_RATES[modality]
            )
        vector = part if vector is None else vector.concat(part)
    return vector


def extract(window, modalities=MODALITIES):
    return extract_for_branch(window, modalities)


def feature_matrix(windows, modalities=MODALITIES):
    """Stack per-window feature vectors into ``(X, names)``."""
    if not windows:
        raise ValidationError("no windows to extract features from")
    vectors = [extract(w, modalities) for w in windows]
    names = vectors[0].names
    X = np.stack([v.values for v in vectors])
    return X, names
