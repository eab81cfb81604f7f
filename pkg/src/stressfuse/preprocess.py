"""Signal conditioning and sliding-window segmentation.

Filtering runs on whole streams before any windowing so window edges
never see filter transients. Defaults: band-pass on BVP to isolate the
pulse wave, low-pass on EDA, a short moving average on TEMP, and ACC
passed through untouched.
"""

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.signal import butter, filtfilt

from .datamodel import IGNORE_LABEL, MODALITIES, SensorStream, SensorWindow, label3
from .errors import ConfigurationError

WINDOW_S = 60.0
SLIDE_S = 5.0


@dataclass(frozen=True)
class FilterConfig:
    """Per-modality conditioning parameters."""

    bvp_band_hz: tuple = (0.7, 3.7)
    bvp_order: int = 3
    eda_cutoff_hz: float = 1.0
    eda_order: int = 4
    temp_window: int = 4

    def __post_init__(self):
        lo, hi = self.bvp_band_hz
        if not 0 < lo < hi:
            raise ConfigurationError(f"invalid BVP band {self.bvp_band_hz}")
        if self.eda_cutoff_hz <= 0:
            raise ConfigurationError("EDA cutoff must be positive")
        if self.bvp_order < 1 or self.eda_order < 1:
            raise ConfigurationError("filter orders must be >= 1")
        if self.temp_window < 1:
            raise ConfigurationError("TEMP moving-average window must be >= 1")


DEFAULT_FILTERS = FilterConfig()


def _filtfilt(b, a, x):
    return filtfilt(b, a, x, axis=0)


def apply_filters(record, config=DEFAULT_FILTERS):
    """Return a copy of ``record`` with conditioned streams."""
    streams = dict(record.streams)

    bvp = streams["BVP"]
    nyq = bvp.sample_rate / 2.0
    lo, hi = config.bvp_band_hz
    if hi >= nyq:
        raise ConfigurationError(
            f"BVP band edge {hi} Hz at or above Nyquist ({nyq} Hz)"
        )
    b, a = butter(config.bvp_order, [lo / nyq, hi / nyq], btype="band")
    streams["BVP"] = SensorStream(
        modality="BVP",
        sample_rate=bvp.sample_rate,
        samples=_filtfilt(b, a, np.asarray(bvp.samples)),
        start_time=bvp.start_time,
    )

    eda = streams["EDA"]
    nyq = eda.sample_rate / 2.0
    if config.eda_cutoff_hz >= nyq:
        raise ConfigurationError(
            f"EDA cutoff {config.eda_cutoff_hz} Hz at or above Nyquist ({nyq} Hz)"
        )
    b, a = butter(config.eda_order, config.eda_cutoff_hz / nyq, btype="low")
    streams["EDA"] = SensorStream(
        modality="EDA",
        sample_rate=eda.sample_rate,
        samples=_filtfilt(b, a, np.asarray(eda.samples)),
        start_time=eda.start_time,
    )

    temp = streams["TEMP"]
    smoothed = uniform_filter1d(
        np.asarray(temp.samples), size=config.temp_window, axis=0, mode="nearest"
    )
    streams["TEMP"] = SensorStream(
        modality="TEMP",
        sample_rate=temp.sample_rate,
        samples=smoothed,
        start_time=temp.start_time,
    )

    return record.with_streams(streams)


def segment(record, window_s=WINDOW_S, slide_s=SLIDE_S):
    """Cut a record into overlapping windows, one stream slice each.

    Windows are anchored to the start of each label region and advance
    by ``slide_s``; a window is emitted only when it fits entirely
    inside a single region, so no window straddles a label change or
    carries the ignore sentinel.
    """
    if window_s <= 0 or slide_s <= 0:
        raise ConfigurationError("window_s and slide_s must be positive")
    windows = []
    index = 0
    for t0, t1, label_id in record.label_regions():
        if label_id == IGNORE_LABEL:
            continue
        span = t1 - t0
        if span < window_s:
            continue
        n_windows = int(np.floor((span - window_s) / slide_s)) + 1
        for k in range(n_windows):
            start = t0 + k * slide_s
            slices = {}
            for modality in MODALITIES:
                stream = record.streams[modality]
                rate = stream.sample_rate
                i0 = round((start - stream.start_time) * rate)
                n = round(window_s * rate)
                if i0 < 0 or i0 + n > len(stream):
                    slices = None
                    break
                slices[modality] = np.asarray(stream.samples[i0 : i0 + n])
            if slices is None:
                continue
            windows.append(
                SensorWindow(
                    subject_id=record.subject_id,
                    window_index=index,
                    start_time=start,
                    slices=slices,
                    label=label3(label_id),
                    duration_s=window_s,
                )
            )
            index += 1
    return windows


def segment_records(records, window_s=WINDOW_S, slide_s=SLIDE_S, filters=DEFAULT_FILTERS):
    """Filter then segment every record; returns one flat window list."""
    windows = []
    for record in records:
        conditioned = apply_filters(record, filters) if filters is not None else record
        windows.extend(segment(conditioned, window_s=window_s, slide_s=slide_s))
    return windows
