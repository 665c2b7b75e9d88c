"""Windowing and hand-rolled statistical features for 6-axis traces.

Feature layout (54 values): for each channel ax..gz, 8 statistics in
order [mean, std, min, max, rms, mean |first diff|, skew proxy,
spectral energy in [0, cutoff]], then 6 Pearson correlations
[a_xy, a_yz, a_xz, g_xy, g_yz, g_xz]. Channel-major: all 8 stats of ax,
then ay, etc. Energies are |rfft|^2 sums normalized by window length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyTrace, InvalidInput
from .kinematics import ImuTrace

FEATURES_PER_CHANNEL = 8
CHANNEL_COUNT = 6
CORRELATION_COUNT = 6
FEATURE_DIM = CHANNEL_COUNT * FEATURES_PER_CHANNEL + CORRELATION_COUNT  # 54

DEFAULT_WINDOW_S = 2.0
DEFAULT_OVERLAP = 0.5
DEFAULT_SPECTRAL_CUTOFF_HZ = 10.0

_STD_EPS = 1e-12


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray   # (FEATURE_DIM,)
    window_start: float  # seconds
    activity: str

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if values.shape != (FEATURE_DIM,):
            raise InvalidInput(f"expected {FEATURE_DIM} features, got {values.shape}")
        if not np.isfinite(values).all():
            raise InvalidInput("non-finite feature value")


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def window_trace(trace: ImuTrace, window_s: float = DEFAULT_WINDOW_S,
                 overlap_frac: float = DEFAULT_OVERLAP) -> list:
    """Fixed-length windows as ImuTrace slices; may be empty, never partial."""
    if not (window_s > 0):
        raise InvalidInput(f"window_s must be > 0, got {window_s}")
    if not (0 <= overlap_frac < 1):
        raise InvalidInput(f"overlap_frac must be in [0, 1), got {overlap_frac}")
    w = _round_half_up(window_s * trace.rate)
    if w < 1 or len(trace) < w:
        return []
    stride = max(1, _round_half_up(w * (1.0 - overlap_frac)))
    out = []
    for start in range(0, len(trace) - w + 1, stride):
        out.append(ImuTrace(patch_id=trace.patch_id, rate=trace.rate,
                            times=trace.times[start:start + w],
                            accel=trace.accel[start:start + w],
                            gyro=trace.gyro[start:start + w]))
    return out


def _channel_stats(x: np.ndarray, rate: float, cutoff_hz: float) -> list:
    mean = float(np.mean(x))
    std = float(np.std(x))
    rms = float(np.sqrt(np.mean(x * x)))
    if x.shape[0] >= 2:
        madiff = float(np.mean(np.abs(np.diff(x))))
    else:
        madiff = 0.0
    if std < _STD_EPS:
        skew = 0.0
    else:
        skew = float(np.mean((x - mean) ** 3) / std ** 3)
    spectrum = np.fft.rfft(x)
    freqs = np.fft.rfftfreq(x.shape[0], d=1.0 / rate)
    band = freqs <= cutoff_hz
    energy = float(np.sum(np.abs(spectrum[band]) ** 2) / x.shape[0])
    return [mean, std, float(np.min(x)), float(np.max(x)), rms, madiff, skew, energy]


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    sx, sy = float(np.std(x)), float(np.std(y))
    if sx < _STD_EPS or sy < _STD_EPS:
        return 0.0
    cov = float(np.mean((x - np.mean(x)) * (y - np.mean(y))))
    return cov / (sx * sy)


def extract_features(window: ImuTrace,
                     cutoff_hz: float = DEFAULT_SPECTRAL_CUTOFF_HZ) -> FeatureVector:
    """54-dimensional summary of one window; activity label filled by callers."""
    if len(window) == 0:
        raise EmptyTrace("cannot featurize an empty window")
    data = window.channel_matrix()
    values = []
    for c in range(CHANNEL_COUNT):
        values.extend(_channel_stats(data[:, c], window.rate, cutoff_hz))
    for base in (0, 3):  # accel triple, then gyro triple
        values.append(_pearson(data[:, base + 0], data[:, base + 1]))
        values.append(_pearson(data[:, base + 1], data[:, base + 2]))
        values.append(_pearson(data[:, base + 0], data[:, base + 2]))
    return FeatureVector(values=np.array(values), window_start=float(window.times[0]),
                         activity="")


def labeled_features(trace: ImuTrace, activity: str,
                     window_s: float = DEFAULT_WINDOW_S,
                     overlap_frac: float = DEFAULT_OVERLAP,
                     cutoff_hz: float = DEFAULT_SPECTRAL_CUTOFF_HZ) -> list:
    """window_trace + extract_features with the activity label attached."""
    out = []
    for win in window_trace(trace, window_s, overlap_frac):
        fv = extract_features(win, cutoff_hz)
        out.append(FeatureVector(values=fv.values, window_start=fv.window_start,
                                 activity=activity))
    return out
