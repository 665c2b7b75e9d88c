"""Sensor degradation model: band-limit, resample, then corrupt.

The stage order is fixed: low-pass at the source rate (anti-aliasing),
linear resampling to the output rate, then misalignment + bias walk +
white noise injected at the output rate, which is where a real ADC adds
them. Every random draw comes from a stream keyed by
(rng_seed, patch_id, channel) so per-patch work parallelizes without
losing determinism.

Channel codes: 0 accel noise, 1 gyro noise, 2 accel bias, 3 gyro bias,
4 misalignment axis (no patch in the key; the misalignment is fixed
per config, not per patch).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.signal import butter, filtfilt

from .errors import BadCutoff, EmptyTrace, InvalidInput
from .kinematics import ImuTrace

CH_ACCEL_NOISE = 0
CH_GYRO_NOISE = 1
CH_ACCEL_BIAS = 2
CH_GYRO_BIAS = 3
CH_MISALIGN_AXIS = 4


def _axis_angle_matrix(axis: np.ndarray, angle_rad: float) -> np.ndarray:
    a = np.asarray(axis, dtype=np.float64)
    a = a / np.linalg.norm(a)
    K = np.array([[0.0, -a[2], a[1]],
                  [a[2], 0.0, -a[0]],
                  [-a[1], a[0], 0.0]])
    return np.eye(3) + np.sin(angle_rad) * K + (1.0 - np.cos(angle_rad)) * (K @ K)


def seeded_misalignment(rng_seed: int, degrees: float = 1.0) -> np.ndarray:
    """Fixed small rotation about a random unit axis drawn from the seed."""
    rng = np.random.default_rng((rng_seed, CH_MISALIGN_AXIS))
    axis = rng.normal(size=3)
    while np.linalg.norm(axis) < 1e-12:
        axis = rng.normal(size=3)
    return _axis_angle_matrix(axis, np.deg2rad(degrees))


@dataclass(frozen=True)
class SensorConfig:
    """Degradation knobs; defaults sit in consumer-MEMS territory."""

    output_rate: float = 50.0
    filter_cutoff: Optional[float] = 10.0  # None disables the low-pass stage
    filter_order: int = 2
    accel_noise_std: float = 0.05          # m/s^2
    gyro_noise_std: float = 0.01           # rad/s
    accel_bias_walk_std: float = 0.002     # m/s^2 per sqrt(s)
    gyro_bias_walk_std: float = 0.0005     # rad/s per sqrt(s)
    misalignment: Optional[np.ndarray] = None  # None -> 1 deg about seeded axis
    rng_seed: int = 0

    def __post_init__(self):
        if not (self.output_rate > 0):
            raise InvalidInput(f"output_rate must be > 0, got {self.output_rate}")
        if self.filter_cutoff is not None:
            if not (0 < self.filter_cutoff < self.output_rate / 2):
                raise BadCutoff(
                    f"cutoff {self.filter_cutoff} outside (0, {self.output_rate / 2})")
            if not (1 <= self.filter_order <= 8):
                raise InvalidInput(f"filter_order must be in 1..8, got {self.filter_order}")
        for name in ("accel_noise_std", "gyro_noise_std",
                     "accel_bias_walk_std", "gyro_bias_walk_std"):
            if getattr(self, name) < 0:
                raise InvalidInput(f"{name} must be >= 0")
        M = self.misalignment
        if M is None:
            M = seeded_misalignment(self.rng_seed)
        M = np.asarray(M, dtype=np.float64)
        if M.shape != (3, 3) or np.abs(M.T @ M - np.eye(3)).max() > 1e-9 \
                or abs(np.linalg.det(M) - 1.0) > 1e-9:
            raise InvalidInput("misalignment must be orthonormal with det +1")
        object.__setattr__(self, "misalignment", M)


def lowpass_filter(trace: ImuTrace, cutoff: float, order: int) -> ImuTrace:
    """Zero-phase Butterworth band-limiting; timestamps unchanged.

    Forward-backward application doubles the effective order and cancels
    group delay. Edges are handled by reflective padding of 3*order
    samples (capped so very short traces still filter).
    """
    if len(trace) == 0:
        raise EmptyTrace("cannot filter an empty trace")
    if not (0 < cutoff < trace.rate / 2):
        raise BadCutoff(f"cutoff {cutoff} outside (0, {trace.rate / 2})")
    if not (1 <= order <= 8):
        raise InvalidInput(f"order must be in 1..8, got {order}")
    b, a = butter(order, cutoff, btype="low", fs=trace.rate)
    padlen = min(3 * order, len(trace) - 1)
    data = filtfilt(b, a, trace.channel_matrix(), axis=0,
                    padtype="even", padlen=padlen)
    return ImuTrace(patch_id=trace.patch_id, rate=trace.rate, times=trace.times,
                    accel=data[:, :3], gyro=data[:, 3:])


def resample(trace: ImuTrace, target_rate: float) -> ImuTrace:
    """Linear interpolation onto a uniform grid at target_rate over [t0, t_last]."""
    if len(trace) < 2:
        raise EmptyTrace(f"need >= 2 samples to resample, got {len(trace)}")
    if not (target_rate > 0):
        raise InvalidInput(f"target_rate must be > 0, got {target_rate}")
    t0 = float(trace.times[0])
    span = float(trace.times[-1]) - t0
    # tiny slack so a grid point landing a float ulp past an integer count
    # does not drop a sample
    count = int(np.floor(span * target_rate + 1e-9)) + 1
    times = t0 + np.arange(count, dtype=np.float64) / target_rate
    src = trace.channel_matrix()
    data = np.empty((count, 6))
    for c in range(6):
        data[:, c] = np.interp(times, trace.times, src[:, c])
    return ImuTrace(patch_id=trace.patch_id, rate=target_rate, times=times,
                    accel=data[:, :3], gyro=data[:, 3:])


def add_noise(trace: ImuTrace, cfg: SensorConfig) -> ImuTrace:
    """out = M * clean + bias_k + eta_k per sample, per sensor group.

    bias is a Gaussian random walk with per-step std walk_std * sqrt(dt)
    and bias_0 = 0; eta is i.i.d. white noise. Each (patch, channel)
    pair has its own RNG stream.
    """
    if len(trace) == 0:
        raise EmptyTrace("cannot add noise to an empty trace")
    n = len(trace)
    dt = 1.0 / trace.rate
    M = cfg.misalignment

    def stream(channel: int) -> np.random.Generator:
        return np.random.default_rng((cfg.rng_seed, trace.patch_id, channel))

    def bias_walk(channel: int, walk_std: float) -> np.ndarray:
        steps = stream(channel).normal(0.0, walk_std * np.sqrt(dt), size=(n - 1, 3))
        return np.vstack([np.zeros((1, 3)), np.cumsum(steps, axis=0)])

    accel = trace.accel @ M.T \
        + bias_walk(CH_ACCEL_BIAS, cfg.accel_bias_walk_std) \
        + stream(CH_ACCEL_NOISE).normal(0.0, cfg.accel_noise_std, size=(n, 3))
    gyro = trace.gyro @ M.T \
        + bias_walk(CH_GYRO_BIAS, cfg.gyro_bias_walk_std) \
        + stream(CH_GYRO_NOISE).normal(0.0, cfg.gyro_noise_std, size=(n, 3))
    return ImuTrace(patch_id=trace.patch_id, rate=trace.rate, times=trace.times,
                    accel=accel, gyro=gyro)


def apply_sensor_model(trace: ImuTrace, cfg: SensorConfig) -> ImuTrace:
    """Full degradation chain: filter at source rate, resample, add noise."""
    out = trace
    if cfg.filter_cutoff is not None:
        out = lowpass_filter(out, cfg.filter_cutoff, cfg.filter_order)
    if cfg.output_rate != out.rate:
        out = resample(out, cfg.output_rate)
    return add_noise(out, cfg)
