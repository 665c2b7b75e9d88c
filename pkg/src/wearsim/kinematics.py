"""Per-patch rigid kinematics: orientation frames, angular velocity, and
gravity-inclusive acceleration derived from a mesh sequence.

Conventions used throughout:
  - patch position p(t) = (v1 + v2 + v3) / 3 (triangle centroid)
  - local frame R(t) = [e1 e2 e3] (columns, local -> world) with
    e1 = normalize(v2 - v1), e3 = unit triangle normal, e2 = e3 x e1
  - angular velocity from the relative rotation R(t) R(t-dt)^T, which is a
    world-frame quantity; it is what the gyro channel carries
  - accelerometer output defaults to the sensor-local frame,
    R^T (a_lin + g); mode "mixed" keeps the linear term in world
    coordinates (a_lin + R^T g) for callers that want that literal form
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import (
    DegenerateTriangle,
    InvalidInput,
    NotARotation,
    TooShortSequence,
)
from .mesh import DEGENERATE_AREA_EPS, GravityConfig, MeshSequence, SurfacePatch

# Accelerometer output frame modes.
ACCEL_FRAME_LOCAL = "local"   # R^T (a_lin + g): both terms in the sensor frame
ACCEL_FRAME_MIXED = "mixed"   # a_lin + R^T g: world-frame linear term (literal form)
ACCEL_FRAMES = (ACCEL_FRAME_LOCAL, ACCEL_FRAME_MIXED)

_SMALL_ANGLE = 1e-7
_NEAR_PI = np.pi - 1e-4
_ORTHO_TOL = 1e-6


@dataclass(frozen=True)
class PatchFrame:
    """Pose of one patch at one frame."""

    position: np.ndarray  # (3,) meters
    normal: np.ndarray    # (3,) unit
    rotation: np.ndarray  # (3, 3) orthonormal, local -> world, det +1


@dataclass(frozen=True)
class ImuSample:
    t: float
    accel: np.ndarray  # (3,) m/s^2
    gyro: np.ndarray   # (3,) rad/s


@dataclass(frozen=True)
class ImuTrace:
    """Uniformly sampled 6-axis trace for one patch.

    Stored as arrays for speed; `samples` iterates ImuSample views.
    """

    patch_id: int
    rate: float
    times: np.ndarray  # (n,) seconds, strictly increasing, uniform 1/rate
    accel: np.ndarray  # (n, 3)
    gyro: np.ndarray   # (n, 3)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        accel = np.asarray(self.accel, dtype=np.float64)
        gyro = np.asarray(self.gyro, dtype=np.float64)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "accel", accel)
        object.__setattr__(self, "gyro", gyro)
        if not (self.rate > 0):
            raise InvalidInput(f"rate must be > 0, got {self.rate}")
        n = times.shape[0]
        if accel.shape != (n, 3) or gyro.shape != (n, 3):
            raise InvalidInput("accel/gyro must be (n, 3) arrays matching times")
        if not (np.isfinite(times).all() and np.isfinite(accel).all()
                and np.isfinite(gyro).all()):
            raise InvalidInput("non-finite sample value")
        if n >= 2:
            gaps = np.diff(times)
            if (gaps <= 0).any():
                raise InvalidInput("timestamps must be strictly increasing")
            if np.abs(gaps - 1.0 / self.rate).max() > 1e-9:
                raise InvalidInput("timestamps must be uniform at 1/rate")

    def __len__(self) -> int:
        return int(self.times.shape[0])

    @property
    def samples(self) -> Iterator[ImuSample]:
        for k in range(len(self)):
            yield ImuSample(float(self.times[k]), self.accel[k], self.gyro[k])

    def channel_matrix(self) -> np.ndarray:
        """(n, 6) array [ax, ay, az, gx, gy, gz]."""
        return np.hstack([self.accel, self.gyro])


def _frames_from_triangles(tri: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Positions, normals, rotations for a (T, 3, 3) triangle-vertex stack.

    Raises DegenerateTriangle naming the first offending frame index.
    """
    v1, v2, v3 = tri[:, 0], tri[:, 1], tri[:, 2]
    position = (v1 + v2 + v3) / 3.0
    edge1 = v2 - v1
    cross = np.cross(edge1, v3 - v1)
    cross_norm = np.linalg.norm(cross, axis=1)
    bad = cross_norm < DEGENERATE_AREA_EPS
    if bad.any():
        frame = int(np.argmax(bad))
        raise DegenerateTriangle(
            f"degenerate patch triangle at frame {frame} "
            f"(cross norm {cross_norm[frame]:.3e})")
    e3 = cross / cross_norm[:, None]
    e1 = edge1 / np.linalg.norm(edge1, axis=1)[:, None]
    e2 = np.cross(e3, e1)
    rotation = np.stack([e1, e2, e3], axis=2)  # columns
    return position, e3, rotation


def patch_frame(frame_vertices: np.ndarray, patch: SurfacePatch) -> PatchFrame:
    """Local frame of `patch` given one frame's (V, 3) vertex positions."""
    verts = np.asarray(frame_vertices, dtype=np.float64)
    if verts.ndim != 2 or verts.shape[1] != 3:
        raise InvalidInput("frame_vertices must be (V, 3)")
    if max(patch.vertices) >= verts.shape[0]:
        raise InvalidInput(f"patch {patch.id}: vertex index out of range")
    tri = verts[list(patch.vertices)][None]
    position, normal, rotation = _frames_from_triangles(tri)
    return PatchFrame(position=position[0], normal=normal[0], rotation=rotation[0])


def _check_rotations(R: np.ndarray) -> None:
    eye = np.eye(3)
    gram = np.einsum("nji,njk->nik", R, R)  # R^T R
    if np.abs(gram - eye).max() > _ORTHO_TOL:
        raise NotARotation("matrix is not orthonormal within 1e-6")
    if np.abs(np.linalg.det(R) - 1.0).max() > _ORTHO_TOL:
        raise NotARotation("determinant differs from +1")


def _rotation_log_batch(R: np.ndarray) -> np.ndarray:
    """Axis-angle (theta * unit axis) for a (N, 3, 3) rotation stack."""
    _check_rotations(R)
    n = R.shape[0]
    trace = np.einsum("nii->n", R)
    theta = np.arccos(np.clip((trace - 1.0) / 2.0, -1.0, 1.0))
    skew = np.stack(
        [R[:, 2, 1] - R[:, 1, 2], R[:, 0, 2] - R[:, 2, 0], R[:, 1, 0] - R[:, 0, 1]],
        axis=1)
    out = np.empty((n, 3))

    small = theta < _SMALL_ANGLE
    near_pi = theta > _NEAR_PI
    main = ~(small | near_pi)

    # First-order extraction; exact zero for a symmetric (identity-like) input.
    out[small] = skew[small] / 2.0
    if main.any():
        scale = theta[main] / (2.0 * np.sin(theta[main]))
        out[main] = skew[main] * scale[:, None]
    for i in np.nonzero(near_pi)[0]:
        out[i] = _log_near_pi(R[i], theta[i], skew[i])
    return out


def _log_near_pi(R: np.ndarray, theta: float, skew: np.ndarray) -> np.ndarray:
    # The symmetric part minus cos(theta) I equals (1 - cos(theta)) nn^T,
    # so its dominant column is parallel to the axis without the O(pi-theta)
    # contamination the skew part would add. The skew still fixes the sign
    # while theta < pi, with a deterministic tie-break (largest-magnitude
    # component positive) at exactly pi.
    cos_t = (np.trace(R) - 1.0) / 2.0
    S = (R + R.T) / 2.0 - cos_t * np.eye(3)
    i = int(np.argmax(np.diag(S)))
    axis = S[:, i] / np.linalg.norm(S[:, i])
    if np.linalg.norm(skew) > 1e-12:
        if float(np.dot(axis, skew)) < 0.0:
            axis = -axis
    else:
        j = int(np.argmax(np.abs(axis)))
        if axis[j] < 0.0:
            axis = -axis
    return theta * axis


def rotation_log(delta_R: np.ndarray) -> np.ndarray:
    """Axis-angle vector (theta * axis, theta in [0, pi]) of a rotation matrix."""
    R = np.asarray(delta_R, dtype=np.float64)
    if R.shape != (3, 3):
        raise InvalidInput("rotation must be 3x3")
    return _rotation_log_batch(R[None])[0]


def angular_velocity(R_prev: np.ndarray, R_curr: np.ndarray, dt: float) -> np.ndarray:
    """World-frame angular velocity from two consecutive local frames."""
    if not (dt > 0):
        raise InvalidInput(f"dt must be > 0, got {dt}")
    delta = np.asarray(R_curr, dtype=np.float64) @ np.asarray(R_prev, dtype=np.float64).T
    return rotation_log(delta) / dt


def linear_acceleration(p_prev: np.ndarray, p_curr: np.ndarray, p_next: np.ndarray,
                        dt: float) -> np.ndarray:
    """Central second difference of the centroid position (exact on quadratics)."""
    if not (dt > 0):
        raise InvalidInput(f"dt must be > 0, got {dt}")
    p_prev = np.asarray(p_prev, dtype=np.float64)
    p_curr = np.asarray(p_curr, dtype=np.float64)
    p_next = np.asarray(p_next, dtype=np.float64)
    return (p_next - 2.0 * p_curr + p_prev) / (dt * dt)


def imu_accel(a_local: np.ndarray, rotation: np.ndarray, gravity: GravityConfig,
              frame: str = ACCEL_FRAME_LOCAL) -> np.ndarray:
    """Accelerometer reading: linear acceleration plus projected gravity.

    frame="local" expresses both terms in the sensor frame, R^T (a + g);
    frame="mixed" keeps the linear term in world coordinates, a + R^T g.
    No sign flip is applied anywhere: a resting sensor reads R^T g.
    """
    if frame not in ACCEL_FRAMES:
        raise InvalidInput(f"unknown accel frame {frame!r}")
    a = np.asarray(a_local, dtype=np.float64)
    R = np.asarray(rotation, dtype=np.float64)
    g_local = R.T @ gravity.g
    if frame == ACCEL_FRAME_LOCAL:
        return R.T @ a + g_local
    return a + g_local


def synthesize_imu(seq: MeshSequence, patch: SurfacePatch, gravity: GravityConfig,
                   accel_frame: str = ACCEL_FRAME_LOCAL) -> ImuTrace:
    """Clean 6-axis trace for one patch over a mesh sequence.

    Interior frames 1..T-2 each yield one sample (central differences need
    both neighbors); timestamps start at frame index 1. Gyro comes from
    consecutive frame rotations, accel from centroid second differences
    plus projected gravity.
    """
    if accel_frame not in ACCEL_FRAMES:
        raise InvalidInput(f"unknown accel frame {accel_frame!r}")
    if seq.frame_count < 3:
        raise TooShortSequence(
            f"need >= 3 frames, got {seq.frame_count}")
    patch.validate_for(seq.topology)

    tri = seq.frames[:, list(patch.vertices), :]  # (T, 3, 3)
    position, _, rotation = _frames_from_triangles(tri)
    dt = seq.dt

    # gyro at frame k from R_k relative to R_{k-1}, k = 1..T-2
    R_curr = rotation[1:-1]
    R_prev = rotation[:-2]
    delta = np.einsum("nij,nkj->nik", R_curr, R_prev)  # R_k R_{k-1}^T
    gyro = _rotation_log_batch(delta) / dt

    a_lin = (position[2:] - 2.0 * position[1:-1] + position[:-2]) / (dt * dt)
    g_local = np.einsum("nji,j->ni", R_curr, gravity.g)  # R^T g per frame
    if accel_frame == ACCEL_FRAME_LOCAL:
        accel = np.einsum("nji,nj->ni", R_curr, a_lin) + g_local
    else:
        accel = a_lin + g_local

    times = np.arange(1, seq.frame_count - 1, dtype=np.float64) / seq.frame_rate
    return ImuTrace(patch_id=patch.id, rate=seq.frame_rate,
                    times=times, accel=accel, gyro=gyro)
