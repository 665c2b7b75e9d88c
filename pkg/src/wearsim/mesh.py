"""Triangulated body-mesh containers.

A mesh sequence is the kinematic ground truth: a fixed topology plus one
vertex-position array per frame, in world coordinates (meters). Frames are
uniformly spaced at 1/frame_rate seconds; per-frame timestamps are not
supported.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput

# Cross-product norm below this (in m^2) means a collapsed/collinear patch.
DEGENERATE_AREA_EPS = 1e-12


@dataclass(frozen=True)
class MeshTopology:
    """Vertex count plus triangle list; shared by every frame of a sequence."""

    vertex_count: int
    faces: np.ndarray  # (F, 3) int

    def __post_init__(self):
        faces = np.asarray(self.faces, dtype=np.int64)
        object.__setattr__(self, "faces", faces)
        if self.vertex_count < 3:
            raise InvalidInput(f"vertex_count must be >= 3, got {self.vertex_count}")
        if faces.ndim != 2 or faces.shape[1] != 3 or faces.shape[0] == 0:
            raise InvalidInput("faces must be a non-empty (F, 3) array")
        if faces.min() < 0 or faces.max() >= self.vertex_count:
            raise InvalidInput("face index out of range")
        if ((faces[:, 0] == faces[:, 1]) | (faces[:, 1] == faces[:, 2])
                | (faces[:, 0] == faces[:, 2])).any():
            raise InvalidInput("face with repeated vertex index")

    @property
    def face_count(self) -> int:
        return int(self.faces.shape[0])


@dataclass(frozen=True)
class MeshSequence:
    """Time-indexed vertex positions over a fixed topology."""

    topology: MeshTopology
    frame_rate: float  # Hz; dt = 1/frame_rate
    frames: np.ndarray  # (T, V, 3) float, meters, world coordinates

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        object.__setattr__(self, "frames", frames)
        if not (self.frame_rate > 0):
            raise InvalidInput(f"frame_rate must be > 0, got {self.frame_rate}")
        if frames.ndim != 3 or frames.shape[2] != 3:
            raise InvalidInput("frames must be a (T, V, 3) array")
        if frames.shape[1] != self.topology.vertex_count:
            raise InvalidInput(
                f"frames carry {frames.shape[1]} vertices, topology expects "
                f"{self.topology.vertex_count}")
        if frames.shape[0] < 3:
            raise InvalidInput("need at least 3 frames (second differences)")
        if not np.isfinite(frames).all():
            raise InvalidInput("non-finite vertex coordinate")

    @property
    def frame_count(self) -> int:
        return int(self.frames.shape[0])

    @property
    def dt(self) -> float:
        return 1.0 / self.frame_rate


@dataclass(frozen=True)
class SurfacePatch:
    """One virtual sensor site: a triangle of three mesh vertex indices."""

    id: int
    vertices: tuple[int, int, int]
    label: str | None = None

    def __post_init__(self):
        v = tuple(int(i) for i in self.vertices)
        object.__setattr__(self, "vertices", v)
        if len(set(v)) != 3:
            raise InvalidInput(f"patch {self.id}: vertex indices must be distinct")
        if min(v) < 0:
            raise InvalidInput(f"patch {self.id}: negative vertex index")

    def validate_for(self, topology: MeshTopology) -> None:
        if max(self.vertices) >= topology.vertex_count:
            raise InvalidInput(
                f"patch {self.id}: vertex index out of range for topology")


@dataclass(frozen=True)
class GravityConfig:
    """World-frame gravity vector, m/s^2. Default points along -y."""

    g: np.ndarray = field(default_factory=lambda: np.array([0.0, -9.81, 0.0]))

    def __post_init__(self):
        g = np.asarray(self.g, dtype=np.float64).reshape(3)
        object.__setattr__(self, "g", g)
        if not np.isfinite(g).all():
            raise InvalidInput("gravity vector must be finite")
