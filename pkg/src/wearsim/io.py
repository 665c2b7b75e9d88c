"""File formats and persistence.

Mesh sequences travel in a small custom binary container (magic "W2WM",
little-endian throughout) or as a directory of per-frame OBJ files
sharing one topology. Utility matrices are plain CSV so external tools
can read them. Patch sets, selection results, manifests and configs are
JSON; everything JSON goes through canonical_json so the CLI and the
service emit byte-identical payloads for identical values.

All writes are atomic: temp file in the target directory, then rename.
"""

from __future__ import annotations

import io as _stdio
import json
import hashlib
import os
import struct
import tempfile
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import (
    BadMagic,
    InvalidInput,
    IoFailure,
    MalformedTable,
    TopologyMismatch,
    TruncatedFile,
    UnreadablePath,
)
from .kinematics import ImuTrace
from .mesh import GravityConfig, MeshSequence, MeshTopology, SurfacePatch
from .sampling import DEFAULT_PATCH_COUNT, DEFAULT_SEED, PatchSet
from .sensor import SensorConfig
from .utility import EvalConfig, UtilityMatrix

MAGIC = b"W2WM"
VERSION = 1
_HEADER = struct.Struct("<4sIIIIf")  # magic, version, frames, vertices, faces, rate

DEFAULT_OBJ_FRAME_RATE = 30.0


# ---------------------------------------------------------------- atomic io

def atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except OSError as exc:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def read_bytes(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise UnreadablePath(f"cannot read {path}: {exc}") from exc


def read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UnreadablePath(f"cannot read {path}: {exc}") from exc


def canonical_json(obj) -> str:
    """The one JSON form used everywhere; keys sorted, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _parse_json(text: str, what: str) -> dict:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"malformed {what}: {exc}") from exc


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path) -> str:
    return sha256_bytes(read_bytes(path))


# ------------------------------------------------------------ mesh sequence

def write_mesh_sequence(seq: MeshSequence, path) -> None:
    header = _HEADER.pack(MAGIC, VERSION, seq.frame_count,
                          seq.topology.vertex_count, seq.topology.face_count,
                          seq.frame_rate)
    body = (seq.topology.faces.astype("<u4").tobytes()
            + seq.frames.astype("<f4").tobytes())
    atomic_write_bytes(path, header + body)


def _load_binary_sequence(data: bytes, path) -> MeshSequence:
    if len(data) < _HEADER.size:
        raise TruncatedFile(f"{path}: {len(data)} bytes is shorter than the header")
    magic, version, n_frames, n_verts, n_faces, rate = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BadMagic(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise BadMagic(f"{path}: unsupported version {version}")
    expect = _HEADER.size + 12 * n_faces + 12 * n_frames * n_verts
    if len(data) != expect:
        raise TruncatedFile(f"{path}: expected {expect} bytes, found {len(data)}")
    off = _HEADER.size
    faces = np.frombuffer(data, dtype="<u4", count=3 * n_faces, offset=off)
    off += 12 * n_faces
    frames = np.frombuffer(data, dtype="<f4", count=3 * n_frames * n_verts, offset=off)
    topo = MeshTopology(vertex_count=n_verts,
                        faces=faces.reshape(n_faces, 3).astype(np.int64))
    return MeshSequence(topology=topo, frame_rate=float(rate),
                        frames=frames.reshape(n_frames, n_verts, 3).astype(np.float64))


def _parse_obj(text: str, path) -> tuple:
    verts, faces = [], []
    for ln, line in enumerate(text.splitlines(), start=1):
        parts = line.split()
        if not parts or parts[0] not in ("v", "f"):
            continue
        if parts[0] == "v":
            if len(parts) < 4:
                raise InvalidInput(f"{path}:{ln}: vertex needs 3 coordinates")
            verts.append([float(parts[1]), float(parts[2]), float(parts[3])])
        else:
            if len(parts) != 4:
                raise InvalidInput(f"{path}:{ln}: only triangle faces supported")
            # tokens may carry /vt/vn suffixes; indices are 1-based
            faces.append([int(p.split("/")[0]) - 1 for p in parts[1:]])
    if not verts or not faces:
        raise InvalidInput(f"{path}: no usable geometry")
    return np.array(verts, dtype=np.float64), np.array(faces, dtype=np.int64)


def _load_obj_sequence(dirpath: Path, frame_rate: Optional[float]) -> MeshSequence:
    files = sorted(dirpath.glob("*.obj"))
    if not files:
        raise InvalidInput(f"{dirpath}: no .obj frames found")
    first_v, first_f = _parse_obj(read_text(files[0]), files[0])
    frames = [first_v]
    for f in files[1:]:
        v, fc = _parse_obj(read_text(f), f)
        if v.shape != first_v.shape:
            raise TopologyMismatch(
                f"{f}: {v.shape[0]} vertices, expected {first_v.shape[0]}")
        if fc.shape != first_f.shape or not np.array_equal(fc, first_f):
            raise TopologyMismatch(f"{f}: face list differs from {files[0]}")
        frames.append(v)
    topo = MeshTopology(vertex_count=first_v.shape[0], faces=first_f)
    return MeshSequence(topology=topo,
                        frame_rate=frame_rate or DEFAULT_OBJ_FRAME_RATE,
                        frames=np.stack(frames))


def load_mesh_sequence(path, frame_rate: Optional[float] = None) -> MeshSequence:
    """Binary container file, or a directory of same-topology OBJ frames.

    frame_rate applies only to OBJ directories (the container stores its
    own); None falls back to DEFAULT_OBJ_FRAME_RATE.
    """
    p = Path(path)
    if not p.exists():
        raise UnreadablePath(f"no such path: {p}")
    if p.is_dir():
        return _load_obj_sequence(p, frame_rate)
    return _load_binary_sequence(read_bytes(p), p)


# ------------------------------------------------------------ utility matrix

def write_utility_matrix(matrix: UtilityMatrix, path) -> None:
    lines = ["location," + ",".join(str(a) for a in matrix.activities)]
    for loc, row in zip(matrix.locations, matrix.f1):
        lines.append(f"{loc}," + ",".join(f"{v:.6f}" for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_utility_matrix(path) -> UtilityMatrix:
    lines = [ln for ln in read_text(path).splitlines() if ln.strip()]
    if not lines:
        raise MalformedTable(f"{path}: empty table")
    header = lines[0].split(",")
    if header[0] != "location" or len(header) < 2:
        raise MalformedTable(f"{path}: bad header {lines[0]!r}")
    activities = tuple(header[1:])
    locations, rows = [], []
    for ln in lines[1:]:
        cells = ln.split(",")
        if len(cells) != len(header):
            raise MalformedTable(f"{path}: row width {len(cells)} != {len(header)}")
        try:
            locations.append(int(cells[0]))
            rows.append([float(c) for c in cells[1:]])
        except ValueError as exc:
            raise MalformedTable(f"{path}: non-numeric cell in {ln!r}") from exc
    if not rows:
        raise MalformedTable(f"{path}: no data rows")
    try:
        return UtilityMatrix(f1=np.array(rows), locations=tuple(locations),
                             activities=activities)
    except InvalidInput as exc:
        raise MalformedTable(f"{path}: {exc}") from exc


# ------------------------------------------------------------------ patches

def patch_set_to_dict(patches: PatchSet, rest_vertices: np.ndarray) -> dict:
    verts = np.asarray(rest_vertices, dtype=np.float64)
    out = []
    for patch in patches.patches:
        tri = verts[list(patch.vertices)]
        centroid = tri.mean(axis=0)
        out.append({
            "id": patch.id,
            "vertices": [int(v) for v in patch.vertices],
            "label": patch.label,
            "centroid": [float(c) for c in centroid],
        })
    return {"seed": patches.seed,
            "centers": [int(c) for c in patches.centers],
            "patches": out}


def save_patch_set(patches: PatchSet, rest_vertices: np.ndarray, path) -> None:
    atomic_write_text(path, canonical_json(patch_set_to_dict(patches, rest_vertices)))


def load_patch_set(path) -> tuple:
    """Returns (PatchSet, {patch id: rest centroid (3,) array})."""
    doc = _parse_json(read_text(path), "patch set")
    try:
        patches = tuple(
            SurfacePatch(id=int(p["id"]), vertices=tuple(int(v) for v in p["vertices"]),
                         label=p.get("label"))
            for p in doc["patches"])
        pset = PatchSet(centers=tuple(int(c) for c in doc["centers"]),
                        patches=patches, seed=int(doc["seed"]))
        centroids = {int(p["id"]): np.array(p["centroid"], dtype=np.float64)
                     for p in doc["patches"]}
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"{path}: malformed patch set: {exc}") from exc
    return pset, centroids


# ---------------------------------------------------------------- selection

def selection_to_dict(result, request=None) -> dict:
    doc = {
        "selected": [int(v) for v in result.selected],
        "coverage": float(result.coverage),
        "feasible": bool(result.feasible),
        "per_activity_best": {
            str(a): {"location": int(loc), "f1": float(f1)}
            for a, (loc, f1) in result.per_activity_best.items()},
    }
    if request is not None:
        doc["request"] = {
            "tau": float(request.tau),
            "excluded": sorted(int(v) for v in request.excluded),
            "max_sensors": (None if request.max_sensors is None
                            else int(request.max_sensors)),
        }
    return doc


def save_selection(result, request, path) -> None:
    atomic_write_text(path, canonical_json(selection_to_dict(result, request)))


def load_selection(path) -> dict:
    return _parse_json(read_text(path), "selection result")


# ------------------------------------------------------------------- traces

def save_sequence_traces(dirpath, meta: dict, traces) -> None:
    """One .npy per patch (columns t, ax, ay, az, gx, gy, gz) plus _meta.json."""
    dirpath = Path(dirpath)
    dirpath.mkdir(parents=True, exist_ok=True)
    ids = []
    for trace in traces:
        ids.append(trace.patch_id)
        arr = np.hstack([trace.times[:, None], trace.accel, trace.gyro])
        path = dirpath / f"patch_{trace.patch_id:05d}.npy"
        buf = _stdio.BytesIO()
        np.save(buf, np.ascontiguousarray(arr, dtype="<f8"))
        atomic_write_bytes(path, buf.getvalue())
    doc = dict(meta)
    doc["patch_ids"] = [int(i) for i in ids]
    atomic_write_text(dirpath / "_meta.json", canonical_json(doc))


def load_sequence_traces(dirpath) -> tuple:
    """Returns (meta dict, list of ImuTrace in patch id order)."""
    dirpath = Path(dirpath)
    meta = _parse_json(read_text(dirpath / "_meta.json"), "trace metadata")
    traces = []
    try:
        rate = float(meta["rate"])
        for pid in meta["patch_ids"]:
            arr = np.load(dirpath / f"patch_{pid:05d}.npy")
            traces.append(ImuTrace(patch_id=int(pid), rate=rate,
                                   times=arr[:, 0], accel=arr[:, 1:4],
                                   gyro=arr[:, 4:7]))
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"{dirpath}: malformed traces: {exc}") from exc
    except OSError as exc:
        raise UnreadablePath(f"{dirpath}: {exc}") from exc
    return meta, traces


# ----------------------------------------------------------------- manifest

@dataclass(frozen=True)
class ManifestEntry:
    path: str          # absolute after load
    activity: str
    sequence_id: str
    subject: Optional[str] = None
    split: Optional[str] = None


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple
    frame_rate: Optional[float] = None

    def activities(self) -> list:
        return sorted({e.activity for e in self.entries})


def load_manifest(path) -> DatasetManifest:
    p = Path(path)
    doc = _parse_json(read_text(p), "manifest")
    seqs = doc.get("sequences")
    if not isinstance(seqs, list) or not seqs:
        raise InvalidInput(f"{p}: manifest needs a non-empty 'sequences' list")
    entries = []
    for i, s in enumerate(seqs):
        try:
            rel = s["path"]
            activity = s["activity"]
        except (KeyError, TypeError) as exc:
            raise InvalidInput(f"{p}: sequence {i} needs path and activity") from exc
        if not activity:
            raise InvalidInput(f"{p}: sequence {i} has an empty activity label")
        full = (p.parent / rel).resolve()
        if not full.exists():
            raise UnreadablePath(f"{p}: sequence path {rel} does not resolve")
        entries.append(ManifestEntry(
            path=str(full), activity=str(activity),
            sequence_id=str(s.get("id", Path(rel).stem)),
            subject=s.get("subject"), split=s.get("split")))
    ids = [e.sequence_id for e in entries]
    if len(set(ids)) != len(ids):
        raise InvalidInput(f"{p}: duplicate sequence ids")
    manifest = DatasetManifest(entries=tuple(entries),
                               frame_rate=doc.get("frame_rate"))
    if len(manifest.activities()) < 2:
        raise InvalidInput(f"{p}: need >= 2 distinct activities")
    return manifest


# ------------------------------------------------------------------- config

@dataclass(frozen=True)
class RunConfig:
    n_patches: int = DEFAULT_PATCH_COUNT
    fps_seed: int = DEFAULT_SEED
    gravity: GravityConfig = GravityConfig()
    sensor: SensorConfig = SensorConfig()
    eval: EvalConfig = EvalConfig()
    accel_frame: str = "local"
    tau: float = 0.9
    excluded: tuple = ()
    max_sensors: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "n_patches": self.n_patches,
            "fps_seed": self.fps_seed,
            "gravity": [float(v) for v in self.gravity.g],
            "sensor": {
                "output_rate": self.sensor.output_rate,
                "filter_cutoff": self.sensor.filter_cutoff,
                "filter_order": self.sensor.filter_order,
                "accel_noise_std": self.sensor.accel_noise_std,
                "gyro_noise_std": self.sensor.gyro_noise_std,
                "accel_bias_walk_std": self.sensor.accel_bias_walk_std,
                "gyro_bias_walk_std": self.sensor.gyro_bias_walk_std,
                "misalignment": [[float(v) for v in row]
                                 for row in self.sensor.misalignment],
                "rng_seed": self.sensor.rng_seed,
            },
            "eval": {
                "window_s": self.eval.window_s,
                "overlap_frac": self.eval.overlap_frac,
                "spectral_cutoff_hz": self.eval.spectral_cutoff_hz,
                "folds": self.eval.folds,
                "l2": self.eval.l2,
                "iterations": self.eval.iterations,
                "learning_rate": self.eval.learning_rate,
            },
            "accel_frame": self.accel_frame,
            "tau": self.tau,
            "excluded": [int(v) for v in self.excluded],
            "max_sensors": self.max_sensors,
        }


def run_config_from_dict(doc: dict) -> RunConfig:
    base = RunConfig()
    try:
        sensor_doc = dict(doc.get("sensor", {}))
        if "misalignment" in sensor_doc and sensor_doc["misalignment"] is not None:
            sensor_doc["misalignment"] = np.array(sensor_doc["misalignment"],
                                                  dtype=np.float64)
        sensor = SensorConfig(**{**_sensor_defaults(), **sensor_doc})
        eval_cfg = EvalConfig(**{**_eval_defaults(), **doc.get("eval", {})})
        gravity = GravityConfig(g=np.array(doc["gravity"], dtype=np.float64)) \
            if "gravity" in doc else base.gravity
        return RunConfig(
            n_patches=int(doc.get("n_patches", base.n_patches)),
            fps_seed=int(doc.get("fps_seed", base.fps_seed)),
            gravity=gravity, sensor=sensor, eval=eval_cfg,
            accel_frame=doc.get("accel_frame", base.accel_frame),
            tau=float(doc.get("tau", base.tau)),
            excluded=tuple(int(v) for v in doc.get("excluded", ())),
            max_sensors=(None if doc.get("max_sensors") is None
                         else int(doc["max_sensors"])))
    except (TypeError, ValueError) as exc:
        raise InvalidInput(f"malformed run config: {exc}") from exc


def _sensor_defaults() -> dict:
    d = SensorConfig()
    return {f: getattr(d, f) for f in (
        "output_rate", "filter_cutoff", "filter_order", "accel_noise_std",
        "gyro_noise_std", "accel_bias_walk_std", "gyro_bias_walk_std",
        "rng_seed")}


def _eval_defaults() -> dict:
    d = EvalConfig()
    return {f: getattr(d, f) for f in (
        "window_s", "overlap_frac", "spectral_cutoff_hz", "folds", "l2",
        "iterations", "learning_rate")}


def load_run_config(path=None) -> RunConfig:
    if path is None:
        return RunConfig()
    return run_config_from_dict(_parse_json(read_text(path), "run config"))


def override_seed(cfg: RunConfig, seed: int) -> RunConfig:
    """One seed to steer both sampling and the sensor noise streams."""
    sensor = replace(cfg.sensor, rng_seed=seed,
                     misalignment=None)  # re-derive from the new seed
    return replace(cfg, fps_seed=seed, sensor=sensor)
