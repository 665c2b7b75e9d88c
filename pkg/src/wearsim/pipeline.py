"""End-to-end orchestration: sample -> synth -> degrade -> eval -> select.

Stage outputs live under one workspace directory and every stage writes
a stamp file keyed by the sha256 of everything it consumed (input file
hashes, upstream stamp, parameters). A rerun whose stamp matches reuses
the existing outputs; results are identical to a cold run because the
stamp covers all inputs by content.

Noise seeding: add_noise streams are keyed (rng_seed, patch_id,
channel), so giving every recording its own derived rng_seed keeps
repeated recordings of the same pose from sharing noise. The
misalignment matrix intentionally does NOT vary per sequence: it models
how the sensor is mounted, which persists across recordings.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import io
from .errors import PipelineError, TopologyMismatch, UnknownActivity, WearsimError
from .kinematics import synthesize_imu
from .mesh import MeshSequence
from .sampling import PatchSet, sample_patches
from .selection import SelectionRequest, SelectionResult, greedy_select
from .sensor import apply_sensor_model
from .utility import LabeledTraceSet, TraceEntry, UtilityMatrix, utility_matrix

STAGE_SAMPLE = "sampling"
STAGE_SYNTH = "synthesis"
STAGE_DEGRADE = "degradation"
STAGE_EVAL = "evaluation"
STAGE_SELECT = "selection"


@dataclass(frozen=True)
class PipelineResult:
    workspace: str
    patches: PatchSet
    matrix: UtilityMatrix
    selection: SelectionResult


def derive_sequence_seed(base_seed: int, sequence_id: str) -> int:
    """Stable per-recording RNG seed; independent of manifest order."""
    digest = hashlib.sha256(f"{base_seed}:{sequence_id}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def _stamp_path(workspace: Path, stage: str) -> Path:
    return workspace / "stamps" / f"{stage}.json"


def _stamp_fresh(workspace: Path, stage: str, input_hash: str, outputs) -> bool:
    path = _stamp_path(workspace, stage)
    if not path.exists():
        return False
    try:
        doc = io._parse_json(io.read_text(path), "stamp")
    except WearsimError:
        return False
    if doc.get("input_hash") != input_hash:
        return False
    return all((workspace / out).exists() for out in outputs)


def _write_stamp(workspace: Path, stage: str, input_hash: str, outputs) -> None:
    io.atomic_write_text(_stamp_path(workspace, stage),
                         io.canonical_json({"input_hash": input_hash,
                                            "outputs": list(outputs)}))


def _hash_parts(*parts) -> str:
    h = hashlib.sha256()
    for p in parts:
        h.update(str(p).encode())
        h.update(b"\x00")
    return h.hexdigest()


def _check_topology(seq: MeshSequence, rest: MeshSequence, item: str) -> None:
    same = (seq.topology.vertex_count == rest.topology.vertex_count
            and np.array_equal(seq.topology.faces, rest.topology.faces))
    if not same:
        raise TopologyMismatch(f"{item}: topology differs from the rest sequence")


def _synth_one(args):
    entry, frame_rate, patches, gravity, accel_frame, out_dir = args
    try:
        seq = io.load_mesh_sequence(entry.path, frame_rate)
        traces = [synthesize_imu(seq, p, gravity, accel_frame)
                  for p in patches.patches]
        io.save_sequence_traces(
            Path(out_dir) / entry.sequence_id,
            {"activity": entry.activity, "subject": entry.subject,
             "sequence_id": entry.sequence_id, "rate": seq.frame_rate},
            traces)
    except WearsimError as exc:
        raise type(exc)(f"{entry.sequence_id}: {exc}") from exc
    return entry.sequence_id


def _degrade_one(args):
    seq_dir, out_dir, sensor_cfg, base_seed = args
    try:
        meta, traces = io.load_sequence_traces(seq_dir)
        cfg = replace(sensor_cfg,
                      rng_seed=derive_sequence_seed(base_seed, meta["sequence_id"]),
                      misalignment=sensor_cfg.misalignment)
        degraded = [apply_sensor_model(t, cfg) for t in traces]
        out_meta = dict(meta)
        out_meta["rate"] = cfg.output_rate
        io.save_sequence_traces(Path(out_dir) / meta["sequence_id"], out_meta,
                                degraded)
    except WearsimError as exc:
        raise type(exc)(f"{Path(seq_dir).name}: {exc}") from exc
    return meta["sequence_id"]


def _run_stage(tasks, worker, jobs: int, stage: str):
    # workers prefix their item id into the message; leaf error types
    # pickle across the pool, PipelineError itself does not
    try:
        if jobs > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                return list(pool.map(worker, tasks))
        return [worker(t) for t in tasks]
    except WearsimError as exc:
        raise PipelineError(stage=stage, item=None, cause=exc) from exc


def load_traceset(traces_dir, manifest: io.DatasetManifest) -> LabeledTraceSet:
    entries = []
    for m in manifest.entries:
        meta, traces = io.load_sequence_traces(Path(traces_dir) / m.sequence_id)
        for t in traces:
            entries.append(TraceEntry(trace=t, activity=m.activity,
                                      sequence_id=m.sequence_id,
                                      subject=m.subject))
    return LabeledTraceSet(entries=tuple(entries))


def run_pipeline(manifest_path, config: io.RunConfig, workspace,
                 jobs: int = 1,
                 progress: Optional[Callable[[str, float], None]] = None,
                 activities: Optional[list] = None) -> PipelineResult:
    """Full chain; every stage resumable via content-hash stamps.

    `activities` restricts evaluation + selection to a label subset
    (None = all). Sampling and synthesis are label-independent, so their
    cached outputs are shared across subsets.
    """
    def tick(stage, frac):
        if progress:
            progress(stage, frac)

    ws = Path(workspace)
    ws.mkdir(parents=True, exist_ok=True)
    manifest = io.load_manifest(manifest_path)
    # recorded so `serve` can rebuild or re-evaluate from the workspace alone
    io.atomic_write_text(ws / "run_config.json", io.canonical_json(
        {"manifest": str(Path(manifest_path).resolve()),
         "config": config.to_dict(), "jobs": jobs}))
    if activities is not None:
        activities = sorted(set(activities))
        keep = [e for e in manifest.entries if e.activity in activities]
        unknown = set(activities) - {e.activity for e in manifest.entries}
        if unknown:
            raise PipelineError(
                stage=STAGE_EVAL, item=None,
                cause=UnknownActivity(f"unknown activities {sorted(unknown)}"))
        manifest_eval = io.DatasetManifest(entries=tuple(keep),
                                           frame_rate=manifest.frame_rate)
    else:
        manifest_eval = manifest

    mesh_hashes = [io.sha256_file(e.path) for e in manifest.entries]
    cfg_doc = config.to_dict()

    # -------------------------------------------------------------- sample
    tick(STAGE_SAMPLE, 0.0)
    sample_hash = _hash_parts("sample", mesh_hashes[0], manifest.frame_rate,
                              config.n_patches, config.fps_seed)
    patches_file = "patches.json"
    rest_seq = io.load_mesh_sequence(manifest.entries[0].path, manifest.frame_rate)
    if _stamp_fresh(ws, STAGE_SAMPLE, sample_hash, [patches_file]):
        patches, _ = io.load_patch_set(ws / patches_file)
    else:
        try:
            patches = sample_patches(rest_seq.topology, rest_seq.frames[0],
                                     config.n_patches, config.fps_seed)
        except WearsimError as exc:
            raise PipelineError(stage=STAGE_SAMPLE, item=None, cause=exc) from exc
        io.save_patch_set(patches, rest_seq.frames[0], ws / patches_file)
        _write_stamp(ws, STAGE_SAMPLE, sample_hash, [patches_file])
    tick(STAGE_SAMPLE, 0.1)

    # --------------------------------------------------------------- synth
    synth_hash = _hash_parts("synth", sample_hash, *mesh_hashes,
                             [e.sequence_id for e in manifest.entries],
                             manifest.frame_rate, cfg_doc["gravity"],
                             config.accel_frame)
    clean_dirs = [f"traces_clean/{e.sequence_id}" for e in manifest.entries]
    if not _stamp_fresh(ws, STAGE_SYNTH, synth_hash,
                        [d + "/_meta.json" for d in clean_dirs]):
        for e in manifest.entries:
            seq = io.load_mesh_sequence(e.path, manifest.frame_rate)
            _check_topology(seq, rest_seq, e.sequence_id)
        tasks = [(e, manifest.frame_rate, patches, config.gravity,
                  config.accel_frame, ws / "traces_clean")
                 for e in manifest.entries]
        _run_stage(tasks, _synth_one, jobs, STAGE_SYNTH)
        _write_stamp(ws, STAGE_SYNTH, synth_hash,
                     [d + "/_meta.json" for d in clean_dirs])
    tick(STAGE_SYNTH, 0.55)

    # ------------------------------------------------------------- degrade
    degrade_hash = _hash_parts("degrade", synth_hash, cfg_doc["sensor"])
    out_dirs = [f"traces/{e.sequence_id}" for e in manifest.entries]
    if not _stamp_fresh(ws, STAGE_DEGRADE, degrade_hash,
                        [d + "/_meta.json" for d in out_dirs]):
        tasks = [(ws / "traces_clean" / e.sequence_id, ws / "traces",
                  config.sensor, config.sensor.rng_seed)
                 for e in manifest.entries]
        _run_stage(tasks, _degrade_one, jobs, STAGE_DEGRADE)
        _write_stamp(ws, STAGE_DEGRADE, degrade_hash,
                     [d + "/_meta.json" for d in out_dirs])
    tick(STAGE_DEGRADE, 0.65)

    # ---------------------------------------------------------------- eval
    eval_hash = _hash_parts("eval", degrade_hash, cfg_doc["eval"],
                            activities if activities is not None else "all")
    matrix_file = "utility_matrix.csv"
    if not _stamp_fresh(ws, STAGE_EVAL, eval_hash, [matrix_file]):
        data = load_traceset(ws / "traces", manifest_eval)
        try:
            matrix = utility_matrix(data, patches, config.eval, jobs=jobs)
        except WearsimError as exc:
            raise PipelineError(stage=STAGE_EVAL, item=None, cause=exc) from exc
        io.write_utility_matrix(matrix, ws / matrix_file)
        _write_stamp(ws, STAGE_EVAL, eval_hash, [matrix_file])
    # the persisted table is canonical: select on its quantized values so
    # resumed runs and cold runs produce byte-identical selections
    matrix = io.load_utility_matrix(ws / matrix_file)
    tick(STAGE_EVAL, 0.95)

    # -------------------------------------------------------------- select
    request = SelectionRequest(tau=config.tau,
                               excluded=frozenset(config.excluded),
                               max_sensors=config.max_sensors)
    try:
        selection = greedy_select(matrix, request)
    except WearsimError as exc:
        raise PipelineError(stage=STAGE_SELECT, item=None, cause=exc) from exc
    io.save_selection(selection, request, ws / "selection.json")

    report = {
        "activities": list(matrix.activities),
        "n_patches": len(patches),
        "n_sequences": len(manifest_eval.entries),
        "coverage": selection.coverage,
        "feasible": selection.feasible,
        "selected": list(selection.selected),
        "tau": config.tau,
    }
    io.atomic_write_text(ws / "report.json", io.canonical_json(report))
    tick(STAGE_SELECT, 1.0)
    return PipelineResult(workspace=str(ws), patches=patches, matrix=matrix,
                          selection=selection)
