import json
from pathlib import Path

import numpy as np
import pytest

from wearsim.body import (ACTIVITIES, PARTS, BodyModel, build_body,
                          generate_sequence, patch_part,
                          write_fixture_dataset)
from wearsim.io import load_manifest, load_mesh_sequence
from wearsim.sampling import build_adjacency, sample_patches


@pytest.fixture(scope="module")
def body():
    return build_body()


def test_body_size_and_parts(body):
    assert body.topology.vertex_count <= 500
    assert body.rest_vertices.shape == (body.topology.vertex_count, 3)
    assert set(body.vertex_part) == set(PARTS)
    assert len(body.vertex_part) == body.topology.vertex_count
    assert set(body.pivots) >= {"arm_l", "arm_r", "leg_l", "leg_r", "torso"}


def test_body_mesh_connected(body):
    # build_adjacency raises DisconnectedMesh on multiple components
    graph = build_adjacency(body.topology, body.rest_vertices)
    assert graph.vertex_count == body.topology.vertex_count


def test_limbs_lateralized(body):
    verts = body.rest_vertices
    parts = np.array(body.vertex_part)
    assert verts[parts == "arm_l", 0].min() > 0
    assert verts[parts == "arm_r", 0].max() < 0
    assert verts[parts == "head", 1].min() > verts[parts == "torso", 1].max() - 0.1


def test_sequence_moves_expected_parts(body):
    parts = np.array(body.vertex_part)

    def speed(seq):
        vel = np.diff(seq.frames, axis=0) * seq.frame_rate
        return {p: float(np.abs(vel[:, parts == p]).max()) for p in PARTS}

    arm = speed(generate_sequence(body, "arm_only", 0, duration_s=2.0))
    leg = speed(generate_sequence(body, "leg_only", 0, duration_s=2.0))
    whole = speed(generate_sequence(body, "whole_body", 0, duration_s=2.0))

    # head is rigid in every class
    for m in (arm, leg, whole):
        assert m["head"] == 0.0

    # class signatures live in angular speed (amp x frequency):
    # arms dominate arm_only, legs dominate leg_only
    assert arm["arm_l"] > 2.5 * leg["arm_l"]
    assert leg["leg_l"] > 1.8 * arm["leg_l"]
    # whole_body keeps everything moving
    assert whole["arm_l"] > 0.1 and whole["leg_l"] > 0.1
    assert whole["torso"] > 0.1


def test_sequence_deterministic(body):
    a = generate_sequence(body, "arm_only", 3, duration_s=1.0)
    b = generate_sequence(body, "arm_only", 3, duration_s=1.0)
    assert np.array_equal(a.frames, b.frames)
    c = generate_sequence(body, "arm_only", 4, duration_s=1.0)
    assert not np.array_equal(a.frames, c.frames)


def test_sequence_rejects_unknown_activity(body):
    with pytest.raises(ValueError):
        generate_sequence(body, "swimming", 0)


def test_patch_part_and_sampling_reach_limbs(body):
    pset = sample_patches(body.topology, body.rest_vertices, 24, seed=42)
    found = {patch_part(body, c) for c in pset.centers}
    # FPS spreads over the extremities well before 24 samples
    assert {"arm_l", "arm_r", "leg_l", "leg_r"} <= found


def test_write_fixture_dataset(tmp_path):
    manifest_path = write_fixture_dataset(tmp_path, seqs_per_class=2,
                                          duration_s=1.0)
    manifest = load_manifest(manifest_path)
    assert manifest.activities() == sorted(ACTIVITIES)
    assert len(manifest.entries) == 6
    seq = load_mesh_sequence(manifest.entries[0].path)
    assert seq.frame_rate == 50.0
    assert seq.frame_count == 50
    doc = json.loads(Path(manifest_path).read_text())
    assert {s["activity"] for s in doc["sequences"]} == set(ACTIVITIES)


def test_fixture_dataset_deterministic(tmp_path):
    a = write_fixture_dataset(tmp_path / "a", seqs_per_class=1,
                              duration_s=1.0)
    b = write_fixture_dataset(tmp_path / "b", seqs_per_class=1,
                              duration_s=1.0)
    for name in ("arm_only_000.w2wm", "manifest.json"):
        assert ((Path(a).parent / name).read_bytes()
                == (Path(b).parent / name).read_bytes())
