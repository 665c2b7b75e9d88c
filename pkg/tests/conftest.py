"""Shared test fixtures: small meshes and a session-scoped pipeline run."""

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from wearsim.body import write_fixture_dataset
from wearsim.io import RunConfig, load_manifest
from wearsim.mesh import MeshSequence, MeshTopology
from wearsim.pipeline import run_pipeline

settings.register_profile(
    "suite", deadline=None, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("suite")

# one line per acceptance criterion, echoed after the run so the verdicts
# survive pytest's output capture
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_topology(faces, vertex_count=None):
    faces = np.asarray(faces, dtype=np.int64)
    if vertex_count is None:
        vertex_count = int(faces.max()) + 1
    return MeshTopology(vertex_count=vertex_count, faces=faces)


def static_sequence(vertices, faces, frame_count=4, frame_rate=50.0):
    """Same vertex positions repeated; useful for rest-pose style tests."""
    vertices = np.asarray(vertices, dtype=np.float64)
    frames = np.repeat(vertices[None], frame_count, axis=0)
    return MeshSequence(topology=make_topology(faces, len(vertices)),
                        frame_rate=frame_rate, frames=frames)


def tetra_mesh():
    vertices = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0],
                         [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    faces = np.array([[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]])
    return vertices, faces


def random_mesh(rng, lo=5, hi=60, max_extra=40):
    """Connected random triangulation: grow vertices off existing edges."""
    verts = [rng.normal(size=3) for _ in range(3)]
    faces = [(0, 1, 2)]
    n_new = int(rng.integers(lo, hi))
    for _ in range(n_new):
        f = faces[int(rng.integers(len(faces)))]
        u, v = f[0], f[1]
        verts.append(rng.normal(size=3))
        faces.append((u, v, len(verts) - 1))
    for _ in range(int(rng.integers(0, max_extra))):
        tri = tuple(rng.choice(len(verts), size=3, replace=False))
        faces.append(tri)
    topo = make_topology(np.array(faces), len(verts))
    return topo, np.array(verts)


def sparse_weights(graph):
    import scipy.sparse as sp
    V = graph.vertex_count
    rows, cols, vals = [], [], []
    for u, nbrs in enumerate(graph.adjacency):
        for v, w in nbrs:
            rows.append(u)
            cols.append(v)
            vals.append(w)
    return sp.csr_matrix((vals, (rows, cols)), shape=(V, V))


def literal_fps(graph, n, seed):
    """Straight transcription of the sampling loop: uniform random start,
    then repeat full multi-source shortest paths and take the argmax."""
    from scipy.sparse.csgraph import dijkstra
    W = sparse_weights(graph)
    rng = np.random.default_rng(seed)
    centers = [int(rng.integers(graph.vertex_count))]
    while len(centers) < n:
        d = dijkstra(W, directed=False, indices=centers).min(axis=0)
        centers.append(int(np.argmax(d)))
    return centers


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("fixture_data")
    manifest = write_fixture_dataset(root, seqs_per_class=3, duration_s=6.0)
    return manifest


@pytest.fixture(scope="session")
def small_config():
    return RunConfig(n_patches=24, tau=0.9)


@pytest.fixture(scope="session")
def small_workspace(tmp_path_factory, small_dataset, small_config):
    ws = tmp_path_factory.mktemp("workspace")
    run_pipeline(small_dataset, small_config, ws)
    return ws


@pytest.fixture(scope="session")
def small_manifest(small_dataset):
    return load_manifest(small_dataset)
