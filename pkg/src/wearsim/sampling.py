"""Patch placement candidates: farthest point sampling over mesh geodesics.

Distances are shortest paths on the edge graph (multi-source Dijkstra), not
exact polyhedral geodesics; edge lengths come from a designated rest frame.
Each selected center vertex is turned into a patch by taking its largest
incident rest-frame face, which keeps the patch normal well conditioned.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    BadCount,
    DisconnectedMesh,
    InvalidInput,
    IsolatedVertex,
)
from .mesh import MeshTopology, SurfacePatch

DEFAULT_PATCH_COUNT = 512
DEFAULT_SEED = 42


@dataclass(frozen=True)
class VertexGraph:
    """Undirected weighted vertex adjacency, one entry per unique mesh edge."""

    adjacency: tuple  # adjacency[v] = tuple of (neighbor, length) pairs
    rest_frame: int = 0

    @property
    def vertex_count(self) -> int:
        return len(self.adjacency)


@dataclass(frozen=True)
class PatchSet:
    centers: tuple    # ordered vertex indices, |centers| = n, all distinct
    patches: tuple    # SurfacePatch per center, ids 0..n-1 in selection order
    seed: int

    def __post_init__(self):
        if len(set(self.centers)) != len(self.centers):
            raise InvalidInput("duplicate centers")
        if len(self.patches) != len(self.centers):
            raise InvalidInput("centers/patches length mismatch")
        for center, patch in zip(self.centers, self.patches):
            if center not in patch.vertices:
                raise InvalidInput(
                    f"patch {patch.id} does not contain its center {center}")

    def __len__(self) -> int:
        return len(self.centers)


def build_adjacency(topology: MeshTopology, rest_vertices: np.ndarray,
                    rest_frame: int = 0) -> VertexGraph:
    """Edge graph with Euclidean rest-frame lengths; rejects disconnected meshes."""
    verts = np.asarray(rest_vertices, dtype=np.float64)
    if verts.shape != (topology.vertex_count, 3):
        raise InvalidInput("rest_vertices must be (vertex_count, 3)")

    edges = set()
    for a, b, c in topology.faces:
        for u, v in ((a, b), (b, c), (a, c)):
            edges.add((min(u, v), max(u, v)))

    neighbors = [[] for _ in range(topology.vertex_count)]
    for u, v in edges:
        length = float(np.linalg.norm(verts[u] - verts[v]))
        if not (length > 0.0 and np.isfinite(length)):
            raise InvalidInput(f"edge ({u},{v}) has non-positive length {length}")
        neighbors[u].append((v, length))
        neighbors[v].append((u, length))

    # connectivity sweep; an isolated vertex is its own component
    seen = np.zeros(topology.vertex_count, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        u = stack.pop()
        for v, _ in neighbors[u]:
            if not seen[v]:
                seen[v] = True
                stack.append(v)
    if not seen.all():
        raise DisconnectedMesh(
            f"{int((~seen).sum())} vertices unreachable from vertex 0")

    return VertexGraph(adjacency=tuple(tuple(n) for n in neighbors),
                       rest_frame=rest_frame)


def _relax(graph: VertexGraph, sources, dist: np.ndarray) -> None:
    """Dijkstra relaxation of `dist` (modified in place) from `sources`.

    Starting from an all-inf array this is plain multi-source Dijkstra;
    starting from an existing distance field it lowers entries reachable
    more cheaply from the new sources, which is how FPS stays incremental.
    """
    heap = []
    for s in sources:
        dist[s] = 0.0
        heapq.heappush(heap, (0.0, s))
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for v, w in graph.adjacency[u]:
            nd = d + w
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))


def geodesic_distances(graph: VertexGraph, sources) -> np.ndarray:
    """Per-vertex shortest-path distance to the nearest source vertex."""
    sources = list(sources)
    if not sources:
        raise InvalidInput("sources must be non-empty")
    for s in sources:
        if not (0 <= s < graph.vertex_count):
            raise InvalidInput(f"source {s} out of range")
    dist = np.full(graph.vertex_count, np.inf)
    _relax(graph, sources, dist)
    return dist


def farthest_point_sampling(graph: VertexGraph, n: int, seed: int = DEFAULT_SEED) -> list:
    """Ordered FPS centers: seeded start, then repeated arg max of min-distance.

    Ties on the arg max go to the lowest vertex index. The incremental
    relaxation keeps every distance bit-identical to recomputing the full
    multi-source field each round (same path sums in the same order).
    """
    if not (1 <= n <= graph.vertex_count):
        raise BadCount(f"n must be in [1, {graph.vertex_count}], got {n}")
    rng = np.random.default_rng(seed)
    first = int(rng.integers(graph.vertex_count))
    centers = [first]
    dist = np.full(graph.vertex_count, np.inf)
    _relax(graph, [first], dist)
    while len(centers) < n:
        nxt = int(np.argmax(dist))  # first occurrence = lowest index on ties
        centers.append(nxt)
        _relax(graph, [nxt], dist)
    return centers


def patch_from_center(topology: MeshTopology, rest_vertices: np.ndarray,
                      center: int, patch_id: Optional[int] = None) -> SurfacePatch:
    """Patch for a center vertex: its incident face with the largest rest area."""
    if not (0 <= center < topology.vertex_count):
        raise InvalidInput(f"center {center} out of range")
    verts = np.asarray(rest_vertices, dtype=np.float64)
    incident = np.nonzero((topology.faces == center).any(axis=1))[0]
    if incident.size == 0:
        raise IsolatedVertex(f"vertex {center} belongs to no face")
    tris = verts[topology.faces[incident]]
    areas = 0.5 * np.linalg.norm(
        np.cross(tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0]), axis=1)
    best = incident[int(np.argmax(areas))]  # ties: lowest face index
    face = topology.faces[best]
    return SurfacePatch(id=center if patch_id is None else patch_id,
                        vertices=(int(face[0]), int(face[1]), int(face[2])))


def sample_patches(topology: MeshTopology, rest_vertices: np.ndarray, n: int,
                   seed: int = DEFAULT_SEED) -> PatchSet:
    """FPS centers plus their patches; patch ids follow selection order."""
    graph = build_adjacency(topology, rest_vertices)
    centers = farthest_point_sampling(graph, n, seed)
    patches = tuple(
        patch_from_center(topology, rest_vertices, c, patch_id=i)
        for i, c in enumerate(centers))
    return PatchSet(centers=tuple(centers), patches=patches, seed=seed)
