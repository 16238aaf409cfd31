"""Triangle meshes, point clouds, ray casting, and correspondence search.

Point clouds are plain ``(N, 3)`` float arrays throughout; meters everywhere.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .quaternions import Pose, quat_conj, quat_rotate

__all__ = [
    "MeshLoadError",
    "UnsupportedMeshFormatError",
    "MeshParseError",
    "MeshIndexError",
    "EmptyMeshError",
    "TriangleMesh",
    "Ray",
    "Aabb",
    "SpatialIndex",
    "load_mesh",
    "ray_mesh_intersect",
    "sample_surface",
    "nearest_neighbor",
    "compute_aabb",
    "transform_cloud",
]

_MIN_TRIANGLE_AREA = 1e-12  # m^2


class MeshLoadError(Exception):
    """Base class for mesh loading failures."""


class UnsupportedMeshFormatError(MeshLoadError):
    """File extension is neither .ply nor .obj."""


class MeshParseError(MeshLoadError):
    """Malformed mesh file; the message names the offending line."""


class MeshIndexError(MeshLoadError):
    """A face references a vertex that does not exist."""


class EmptyMeshError(MeshLoadError):
    """The file parsed but contains no triangles."""


@dataclass(frozen=True)
class TriangleMesh:
    """Indexed triangle mesh: ``vertices`` (V, 3) floats, ``triangles`` (T, 3) ints."""

    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=float)
        tris = np.asarray(self.triangles, dtype=np.int64)
        if verts.ndim != 2 or verts.shape[1] != 3:
            raise ValueError("vertices must be an (V, 3) array")
        if tris.ndim != 2 or tris.shape[1] != 3:
            raise ValueError("triangles must be a (T, 3) array")
        if tris.shape[0] == 0:
            raise ValueError("mesh has no triangles")
        if tris.min() < 0 or tris.max() >= verts.shape[0]:
            raise ValueError("triangle index out of range")
        areas = _triangle_areas(verts, tris)
        if np.any(areas <= _MIN_TRIANGLE_AREA):
            bad = int(np.argmin(areas))
            raise ValueError(f"triangle {bad} is degenerate (area {areas[bad]:.3e} m^2)")
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "triangles", tris)

    def triangle_areas(self) -> np.ndarray:
        return _triangle_areas(self.vertices, self.triangles)

    def scaled(self, factor: float) -> "TriangleMesh":
        """Uniformly scale about the origin (mesh unit conversion)."""
        return TriangleMesh(self.vertices * float(factor), self.triangles)


def _triangle_areas(verts: np.ndarray, tris: np.ndarray) -> np.ndarray:
    a = verts[tris[:, 0]]
    e1 = verts[tris[:, 1]] - a
    e2 = verts[tris[:, 2]] - a
    return 0.5 * np.linalg.norm(np.cross(e1, e2), axis=1)


@dataclass(frozen=True)
class Ray:
    """Probing ray: unit ``direction`` from ``origin``."""

    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        o = np.asarray(self.origin, dtype=float)
        d = np.asarray(self.direction, dtype=float)
        if o.shape != (3,) or d.shape != (3,):
            raise ValueError("ray origin and direction must be 3-vectors")
        if abs(np.linalg.norm(d) - 1.0) > 1e-9:
            raise ValueError("ray direction must be unit length")
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "direction", d)


@dataclass(frozen=True)
class Aabb:
    """Axis-aligned bounding box with ``min`` <= ``max`` componentwise."""

    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.min, dtype=float)
        hi = np.asarray(self.max, dtype=float)
        if lo.shape != (3,) or hi.shape != (3,):
            raise ValueError("box corners must be 3-vectors")
        if np.any(lo > hi):
            raise ValueError("box min must not exceed max")
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.min + self.max)

    @property
    def extents(self) -> np.ndarray:
        return self.max - self.min

    def contains(self, points, atol: float = 0.0) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.all((pts >= self.min - atol) & (pts <= self.max + atol), axis=1)


# ---------------------------------------------------------------------------
# mesh file loading


def load_mesh(path) -> TriangleMesh:
    """Load a triangle mesh from an ASCII PLY or Wavefront OBJ file.

    Polygonal faces are fan-triangulated.  Binary PLY is rejected.
    """
    p = os.fspath(path)
    ext = os.path.splitext(p)[1].lower()
    if ext not in (".ply", ".obj"):
        raise UnsupportedMeshFormatError(
            f"unsupported mesh extension {ext!r} (expected .ply or .obj)"
        )
    with open(p, "r", encoding="utf-8", errors="replace") as fh:
        lines = fh.read().splitlines()
    if ext == ".ply":
        vertices, faces = _parse_ply(lines)
    else:
        vertices, faces = _parse_obj(lines)
    if not faces:
        raise EmptyMeshError(f"{p}: mesh contains no faces")
    triangles = []
    nv = len(vertices)
    for face, lineno in faces:
        for idx in face:
            if idx < 0 or idx >= nv:
                raise MeshIndexError(f"line {lineno}: vertex index {idx} out of range (0..{nv - 1})")
        for k in range(1, len(face) - 1):
            triangles.append((face[0], face[k], face[k + 1]))
    return TriangleMesh(np.array(vertices, dtype=float), np.array(triangles, dtype=np.int64))


def _parse_ply(lines: list[str]) -> tuple[list, list]:
    if not lines or lines[0].strip() != "ply":
        raise MeshParseError("line 1: missing 'ply' magic header")
    elements: list[tuple[str, int, list[str]]] = []  # (name, count, scalar property names)
    list_property: dict[str, str] = {}
    i = 1
    while True:
        if i >= len(lines):
            raise MeshParseError(f"line {len(lines)}: header ended before 'end_header'")
        tokens = lines[i].split()
        lineno = i + 1
        i += 1
        if not tokens or tokens[0] == "comment" or tokens[0] == "obj_info":
            continue
        if tokens[0] == "format":
            if len(tokens) < 2 or tokens[1] != "ascii":
                raise MeshParseError(f"line {lineno}: only ASCII PLY is supported")
        elif tokens[0] == "element":
            if len(tokens) != 3:
                raise MeshParseError(f"line {lineno}: malformed element declaration")
            try:
                elements.append((tokens[1], int(tokens[2]), []))
            except ValueError:
                raise MeshParseError(f"line {lineno}: bad element count {tokens[2]!r}") from None
        elif tokens[0] == "property":
            if not elements:
                raise MeshParseError(f"line {lineno}: property before any element")
            if len(tokens) >= 2 and tokens[1] == "list":
                list_property[elements[-1][0]] = tokens[-1]
            else:
                elements[-1][2].append(tokens[-1])
        elif tokens[0] == "end_header":
            break
        else:
            raise MeshParseError(f"line {lineno}: unrecognized header keyword {tokens[0]!r}")

    vertices: list[tuple[float, float, float]] = []
    faces: list[tuple[list[int], int]] = []
    for name, count, props in elements:
        if name == "vertex":
            try:
                cols = [props.index(axis) for axis in ("x", "y", "z")]
            except ValueError:
                raise MeshParseError("vertex element lacks x/y/z properties") from None
        for _ in range(count):
            while i < len(lines) and not lines[i].strip():
                i += 1
            if i >= len(lines):
                raise MeshParseError(f"line {len(lines)}: file truncated inside element '{name}'")
            tokens = lines[i].split()
            lineno = i + 1
            i += 1
            if name == "vertex":
                try:
                    vertices.append(tuple(float(tokens[c]) for c in cols))
                except (ValueError, IndexError):
                    raise MeshParseError(f"line {lineno}: malformed vertex record") from None
            elif name == "face":
                try:
                    n = int(tokens[0])
                    face = [int(t) for t in tokens[1 : 1 + n]]
                except (ValueError, IndexError):
                    raise MeshParseError(f"line {lineno}: malformed face record") from None
                if len(face) != n or n < 3:
                    raise MeshParseError(f"line {lineno}: face needs at least 3 indices")
                faces.append((face, lineno))
            # data rows of other elements are skipped
    return vertices, faces


def _parse_obj(lines: list[str]) -> tuple[list, list]:
    vertices: list[tuple[float, float, float]] = []
    faces: list[tuple[list[int], int]] = []
    for i, raw in enumerate(lines):
        lineno = i + 1
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if tokens[0] == "v":
            try:
                vertices.append((float(tokens[1]), float(tokens[2]), float(tokens[3])))
            except (ValueError, IndexError):
                raise MeshParseError(f"line {lineno}: malformed vertex record") from None
        elif tokens[0] == "f":
            if len(tokens) < 4:
                raise MeshParseError(f"line {lineno}: face needs at least 3 indices")
            face = []
            for entry in tokens[1:]:
                head = entry.split("/", 1)[0]
                try:
                    idx = int(head)
                except ValueError:
                    raise MeshParseError(f"line {lineno}: bad face index {entry!r}") from None
                if idx < 1:
                    raise MeshIndexError(f"line {lineno}: OBJ indices must be positive (1-based)")
                face.append(idx - 1)
            faces.append((face, lineno))
        # vn/vt/g/o/s/usemtl/mtllib records are ignored
    return vertices, faces


# ---------------------------------------------------------------------------
# queries


def ray_mesh_intersect(ray: Ray, mesh: TriangleMesh, pose: Pose | None = None):
    """First intersection of a ray with a posed mesh.

    Returns ``(point, t)`` with ``point = origin + t * direction`` (world
    frame, t >= 0), or ``None`` on a miss.  Hits that graze triangle edges
    count as hits.
    """
    if pose is None:
        origin, direction = ray.origin, ray.direction
    else:
        inv = pose.inverse()
        origin = inv.transform(ray.origin)
        direction = quat_rotate(quat_conj(pose.rotation), ray.direction)

    verts, tris = mesh.vertices, mesh.triangles
    v0 = verts[tris[:, 0]]
    e1 = verts[tris[:, 1]] - v0
    e2 = verts[tris[:, 2]] - v0
    pvec = np.cross(direction, e2)
    det = np.einsum("ij,ij->i", e1, pvec)
    eps = 1e-12
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_det = 1.0 / det
        tvec = origin - v0
        u = np.einsum("ij,ij->i", tvec, pvec) * inv_det
        qvec = np.cross(tvec, e1)
        v = np.einsum("j,ij->i", direction, qvec) * inv_det
        t = np.einsum("ij,ij->i", e2, qvec) * inv_det
    hit = (
        (det != 0.0)
        & np.isfinite(t)
        & (u >= -eps)
        & (v >= -eps)
        & (u + v <= 1.0 + eps)
        & (t >= 0.0)
    )
    if not np.any(hit):
        return None
    candidates = np.nonzero(hit)[0]
    best = candidates[np.argmin(t[candidates])]
    t_best = float(t[best])
    return ray.origin + t_best * ray.direction, t_best


def sample_surface(mesh: TriangleMesh, count: int, seed: int) -> np.ndarray:
    """Area-weighted uniform surface samples; deterministic for a given seed."""
    if count < 1:
        raise ValueError("count must be >= 1")
    areas = mesh.triangle_areas()
    total = areas.sum()
    if total <= 0.0:
        raise ValueError("mesh has zero surface area")
    rng = np.random.default_rng(seed)
    which = rng.choice(len(areas), size=count, p=areas / total)
    r1 = rng.random(count)
    r2 = rng.random(count)
    u = np.sqrt(r1)
    tris = mesh.triangles[which]
    a = mesh.vertices[tris[:, 0]]
    b = mesh.vertices[tris[:, 1]]
    c = mesh.vertices[tris[:, 2]]
    return (1.0 - u)[:, None] * a + (u * (1.0 - r2))[:, None] * b + (u * r2)[:, None] * c


class SpatialIndex:
    """Exact nearest-neighbor index over a fixed point cloud.

    Backed by a k-d tree, with a candidate refinement pass so results match a
    linear scan exactly (ties broken by lowest point index).
    """

    def __init__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] == 0:
            raise ValueError("spatial index needs a non-empty (N, 3) point array")
        self._points = pts
        self._tree = cKDTree(pts)

    def __len__(self) -> int:
        return self._points.shape[0]

    @property
    def points(self) -> np.ndarray:
        return self._points

    def nearest(self, query) -> tuple[int, float]:
        """(index, distance) of the exact nearest point; lowest index on ties."""
        q = np.asarray(query, dtype=float)
        d, _ = self._tree.query(q)
        # widen fractionally so every co-minimal point is a candidate
        radius = d * (1.0 + 1e-12) + 1e-300
        candidates = sorted(self._tree.query_ball_point(q, radius))
        dists = np.linalg.norm(self._points[candidates] - q, axis=1)
        dmin = dists.min()
        best = candidates[int(np.argmax(dists == dmin))]
        return int(best), float(dmin)

    def nearest_many(self, queries) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized :meth:`nearest` over an (N, 3) query array."""
        qs = np.asarray(queries, dtype=float)
        idx = np.empty(qs.shape[0], dtype=np.int64)
        dist = np.empty(qs.shape[0])
        for i, q in enumerate(qs):
            idx[i], dist[i] = self.nearest(q)
        return idx, dist

    def nearest_distances(self, queries) -> np.ndarray:
        """Exact nearest-point distance for each query (matches a linear scan).

        Fast path trusts the tree's nearest index and recomputes its distance
        with the linear-scan formula; queries whose top two tree distances
        nearly tie are re-resolved through :meth:`nearest`.
        """
        qs = np.asarray(queries, dtype=float).reshape(-1, 3)
        if len(self) == 1:
            return np.linalg.norm(qs - self._points[0], axis=1)
        d, idx = self._tree.query(qs, k=2)
        exact = np.linalg.norm(qs - self._points[idx[:, 0]], axis=1)
        near_tie = d[:, 1] - d[:, 0] <= 1e-9 * np.maximum(d[:, 0], 1e-300)
        for j in np.nonzero(near_tie)[0]:
            exact[j] = self.nearest(qs[j])[1]
        return exact


def nearest_neighbor(index: SpatialIndex, query) -> tuple[int, float]:
    """Exact nearest neighbor in the indexed cloud (lowest index on ties)."""
    return index.nearest(query)


def compute_aabb(cloud, padding: float = 1.0) -> Aabb:
    """Bounding box of a cloud, scaled about its center by ``padding`` (>= 1)."""
    pts = np.asarray(cloud, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] == 0:
        raise ValueError("cannot bound an empty point cloud")
    if padding < 1.0:
        raise ValueError("padding must be >= 1")
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    center = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo) * padding
    return Aabb(center - half, center + half)


def transform_cloud(cloud, pose: Pose) -> np.ndarray:
    """Apply a rigid pose to every point of an (N, 3) cloud."""
    pts = np.asarray(cloud, dtype=float)
    return pose.transform(pts)
