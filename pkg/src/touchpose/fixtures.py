"""Bundled mesh fixtures: a unit cube, a tetrahedron, and a desk-scale blob.

The blob is a subdivided icosahedron with a fixed asymmetric radial
deformation; it has no rotational symmetries, so rotation is observable, and
its extent (~0.19 m) matches a desk-scale scanned object.  All fixtures are
generated deterministically, and ``write_fixtures`` exports them as files.
"""

from __future__ import annotations

import math
import os

import numpy as np

from .geometry import TriangleMesh

__all__ = ["CUBE_PLY", "TETRA_OBJ", "cube_mesh", "tetra_mesh", "blob_mesh", "mesh_to_ply", "write_fixtures"]

CUBE_PLY = """ply
format ascii 1.0
comment unit cube [0,1]^3
element vertex 8
property float x
property float y
property float z
element face 12
property list uchar int vertex_indices
end_header
0 0 0
1 0 0
1 1 0
0 1 0
0 0 1
1 0 1
1 1 1
0 1 1
3 0 2 1
3 0 3 2
3 4 5 6
3 4 6 7
3 0 1 5
3 0 5 4
3 2 3 7
3 2 7 6
3 1 2 6
3 1 6 5
3 3 0 4
3 3 4 7
"""

TETRA_OBJ = """# regular-corner tetrahedron
v 0 0 0
v 1 0 0
v 0 1 0
v 0 0 1
f 1 3 2
f 1 2 4
f 1 4 3
f 2 3 4
"""


def cube_mesh() -> TriangleMesh:
    """The bundled unit cube (8 vertices, 12 triangles)."""
    return _from_ply_text(CUBE_PLY)


def tetra_mesh() -> TriangleMesh:
    """The bundled tetrahedron (4 vertices, 4 triangles)."""
    verts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float)
    tris = np.array([[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]], dtype=np.int64)
    return TriangleMesh(verts, tris)


def _from_ply_text(text: str) -> TriangleMesh:
    from .geometry import _parse_ply

    vertices, faces = _parse_ply(text.splitlines())
    tris = [f for f, _ in faces]
    return TriangleMesh(np.array(vertices, dtype=float), np.array(tris, dtype=np.int64))


def _icosahedron() -> tuple[np.ndarray, np.ndarray]:
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=float,
    )
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    tris = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int64,
    )
    return verts, tris


def _subdivide(verts: np.ndarray, tris: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    vert_list = [v for v in verts]
    midpoint: dict[tuple[int, int], int] = {}

    def mid(a: int, b: int) -> int:
        key = (a, b) if a < b else (b, a)
        if key not in midpoint:
            m = vert_list[a] + vert_list[b]
            m /= np.linalg.norm(m)
            midpoint[key] = len(vert_list)
            vert_list.append(m)
        return midpoint[key]

    new_tris = []
    for a, b, c in tris:
        ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
        new_tris.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]])
    return np.array(vert_list), np.array(new_tris, dtype=np.int64)


_BLOB_KNOBS = (
    # anchor direction, amplitude, width: five protrusions of distinct
    # size and sharpness, like ears and limbs on a scanned figurine
    ((1.0, 0.25, 0.1), 1.6, 0.050),
    ((-0.35, 1.0, -0.2), 1.2, 0.040),
    ((0.1, -0.45, 1.0), 1.0, 0.060),
    ((-1.0, -0.6, -0.35), 1.3, 0.045),
    ((0.45, -1.0, -0.6), 0.9, 0.035),
)


def blob_mesh(subdivisions: int = 4, radius: float = 0.06) -> TriangleMesh:
    """Asymmetric star-shaped test object of roughly 0.2 m extent.

    Five pronounced lobes at distinct directions break every rotational
    symmetry and give registration strong geometric features to lock onto;
    the shape stays star-shaped, so inward bounding-box rays that pass near
    the center always hit.
    """
    verts, tris = _icosahedron()
    for _ in range(subdivisions):
        verts, tris = _subdivide(verts, tris)
    u = verts
    bump = np.ones(len(u))
    for anchor, amp, width in _BLOB_KNOBS:
        a = np.asarray(anchor, dtype=float)
        a /= np.linalg.norm(a)
        d2 = np.sum((u - a) ** 2, axis=1)
        bump += amp * np.exp(-d2 / (2.0 * width))
    bump += 0.1 * u[:, 0] * u[:, 1] + 0.08 * np.sin(2.3 * u[:, 2])
    return TriangleMesh(u * (radius * bump)[:, None], tris)


def mesh_to_ply(mesh: TriangleMesh, comment: str = "") -> str:
    """Serialize a mesh as ASCII PLY text."""
    lines = ["ply", "format ascii 1.0"]
    if comment:
        lines.append(f"comment {comment}")
    lines += [
        f"element vertex {len(mesh.vertices)}",
        "property float x",
        "property float y",
        "property float z",
        f"element face {len(mesh.triangles)}",
        "property list uchar int vertex_indices",
        "end_header",
    ]
    lines += [f"{float(v[0])!r} {float(v[1])!r} {float(v[2])!r}" for v in mesh.vertices]
    lines += [f"3 {int(t[0])} {int(t[1])} {int(t[2])}" for t in mesh.triangles]
    return "\n".join(lines) + "\n"


def write_fixtures(out_dir) -> list[str]:
    """Write cube.ply, tetra.obj, and blob.ply into ``out_dir``; returns paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    cube_path = os.path.join(out_dir, "cube.ply")
    with open(cube_path, "w", encoding="utf-8") as fh:
        fh.write(CUBE_PLY)
    paths.append(cube_path)
    tetra_path = os.path.join(out_dir, "tetra.obj")
    with open(tetra_path, "w", encoding="utf-8") as fh:
        fh.write(TETRA_OBJ)
    paths.append(tetra_path)
    blob_path = os.path.join(out_dir, "blob.ply")
    with open(blob_path, "w", encoding="utf-8") as fh:
        fh.write(mesh_to_ply(blob_mesh(), comment="asymmetric desk-scale test object"))
    paths.append(blob_path)
    return paths
