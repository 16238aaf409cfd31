"""Quaternion and rigid-pose algebra.

Quaternions are plain length-4 numpy arrays ``[q0, q1, q2, q3]`` with the
scalar part first; every 4-vector exchanged with the rotation filter uses
this order.  Rotations are active and act on column vectors, so
``quat_rotate(q, v) == quat_to_rotmat(q) @ v``.

Euler angles, where they appear, are intrinsic X-Y-Z (rotate about x, then
the new y, then the new z), in radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "IDENTITY_QUAT",
    "skew",
    "quat_left_matrix",
    "quat_right_matrix",
    "quat_mul",
    "quat_conj",
    "quat_normalize",
    "quat_rotate",
    "quat_to_rotmat",
    "rotmat_to_quat",
    "quat_from_euler_xyz",
    "euler_xyz_from_quat",
    "quat_geodesic_angle",
    "Pose",
    "pose_delta",
]

IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])

_UNIT_TOL = 1e-6


def skew(v) -> np.ndarray:
    """Cross-product matrix: ``skew(a) @ b == np.cross(a, b)``."""
    x, y, z = np.asarray(v, dtype=float)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def quat_left_matrix(q) -> np.ndarray:
    """4x4 matrix L(a) with ``L(a) @ b == quat_mul(a, b)``."""
    q = np.asarray(q, dtype=float)
    q0, v = q[0], q[1:]
    out = np.empty((4, 4))
    out[0, 0] = q0
    out[0, 1:] = -v
    out[1:, 0] = v
    out[1:, 1:] = skew(v) + q0 * np.eye(3)
    return out


def quat_right_matrix(q) -> np.ndarray:
    """4x4 matrix R(b) with ``R(b) @ a == quat_mul(a, b)``."""
    q = np.asarray(q, dtype=float)
    q0, v = q[0], q[1:]
    out = np.empty((4, 4))
    out[0, 0] = q0
    out[0, 1:] = -v
    out[1:, 0] = v
    out[1:, 1:] = q0 * np.eye(3) - skew(v)
    return out


def quat_mul(a, b) -> np.ndarray:
    """Hamilton product a * b (scalar-first storage)."""
    return quat_left_matrix(a) @ np.asarray(b, dtype=float)


def quat_conj(a) -> np.ndarray:
    """Conjugate [q0, -q1, -q2, -q3]."""
    a = np.asarray(a, dtype=float)
    return np.array([a[0], -a[1], -a[2], -a[3]])


def quat_normalize(a) -> np.ndarray:
    """Scale to unit norm and flip sign so the scalar part is >= 0.

    The sign flip removes the two-to-one cover of rotation space, which keeps
    convergence tests and error metrics single-valued.
    """
    a = np.asarray(a, dtype=float)
    n = np.linalg.norm(a)
    if n == 0.0:
        raise ValueError("degenerate quaternion (zero norm)")
    out = a / n
    if out[0] < 0.0:
        out = -out
    return out


def _require_unit(q, tol: float = _UNIT_TOL) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q)
    if abs(n - 1.0) > tol:
        raise ValueError(f"quaternion must be unit length, got |q| = {n!r}")
    return q


def quat_rotate(a, v) -> np.ndarray:
    """Rotate a 3-vector by a unit quaternion: vector part of a * [0, v] * a."""
    a = _require_unit(a)
    p = np.concatenate(([0.0], np.asarray(v, dtype=float)))
    return quat_mul(quat_mul(a, p), quat_conj(a))[1:]


def quat_to_rotmat(a) -> np.ndarray:
    """Unit quaternion to 3x3 rotation matrix (a and -a give the same matrix)."""
    a = _require_unit(a)
    w, x, y, z = a
    xx, yy, zz = x * x, y * y, z * z
    xy, xz, yz = x * y, x * z, y * z
    wx, wy, wz = w * x, w * y, w * z
    return np.array(
        [
            [1.0 - 2.0 * (yy + zz), 2.0 * (xy - wz), 2.0 * (xz + wy)],
            [2.0 * (xy + wz), 1.0 - 2.0 * (xx + zz), 2.0 * (yz - wx)],
            [2.0 * (xz - wy), 2.0 * (yz + wx), 1.0 - 2.0 * (xx + yy)],
        ]
    )


def rotmat_to_quat(R) -> np.ndarray:
    """Rotation matrix to unit quaternion via the largest-diagonal branch.

    Branching on the largest of the trace and the diagonal entries keeps the
    conversion stable near trace = -1 (180 degree rotations).
    """
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3):
        raise ValueError("rotation matrix must be 3x3")
    trace = R[0, 0] + R[1, 1] + R[2, 2]
    if trace > R[0, 0] and trace > R[1, 1] and trace > R[2, 2]:
        s = math.sqrt(trace + 1.0) * 2.0
        q = [0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s]
    elif R[0, 0] > R[1, 1] and R[0, 0] > R[2, 2]:
        s = math.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2.0
        q = [(R[2, 1] - R[1, 2]) / s, 0.25 * s, (R[0, 1] + R[1, 0]) / s, (R[0, 2] + R[2, 0]) / s]
    elif R[1, 1] > R[2, 2]:
        s = math.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2]) * 2.0
        q = [(R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s, 0.25 * s, (R[1, 2] + R[2, 1]) / s]
    else:
        s = math.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1]) * 2.0
        q = [(R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s, (R[1, 2] + R[2, 1]) / s, 0.25 * s]
    return quat_normalize(q)


def quat_from_euler_xyz(angles) -> np.ndarray:
    """Intrinsic-XYZ Euler angles (radians) to a unit quaternion."""
    ax, ay, az = np.asarray(angles, dtype=float)
    qx = np.array([math.cos(ax / 2.0), math.sin(ax / 2.0), 0.0, 0.0])
    qy = np.array([math.cos(ay / 2.0), 0.0, math.sin(ay / 2.0), 0.0])
    qz = np.array([math.cos(az / 2.0), 0.0, 0.0, math.sin(az / 2.0)])
    return quat_normalize(quat_mul(quat_mul(qx, qy), qz))


def euler_xyz_from_quat(q) -> np.ndarray:
    """Unit quaternion to intrinsic-XYZ Euler angles (radians)."""
    R = quat_to_rotmat(q)
    sy = float(np.clip(R[0, 2], -1.0, 1.0))
    ay = math.asin(sy)
    if abs(sy) < 1.0 - 1e-12:
        ax = math.atan2(-R[1, 2], R[2, 2])
        az = math.atan2(-R[0, 1], R[0, 0])
    else:
        # gimbal lock: only ax + az is observable, put it all in ax
        ax = math.atan2(R[1, 0], R[1, 1])
        az = 0.0
    return np.array([ax, ay, az])


def quat_geodesic_angle(a, b) -> float:
    """Rotation angle in [0, pi] between the rotations of two unit quaternions."""
    r = quat_mul(quat_conj(np.asarray(a, dtype=float)), b)
    return 2.0 * math.atan2(float(np.linalg.norm(r[1:])), abs(float(r[0])))


@dataclass(frozen=True)
class Pose:
    """Rigid transform: ``x_out = R(rotation) @ x_in + translation``.

    ``rotation`` is a unit quaternion (normalized on construction),
    ``translation`` a 3-vector in meters.
    """

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        rot = np.asarray(self.rotation, dtype=float)
        if rot.shape != (4,):
            raise ValueError("rotation must be a length-4 quaternion")
        _require_unit(rot)
        t = np.asarray(self.translation, dtype=float)
        if t.shape != (3,):
            raise ValueError("translation must be a 3-vector")
        object.__setattr__(self, "rotation", quat_normalize(rot))
        object.__setattr__(self, "translation", t)

    @staticmethod
    def identity() -> "Pose":
        return Pose(IDENTITY_QUAT.copy(), np.zeros(3))

    def compose(self, other: "Pose") -> "Pose":
        """self applied after other: (self o other)(x) = self(other(x))."""
        rot = quat_normalize(quat_mul(self.rotation, other.rotation))
        t = quat_rotate(self.rotation, other.translation) + self.translation
        return Pose(rot, t)

    def inverse(self) -> "Pose":
        inv_rot = quat_conj(self.rotation)
        return Pose(inv_rot, -quat_rotate(inv_rot, self.translation))

    def rotation_matrix(self) -> np.ndarray:
        return quat_to_rotmat(self.rotation)

    def transform(self, points) -> np.ndarray:
        """Apply to a single 3-vector or an (N, 3) array of points."""
        pts = np.asarray(points, dtype=float)
        R = self.rotation_matrix()
        if pts.ndim == 1:
            return R @ pts + self.translation
        return pts @ R.T + self.translation

    def matrix(self) -> np.ndarray:
        """4x4 homogeneous matrix with bottom row [0 0 0 1]."""
        out = np.eye(4)
        out[:3, :3] = self.rotation_matrix()
        out[:3, 3] = self.translation
        return out

    @staticmethod
    def from_matrix(M) -> "Pose":
        M = np.asarray(M, dtype=float)
        if M.shape != (4, 4) or not np.allclose(M[3], [0.0, 0.0, 0.0, 1.0], atol=1e-9):
            raise ValueError("expected a 4x4 homogeneous matrix with bottom row [0 0 0 1]")
        return Pose(rotmat_to_quat(M[:3, :3]), M[:3, 3])


def pose_delta(p1: Pose, p2: Pose) -> tuple[float, float]:
    """(geodesic rotation angle in radians, translation distance in meters)."""
    angle = quat_geodesic_angle(p1.rotation, p2.rotation)
    dist = float(np.linalg.norm(p1.translation - p2.translation))
    return angle, dist
