"""Kalman-filter registration of sparse point measurements against a model.

The filter state is a unit quaternion (4-vector, scalar first) with a 4x4
covariance.  Differences of measurement pairs are translation invariant, so
the filter estimates rotation alone; translation then follows in closed form
from corresponded centroids.  Registration re-corresponds scene points and
reprocesses all pairs each inner iteration until the pose stops moving.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gaussians import ensure_spd
from .geometry import SpatialIndex
from .quaternions import Pose, pose_delta, quat_normalize, quat_to_rotmat, skew

__all__ = [
    "EPS_PAIR",
    "FilterState",
    "MeasurementPair",
    "FilterParams",
    "RegistrationResult",
    "build_H",
    "measurement_noise",
    "kalman_update",
    "estimate_translation",
    "register",
]

EPS_PAIR = 1e-6  # meters; pairs shorter than this carry no usable rotation signal


@dataclass(frozen=True)
class FilterState:
    """Rotation belief: unit-quaternion mean and 4x4 covariance."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if mean.shape != (4,):
            raise ValueError("state mean must be a 4-vector quaternion")
        n = np.linalg.norm(mean)
        if abs(n - 1.0) > 1e-6:
            raise ValueError(f"state mean must be unit length, got {n!r}")
        if cov.shape != (4, 4):
            raise ValueError("state covariance must be 4x4")
        if not np.allclose(cov, cov.T, atol=1e-9):
            raise ValueError("state covariance must be symmetric")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @staticmethod
    def initial(quat, sigma0_scale: float) -> "FilterState":
        """Belief centered on ``quat`` with isotropic covariance ``sigma0_scale * I``."""
        return FilterState(quat_normalize(quat), sigma0_scale * np.eye(4))


@dataclass(frozen=True)
class MeasurementPair:
    """Difference vectors of two corresponded measurements.

    ``s_ji`` is the difference of two scene measurements, ``o_ji`` the
    difference of their corresponding model points; both must be longer than
    ``EPS_PAIR``.
    """

    s_ji: np.ndarray
    o_ji: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.s_ji, dtype=float)
        o = np.asarray(self.o_ji, dtype=float)
        if s.shape != (3,) or o.shape != (3,):
            raise ValueError("pair differences must be 3-vectors")
        if np.linalg.norm(s) <= EPS_PAIR or np.linalg.norm(o) <= EPS_PAIR:
            raise ValueError("degenerate measurement pair (difference below EPS_PAIR)")
        object.__setattr__(self, "s_ji", s)
        object.__setattr__(self, "o_ji", o)


@dataclass(frozen=True)
class FilterParams:
    """Tuning knobs for the registration loop."""

    rho: float = 1e-2  # correspondence noise scale; empirical
    max_iterations: int = 50
    rot_tol: float = 1e-4  # radians of pose change per iteration
    trans_tol: float = 1e-5  # meters of pose change per iteration


@dataclass(frozen=True)
class RegistrationResult:
    pose: Pose
    state: FilterState
    iterations: int
    converged: bool


def build_H(pair: MeasurementPair) -> np.ndarray:
    """Pseudo-measurement matrix of a pair; the true rotation quaternion lies
    in its null space (H @ x_true = 0 for noiseless pairs)."""
    diff = pair.s_ji - pair.o_ji
    total = pair.s_ji + pair.o_ji
    H = np.empty((4, 4))
    H[0, 0] = 0.0
    H[0, 1:] = -diff
    H[1:, 0] = diff
    H[1:, 1:] = skew(total)
    return H


def measurement_noise(state: FilterState, rho: float) -> np.ndarray:
    """State-dependent pseudo-measurement covariance.

    0.25 * rho * [tr(x x' + S) I - (x x' + S)] for state mean x and
    covariance S; symmetric positive semidefinite by construction.
    """
    if rho <= 0.0:
        raise ValueError("rho must be positive")
    m = np.outer(state.mean, state.mean) + state.cov
    return 0.25 * rho * (np.trace(m) * np.eye(4) - m)


def _kalman_step(
    state: FilterState, pair: MeasurementPair, rho: float
) -> tuple[FilterState, np.ndarray]:
    """One measurement update; returns the new (renormalized) state and the
    raw posterior covariance before the unit-norm rescale."""
    H = build_H(pair)
    noise = measurement_noise(state, rho)
    innovation_cov = ensure_spd(H @ state.cov @ H.T + noise)
    try:
        gain = np.linalg.solve(innovation_cov, H @ state.cov).T  # K = S H' C^-1
    except np.linalg.LinAlgError:
        raise ValueError("innovation covariance is singular") from None
    mean = state.mean - gain @ (H @ state.mean)
    cov_raw = (np.eye(4) - gain @ H) @ state.cov
    cov_raw = 0.5 * (cov_raw + cov_raw.T)
    n = float(np.linalg.norm(mean))
    if n == 0.0:
        raise ValueError("state collapsed to zero during update")
    mean = mean / n
    cov = cov_raw / (n * n)
    if mean[0] < 0.0:
        mean = -mean
    return FilterState(mean, cov), cov_raw


def kalman_update(state: FilterState, pair: MeasurementPair, rho: float) -> FilterState:
    """Condition the rotation belief on one measurement pair.

    Applies the linear update with a zero pseudo-measurement, then rescales
    mean and covariance back onto the unit sphere and canonicalizes the sign.
    """
    new_state, _ = _kalman_step(state, pair, rho)
    return new_state


def estimate_translation(scene, model, R) -> np.ndarray:
    """Closed-form translation from index-aligned correspondences:
    mean(scene) - R @ mean(model)."""
    s = np.asarray(scene, dtype=float)
    o = np.asarray(model, dtype=float)
    if s.size == 0 or o.size == 0:
        raise ValueError("cannot estimate translation from empty clouds")
    s = s.reshape(-1, 3)
    o = o.reshape(-1, 3)
    if s.shape[0] != o.shape[0]:
        raise ValueError("scene and model correspondence counts differ")
    R = np.asarray(R, dtype=float)
    return s.mean(axis=0) - R @ o.mean(axis=0)


def _consecutive_pairs(scene: np.ndarray, model: np.ndarray):
    """Pairs (i, i+1) over the measurement sequence; degenerate pairs skipped."""
    for i in range(scene.shape[0] - 1):
        s_ji = scene[i + 1] - scene[i]
        o_ji = model[i + 1] - model[i]
        if np.linalg.norm(s_ji) <= EPS_PAIR or np.linalg.norm(o_ji) <= EPS_PAIR:
            continue
        yield MeasurementPair(s_ji, o_ji)


def register(
    scene,
    model_index: SpatialIndex,
    model,
    init: FilterState,
    params: FilterParams | None = None,
    init_translation=None,
    trace: list | None = None,
) -> RegistrationResult:
    """Align scene measurements to the model by iterated filtering.

    Each iteration: (a) re-correspond every scene point to its nearest model
    point under the current pose, (b) run one filter update per consecutive
    measurement pair, (c) recover translation in closed form, (d) stop when
    the pose change drops below the tolerances or the iteration budget runs
    out.

    Each inner pass restarts the filter from the prior covariance
    ``init.cov`` anchored at the current rotation estimate, then folds in
    every pair once.  Re-anchoring keeps the pass equivalent to one clean
    filtering sweep under the latest correspondences; carrying the fitted
    state across passes instead compounds the unit-norm covariance rescale
    over thousands of reprocessed updates until it overflows.

    ``init_translation`` seeds the first correspondence pass; when omitted
    the seed aligns the scene centroid with the model centroid.  ``trace``,
    if given, collects ``(prior_cov, posterior_cov)`` per update, with the
    posterior taken before the unit-norm rescale.
    """
    scene = np.asarray(scene, dtype=float).reshape(-1, 3)
    model = np.asarray(model, dtype=float).reshape(-1, 3)
    if scene.shape[0] < 4:
        raise ValueError("registration needs at least 4 scene points")
    params = params or FilterParams()

    state = init
    R = quat_to_rotmat(state.mean)
    if init_translation is None:
        t = estimate_translation(scene, model, R)
    else:
        t = np.asarray(init_translation, dtype=float)
    pose = Pose(state.mean, t)

    converged = False
    iterations = 0
    any_pair = False
    for it in range(1, params.max_iterations + 1):
        iterations = it
        local = pose.inverse().transform(scene)
        corr, _ = model_index.nearest_many(local)
        matched = model[corr]
        state = FilterState(pose.rotation, init.cov)
        for pair in _consecutive_pairs(scene, matched):
            any_pair = True
            prior_cov = state.cov
            state, cov_raw = _kalman_step(state, pair, params.rho)
            if trace is not None:
                trace.append((prior_cov, cov_raw))
        R = quat_to_rotmat(state.mean)
        t = estimate_translation(scene, matched, R)
        new_pose = Pose(state.mean, t)
        angle, dist = pose_delta(pose, new_pose)
        pose = new_pose
        if angle < params.rot_tol and dist < params.trans_tol:
            converged = True
            break

    if params.max_iterations > 0 and not any_pair:
        raise ValueError("all measurement pairs are degenerate")
    return RegistrationResult(pose, state, iterations, converged)
