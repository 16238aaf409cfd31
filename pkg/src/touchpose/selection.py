"""Candidate touch generation and information-gain action selection.

Candidate touches are inward rays sampled on the faces of the estimated
object's padded bounding box.  Each candidate is scored by simulating its
measurement against the model at the estimated pose, applying a single
hypothetical filter update, and measuring how far the belief would move.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gaussians import Criterion, GaussianNd, divergence
from .geometry import Ray, SpatialIndex, TriangleMesh, compute_aabb, ray_mesh_intersect, transform_cloud
from .quaternions import Pose
from .registration import FilterState, MeasurementPair, kalman_update

__all__ = [
    "TouchAction",
    "ActionEvaluation",
    "GainReport",
    "LookaheadContext",
    "NoViableActionError",
    "generate_actions",
    "hypothesize_measurement",
    "one_step_lookahead",
    "select_action",
]


class NoViableActionError(RuntimeError):
    """Every candidate action missed the estimated object or was rejected."""


@dataclass(frozen=True)
class TouchAction:
    """A touch: follow ``ray`` until contact."""

    ray: Ray


@dataclass(frozen=True)
class ActionEvaluation:
    """Outcome of scoring one candidate action."""

    action_index: int
    hit_point: np.ndarray | None  # None = the hypothetical ray missed
    gain: float | None  # None = miss or rejected
    rejected: bool = False  # hit, but produced a degenerate pair


@dataclass(frozen=True)
class GainReport:
    """Per-action evaluations (one entry per candidate) and the chosen index."""

    evaluations: tuple[ActionEvaluation, ...]
    chosen_index: int

    def gain_of(self, index: int) -> float | None:
        return self.evaluations[index].gain

    def ranked(self) -> list[int]:
        """Indices of scored actions, best gain first; ties keep lower index."""
        scored = [e for e in self.evaluations if e.gain is not None]
        return [e.action_index for e in sorted(scored, key=lambda e: (-e.gain, e.action_index))]


@dataclass(frozen=True)
class LookaheadContext:
    """Everything the one-step look-ahead needs besides the belief itself."""

    mesh: TriangleMesh
    model_cloud: np.ndarray
    model_index: SpatialIndex
    est_pose: Pose
    scene_so_far: np.ndarray  # (N, 3) measurements in acquisition order
    rho: float


def generate_actions(
    est_pose: Pose,
    model_cloud,
    per_face: int = 10,
    padding: float = 1.1,
    seed: int = 0,
) -> list[TouchAction]:
    """Sample ``per_face`` ray origins uniformly on each face of the padded
    bounding box of the model at the estimated pose; rays point inward along
    the face normal.  Deterministic for a given seed."""
    if per_face < 1:
        raise ValueError("per_face must be >= 1")
    box = compute_aabb(transform_cloud(model_cloud, est_pose), padding)
    ext = box.extents
    if np.any(ext <= 0.0):
        raise ValueError("bounding box has zero extent on an axis")
    rng = np.random.default_rng(seed)
    actions: list[TouchAction] = []
    for axis in range(3):
        u_axis, v_axis = [a for a in range(3) if a != axis]
        for side in (0, 1):  # 0: min face (+normal), 1: max face (-normal)
            u = rng.uniform(box.min[u_axis], box.max[u_axis], size=per_face)
            v = rng.uniform(box.min[v_axis], box.max[v_axis], size=per_face)
            for k in range(per_face):
                origin = np.empty(3)
                origin[axis] = box.min[axis] if side == 0 else box.max[axis]
                origin[u_axis] = u[k]
                origin[v_axis] = v[k]
                direction = np.zeros(3)
                direction[axis] = 1.0 if side == 0 else -1.0
                actions.append(TouchAction(Ray(origin, direction)))
    return actions


def hypothesize_measurement(
    action: TouchAction, model_mesh: TriangleMesh, est_pose: Pose
) -> np.ndarray | None:
    """Measurement the action would produce if the object sat exactly at the
    estimated pose: first ray-mesh hit, or None."""
    hit = ray_mesh_intersect(action.ray, model_mesh, est_pose)
    if hit is None:
        return None
    return hit[0]


def one_step_lookahead(
    state: FilterState,
    scene_so_far,
    hyp_point,
    model_index: SpatialIndex,
    model_cloud,
    rho: float,
    est_pose: Pose,
) -> GaussianNd:
    """Posterior belief after conditioning on one hypothetical measurement.

    The hypothetical point is paired with the most recent real measurement;
    model correspondences are looked up under the current pose estimate.  The
    input state is not modified.  Raises ValueError when the pair is
    degenerate (hypothetical touch lands on the last real touch).
    """
    scene = np.asarray(scene_so_far, dtype=float).reshape(-1, 3)
    if scene.shape[0] == 0:
        raise ValueError("look-ahead needs at least one prior measurement")
    hyp = np.asarray(hyp_point, dtype=float)
    last = scene[-1]
    inv = est_pose.inverse()
    model = np.asarray(model_cloud, dtype=float)
    o_hyp = model[model_index.nearest(inv.transform(hyp))[0]]
    o_last = model[model_index.nearest(inv.transform(last))[0]]
    pair = MeasurementPair(hyp - last, o_hyp - o_last)
    post = kalman_update(state, pair, rho)
    return GaussianNd(post.mean, post.cov)


def select_action(
    actions: list[TouchAction],
    state: FilterState,
    criterion: Criterion,
    context: LookaheadContext,
) -> tuple[TouchAction, GainReport]:
    """Score every candidate action and return the highest-gain one.

    Gains are D(posterior || prior) for the configured criterion.  Actions
    whose hypothetical ray misses, or whose pair is degenerate, are excluded
    from the argmax (a miss yields no measurement, so its gain is undefined).
    Ties break toward the lowest action index.  Raises
    :class:`NoViableActionError` when nothing can be scored so the caller can
    fall back to a random touch.
    """
    if not actions:
        raise ValueError("empty action list")
    prior = GaussianNd(state.mean, state.cov)
    evaluations: list[ActionEvaluation] = []
    best_index = -1
    best_gain = -np.inf
    for i, action in enumerate(actions):
        hyp = hypothesize_measurement(action, context.mesh, context.est_pose)
        if hyp is None:
            evaluations.append(ActionEvaluation(i, None, None))
            continue
        try:
            posterior = one_step_lookahead(
                state,
                context.scene_so_far,
                hyp,
                context.model_index,
                context.model_cloud,
                context.rho,
                context.est_pose,
            )
        except ValueError:
            evaluations.append(ActionEvaluation(i, hyp, None, rejected=True))
            continue
        gain = divergence(criterion, posterior, prior)
        evaluations.append(ActionEvaluation(i, hyp, gain))
        if gain > best_gain:
            best_gain = gain
            best_index = i
    if best_index < 0:
        raise NoViableActionError("every candidate action missed or was rejected")
    return actions[best_index], GainReport(tuple(evaluations), best_index)
