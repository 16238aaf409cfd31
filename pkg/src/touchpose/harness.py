"""End-to-end simulated touch experiments.

A run hides a ground-truth pose from the estimator, feeds it noisy touch
measurements (ray-mesh contacts), and alternates gain-driven touch selection
with filter registration, logging pose-error metrics per touch.  Runs are
fully reproducible: every random draw comes from named sub-streams of the
run seed (pose, noise, actions, model sampling).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig
from .geometry import SpatialIndex, TriangleMesh, load_mesh, sample_surface, transform_cloud
from .quaternions import (
    Pose,
    euler_xyz_from_quat,
    quat_from_euler_xyz,
    quat_geodesic_angle,
)
from .registration import FilterParams, FilterState, register
from .selection import (
    LookaheadContext,
    NoViableActionError,
    TouchAction,
    generate_actions,
    select_action,
)

__all__ = [
    "UnreachableObjectError",
    "GroundTruth",
    "TouchRecord",
    "make_scene",
    "execute_touch",
    "adi_metric",
    "pose_errors",
    "run_experiment",
    "run_sweep",
]

_MAX_RANDOM_ATTEMPTS = 1000


class UnreachableObjectError(RuntimeError):
    """No candidate ray ever touched the object."""


@dataclass(frozen=True)
class GroundTruth:
    """The simulated world: true pose, object mesh, and noiseless model cloud.

    The estimator must only see this through :func:`execute_touch` and the
    error metrics.
    """

    pose: Pose
    mesh: TriangleMesh
    model_cloud: np.ndarray


@dataclass(frozen=True)
class TouchRecord:
    """Per-touch log entry; ``est_pose`` is the estimate after this touch."""

    run: int
    touch: int
    criterion: str
    action_id: str  # candidate index, "random-init", or "random"
    point: np.ndarray
    pos_err_m: float
    rot_err_geodesic_deg: float
    rot_err_euler_deg: float
    adi_m: float
    wall_s: float
    est_pose: Pose


def _run_streams(run_seed: int):
    """Named per-run random streams: (pose, noise, actions, model sampling)."""
    children = np.random.SeedSequence(run_seed).spawn(4)
    return tuple(np.random.default_rng(c) for c in children)


def _sample_pose(rng: np.random.Generator, config: ExperimentConfig) -> Pose:
    t = rng.uniform(-config.init_translation_range, config.init_translation_range, size=3)
    angles_deg = rng.uniform(-config.init_rotation_range, config.init_rotation_range, size=3)
    return Pose(quat_from_euler_xyz(np.radians(angles_deg)), t)


def make_scene(
    config: ExperimentConfig, run_seed: int, mesh: TriangleMesh | None = None
) -> tuple[GroundTruth, FilterState, Pose]:
    """Draw the hidden true pose and the initial estimate for one run.

    Returns (ground truth, initial rotation belief, initial pose estimate).
    The belief mean is the start pose's quaternion with isotropic covariance
    ``sigma0_scale * I``; the start pose also seeds the translation estimate.
    """
    if mesh is None:
        mesh = load_mesh(config.mesh_path)
        if config.mesh_scale != 1.0:
            mesh = mesh.scaled(config.mesh_scale)
    pose_rng, _, _, sample_rng = _run_streams(run_seed)
    true_pose = _sample_pose(pose_rng, config)
    start_pose = _sample_pose(pose_rng, config)
    model_cloud = sample_surface(mesh, config.model_samples, seed=int(sample_rng.integers(2**63)))
    gt = GroundTruth(true_pose, mesh, model_cloud)
    state = FilterState.initial(start_pose.rotation, config.sigma0_scale)
    return gt, state, start_pose


def execute_touch(
    action: TouchAction,
    gt: GroundTruth,
    noise_sigma: float,
    rng: np.random.Generator,
    scene_source: str = "surface_samples",
) -> np.ndarray | None:
    """Execute a touch against the ground truth.

    Intersects the ray with the true-posed mesh and perturbs the contact with
    independent zero-mean Gaussian noise per coordinate.  With
    ``scene_source="vertices"`` the contact snaps to the nearest posed mesh
    vertex before noise is added.  Returns None on a miss; noise is only
    drawn on hits, so misses do not advance the noise stream.
    """
    from .geometry import ray_mesh_intersect

    hit = ray_mesh_intersect(action.ray, gt.mesh, gt.pose)
    if hit is None:
        return None
    point = hit[0]
    if scene_source == "vertices":
        verts = gt.pose.transform(gt.mesh.vertices)
        point = verts[int(np.argmin(np.linalg.norm(verts - point, axis=1)))]
    if noise_sigma > 0.0:
        point = point + rng.normal(0.0, noise_sigma, size=3)
    return np.asarray(point, dtype=float)


def adi_metric(model_cloud, est: Pose, gt: Pose) -> float:
    """Average distance from each ground-truth-posed model point to the
    nearest estimate-posed model point."""
    pts = np.asarray(model_cloud, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] == 0:
        raise ValueError("ADI needs a non-empty (N, 3) model cloud")
    gt_pts = transform_cloud(pts, gt)
    est_pts = transform_cloud(pts, est)
    index = SpatialIndex(est_pts)
    return float(np.mean(index.nearest_distances(gt_pts)))


def pose_errors(est: Pose, gt: Pose) -> tuple[float, float, float]:
    """(translation L2 in meters, geodesic rotation error in degrees,
    L2 norm of wrapped intrinsic-XYZ Euler-angle differences in degrees)."""
    pos = float(np.linalg.norm(est.translation - gt.translation))
    geo = math.degrees(quat_geodesic_angle(est.rotation, gt.rotation))
    e_est = np.degrees(euler_xyz_from_quat(est.rotation))
    e_gt = np.degrees(euler_xyz_from_quat(gt.rotation))
    diff = (e_est - e_gt + 180.0) % 360.0 - 180.0
    euler = float(np.linalg.norm(diff))
    return pos, geo, euler


def _random_hitting_touch(
    est_pose: Pose,
    gt: GroundTruth,
    config: ExperimentConfig,
    action_rng: np.random.Generator,
    noise_rng: np.random.Generator,
) -> tuple[np.ndarray, TouchAction]:
    """Draw random bounding-box touches until one contacts the true object."""
    for _ in range(_MAX_RANDOM_ATTEMPTS):
        actions = generate_actions(
            est_pose,
            gt.model_cloud,
            per_face=config.per_face,
            padding=config.padding,
            seed=int(action_rng.integers(2**63)),
        )
        action = actions[int(action_rng.integers(len(actions)))]
        point = execute_touch(action, gt, config.noise_sigma, noise_rng, config.scene_source)
        if point is not None:
            return point, action
    raise UnreachableObjectError(
        f"unreachable object: no random touch hit after {_MAX_RANDOM_ATTEMPTS} attempts"
    )


def run_experiment(
    config: ExperimentConfig,
    run_seed: int,
    mesh: TriangleMesh | None = None,
    run_id: int = 0,
    criterion_name: str | None = None,
    update_trace: list | None = None,
) -> list[TouchRecord]:
    """Simulate one full run and return its per-touch records.

    The first three touches are random box touches that initialize the
    filter; from the fourth touch on, the next touch maximizes the configured
    information-gain criterion, falling back down the gain ranking (and
    finally to random touches) when rays miss the true object.
    """
    criterion = (
        config.make_criterion(criterion_name) if criterion_name else config.single_criterion()
    )
    gt, state, est_pose = make_scene(config, run_seed, mesh)
    _, noise_rng, action_rng, _ = _run_streams(run_seed)
    model_index = SpatialIndex(gt.model_cloud)
    filter_params = FilterParams(rho=config.rho)

    records: list[TouchRecord] = []
    scene_pts: list[np.ndarray] = []

    def log(touch: int, action_id: str, point: np.ndarray, wall: float) -> None:
        pos, geo, euler = pose_errors(est_pose, gt.pose)
        adi = adi_metric(gt.model_cloud, est_pose, gt.pose)
        records.append(
            TouchRecord(
                run=run_id,
                touch=touch,
                criterion=criterion.name,
                action_id=action_id,
                point=point,
                pos_err_m=pos,
                rot_err_geodesic_deg=geo,
                rot_err_euler_deg=euler,
                adi_m=adi,
                wall_s=wall if config.log_wall_time else 0.0,
                est_pose=est_pose,
            )
        )

    for touch in range(1, min(3, config.max_touches) + 1):
        start = time.perf_counter()
        point, _ = _random_hitting_touch(est_pose, gt, config, action_rng, noise_rng)
        scene_pts.append(point)
        log(touch, "random-init", point, time.perf_counter() - start)

    for touch in range(4, config.max_touches + 1):
        start = time.perf_counter()
        actions = generate_actions(
            est_pose,
            gt.model_cloud,
            per_face=config.per_face,
            padding=config.padding,
            seed=int(action_rng.integers(2**63)),
        )
        context = LookaheadContext(
            mesh=gt.mesh,
            model_cloud=gt.model_cloud,
            model_index=model_index,
            est_pose=est_pose,
            scene_so_far=np.array(scene_pts),
            rho=config.rho,
        )
        point = None
        action_id = "random"
        try:
            _, report = select_action(actions, state, criterion, context)
        except NoViableActionError:
            report = None
        if report is not None:
            # walk the gain ranking until an action touches the true object
            for idx in report.ranked():
                point = execute_touch(
                    actions[idx], gt, config.noise_sigma, noise_rng, config.scene_source
                )
                if point is not None:
                    action_id = str(idx)
                    break
        if point is None:
            point, _ = _random_hitting_touch(est_pose, gt, config, action_rng, noise_rng)
            action_id = "random"
        scene_pts.append(point)
        # warm mean, fresh prior covariance: the pass over all pairs below
        # re-derives the belief from the full measurement set
        init_state = FilterState(est_pose.rotation, config.sigma0_scale * np.eye(4))
        result = register(
            np.array(scene_pts),
            model_index,
            gt.model_cloud,
            init_state,
            filter_params,
            init_translation=est_pose.translation,
            trace=update_trace,
        )
        state = result.state
        est_pose = result.pose
        log(touch, action_id, point, time.perf_counter() - start)

    return records


def run_sweep(config: ExperimentConfig):
    """Run every configured criterion for ``runs`` seeded repetitions.

    Run ``r`` uses seed ``config.seed + r`` for every criterion, so criteria
    see identical ground truths.  Returns ``(records, summary, failures)``;
    raises if every run failed.  File output is handled by the caller (see
    :mod:`touchpose.reporting` and the CLI).
    """
    mesh = load_mesh(config.mesh_path)
    if config.mesh_scale != 1.0:
        mesh = mesh.scaled(config.mesh_scale)
    records: list[TouchRecord] = []
    failures: list[dict] = []
    last_error: Exception | None = None
    for name in config.criterion:
        for r in range(config.runs):
            try:
                records.extend(
                    run_experiment(
                        config,
                        run_seed=config.seed + r,
                        mesh=mesh,
                        run_id=r,
                        criterion_name=name,
                    )
                )
            except Exception as exc:  # record and continue with other runs
                failures.append({"criterion": name, "run": r, "error": str(exc)})
                last_error = exc
    if not records:
        raise RuntimeError(f"all sweep runs failed; last error: {last_error}")
    summary = summarize(records, config, failures)
    return records, summary, failures


def summarize(records: list[TouchRecord], config: ExperimentConfig, failures: list[dict] | None = None) -> dict:
    """Per-criterion, per-touch mean and quartiles of each metric."""
    metrics = ("pos_err_m", "rot_err_geodesic_deg", "rot_err_euler_deg", "adi_m")
    by_criterion: dict[str, dict] = {}
    for name in sorted({rec.criterion for rec in records}):
        crit_recs = [rec for rec in records if rec.criterion == name]
        touches = sorted({rec.touch for rec in crit_recs})
        per_touch = {}
        for touch in touches:
            stats = {}
            at_touch = [rec for rec in crit_recs if rec.touch == touch]
            for metric in metrics:
                values = np.array([getattr(rec, metric) for rec in at_touch])
                q25, q50, q75 = np.percentile(values, [25.0, 50.0, 75.0])
                stats[metric] = {
                    "mean": float(values.mean()),
                    "q25": float(q25),
                    "q50": float(q50),
                    "q75": float(q75),
                }
            per_touch[str(touch)] = stats
        by_criterion[name] = per_touch
    return {
        "config": config.to_dict(),
        "seed": config.seed,
        "criteria": by_criterion,
        "failures": failures or [],
    }
