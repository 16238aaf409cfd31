"""Active tactile object-pose estimation.

A rotation filter registers sparse sequential touch measurements against a
known object mesh, and a next-best-touch selector ranks candidate probing
rays by closed-form information gain over the rotation belief.
"""

from .config import ConfigError, ExperimentConfig, load_config
from .gaussians import (
    Criterion,
    GaussianNd,
    bhattacharyya_distance,
    divergence,
    ensure_spd,
    fisher_distance,
    kl_divergence,
    renyi_divergence,
    wasserstein2_squared,
)
from .geometry import (
    Aabb,
    MeshLoadError,
    Ray,
    SpatialIndex,
    TriangleMesh,
    compute_aabb,
    load_mesh,
    nearest_neighbor,
    ray_mesh_intersect,
    sample_surface,
    transform_cloud,
)
from .harness import (
    GroundTruth,
    TouchRecord,
    UnreachableObjectError,
    adi_metric,
    execute_touch,
    make_scene,
    pose_errors,
    run_experiment,
    run_sweep,
)
from .quaternions import (
    Pose,
    pose_delta,
    quat_conj,
    quat_from_euler_xyz,
    quat_mul,
    quat_normalize,
    quat_rotate,
    quat_to_rotmat,
    rotmat_to_quat,
)
from .registration import (
    FilterParams,
    FilterState,
    MeasurementPair,
    RegistrationResult,
    build_H,
    estimate_translation,
    kalman_update,
    measurement_noise,
    register,
)
from .selection import (
    GainReport,
    LookaheadContext,
    NoViableActionError,
    TouchAction,
    generate_actions,
    hypothesize_measurement,
    one_step_lookahead,
    select_action,
)

__version__ = "0.1.0"
