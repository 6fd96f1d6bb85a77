"""Per-camera pose refinement from known marker points.

A rough pose prior (from an external chessboard solve, supplied as
data) is polished with Levenberg-Marquardt over pixel reprojection
residuals of 16 known markers. The pixel residual has the same zero
set as the componentwise ray-ratio identity but keeps every residual
in consistent units, which LM scaling likes.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from effpose.geometry import (
    BehindCameraError,
    CameraModel,
    Pose,
    project,
)
from effpose.optim import LMConfig, levenberg_marquardt


class CalibrationError(RuntimeError):
    """LM failed to converge; carries the best pose found so far."""

    def __init__(self, message: str, best_pose: Pose, final_cost: float):
        super().__init__(message)
        self.best_pose = best_pose
        self.final_cost = final_cost


@dataclass(frozen=True)
class Intrinsics:
    focal_length: float
    principal_point: np.ndarray
    image_size: tuple[int, int]

    def camera_at(self, pose: Pose) -> CameraModel:
        return CameraModel(pose, self.focal_length,
                           np.asarray(self.principal_point, float), self.image_size)


@dataclass(frozen=True)
class MarkerSet:
    """World-frame markers and their pixel observations in one camera.

    ``world_points`` maps marker id to a 3-vector (mm); ``image_points``
    maps marker id to a 2-vector (px). Only ids present in both take
    part in refinement; at least 3 are required (each contributes two
    constraints against six unknowns).
    """

    world_points: dict[int, np.ndarray]
    image_points: dict[int, np.ndarray]

    def __post_init__(self):
        common = self.correspondence_ids()
        if len(common) < 3:
            raise ValueError(f"need >= 3 marker correspondences, got {len(common)}")

    def correspondence_ids(self) -> list[int]:
        return sorted(set(self.world_points) & set(self.image_points))


@dataclass(frozen=True)
class ChessboardPrior:
    """Rough camera-in-world pose with its stated uncertainty scale."""

    prior_pose: Pose
    position_uncertainty: float = 40.0  # mm
    orientation_uncertainty: float = np.deg2rad(5.0)  # rad

    def __post_init__(self):
        if self.position_uncertainty < 0 or self.orientation_uncertainty < 0:
            raise ValueError("uncertainties must be >= 0")


def marker_residuals(candidate: np.ndarray, intrinsics: Intrinsics,
                     markers: MarkerSet) -> np.ndarray:
    """Stacked 2-vector reprojection residuals for a candidate 6-vector pose.

    Residual order follows sorted marker id. A marker behind the
    candidate camera raises BehindCameraError; the solver wrapper turns
    that into a rejected step by reporting infinite residuals.
    """
    cam = intrinsics.camera_at(Pose.from_xyz_euler(candidate))
    ids = markers.correspondence_ids()
    out = np.empty(2 * len(ids))
    for i, mid in enumerate(ids):
        predicted = project(cam, markers.world_points[mid])
        out[2 * i: 2 * i + 2] = markers.image_points[mid] - predicted
    return out


def reprojection_rms(pose: Pose, intrinsics: Intrinsics, markers: MarkerSet) -> float:
    r = marker_residuals(pose.to_xyz_euler(), intrinsics, markers)
    return float(np.sqrt(np.mean(r ** 2)))


def refine_camera_pose(prior: ChessboardPrior, intrinsics: Intrinsics,
                       markers: MarkerSet, cfg: LMConfig = LMConfig()) -> Pose:
    """LM-refine the prior pose against the marker reprojection residuals.

    Guarantees the returned pose never reprojects worse than the prior;
    raises :class:`CalibrationError` (carrying the best pose so far) if
    LM stops without converging.
    """
    x0 = prior.prior_pose.to_xyz_euler()

    def residuals(params):
        try:
            return marker_residuals(params, intrinsics, markers)
        except BehindCameraError:
            # Reject candidates that put markers behind the camera.
            n = 2 * len(markers.correspondence_ids())
            return np.full(n, 1e12)

    result = levenberg_marquardt(residuals, x0, cfg)
    refined = Pose.from_xyz_euler(result.solution)
    if not result.converged:
        raise CalibrationError(
            f"pose refinement did not converge: {result.message}",
            best_pose=refined, final_cost=result.final_objective)
    # LM accepts only cost-reducing steps, so this cannot trigger; it
    # guards the contract against future solver changes.
    if reprojection_rms(refined, intrinsics, markers) > reprojection_rms(
            prior.prior_pose, intrinsics, markers) + 1e-12:
        return prior.prior_pose
    return refined


def synthetic_prior(true_pose: Pose, rng: np.random.Generator,
                    position_error: float = 40.0,
                    orientation_error: float = np.deg2rad(5.0)) -> ChessboardPrior:
    """Fake a chessboard-stage result: the true pose perturbed by a
    random offset of the given magnitudes (translation in mm, rotation
    angle in rad about a random axis)."""
    direction = rng.standard_normal(3)
    direction /= np.linalg.norm(direction)
    axis = rng.standard_normal(3)
    axis /= np.linalg.norm(axis)
    K = np.array([[0, -axis[2], axis[1]],
                  [axis[2], 0, -axis[0]],
                  [-axis[1], axis[0], 0]])
    dR = (np.eye(3) + np.sin(orientation_error) * K
          + (1 - np.cos(orientation_error)) * (K @ K))
    perturbed = Pose(true_pose.position + position_error * direction,
                     dR @ true_pose.rotation)
    return ChessboardPrior(perturbed, position_error, orientation_error)


# ---------------------------------------------------------------------------
# Correspondence and pose files
# ---------------------------------------------------------------------------

CORRESPONDENCE_HEADER = "# camera_id marker_id x_w_mm y_w_mm z_w_mm u_px v_px"
POSES_HEADER = "# camera_id x_mm y_mm z_mm alpha_rad beta_rad gamma_rad"


def write_correspondences(path, rows) -> None:
    """Rows of (camera_id, marker_id, x, y, z, u, v), one line each."""
    with open(path, "w") as fh:
        fh.write(CORRESPONDENCE_HEADER + "\n")
        for cam_id, mid, x, y, z, u, v in rows:
            fh.write(f"{int(cam_id)} {int(mid)} {x:.17g} {y:.17g} {z:.17g} "
                     f"{u:.17g} {v:.17g}\n")


def read_correspondences(path) -> dict[int, MarkerSet]:
    """Parse the correspondence file into one MarkerSet per camera."""
    world: dict[int, dict[int, np.ndarray]] = {}
    image: dict[int, dict[int, np.ndarray]] = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 7:
                raise ValueError(f"malformed correspondence row: {line!r}")
            cam_id, mid = int(parts[0]), int(parts[1])
            world.setdefault(cam_id, {})[mid] = np.array(
                [float(parts[2]), float(parts[3]), float(parts[4])])
            image.setdefault(cam_id, {})[mid] = np.array(
                [float(parts[5]), float(parts[6])])
    return {cid: MarkerSet(world[cid], image[cid]) for cid in sorted(world)}


def write_camera_poses(path, poses: dict[int, Pose]) -> None:
    with open(path, "w") as fh:
        fh.write(POSES_HEADER + "\n")
        for cam_id in sorted(poses):
            p = poses[cam_id].to_xyz_euler()
            fh.write(f"{int(cam_id)} " + " ".join(f"{v:.17g}" for v in p) + "\n")


def read_camera_poses(path) -> dict[int, Pose]:
    poses: dict[int, Pose] = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 7:
                raise ValueError(f"malformed pose row: {line!r}")
            poses[int(parts[0])] = Pose.from_xyz_euler([float(v) for v in parts[1:]])
    return poses
