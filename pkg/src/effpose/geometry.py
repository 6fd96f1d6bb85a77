"""Shared 3D geometry: rotations, poses, rays and the pinhole camera.

Conventions used throughout the package:

* world units are millimeters, image units are pixels;
* rotations are right-handed 3x3 orthonormal matrices;
* Euler angles (alpha, beta, gamma) compose as
  ``R = Rot(z, gamma) @ Rot(y, beta) @ Rot(x, alpha)``;
* the camera looks along its local +z axis, +x right, +y down,
  zero skew, no lens distortion.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ORTHONORMAL_TOL = 1e-9
GIMBAL_LOCK_TOL = 1e-12


class BehindCameraError(ValueError):
    """Raised when a world point is at or behind the camera plane."""


def _as_vec3(p) -> np.ndarray:
    v = np.asarray(p, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"expected 3-vector, got shape {v.shape}")
    return v


def rot_x(angle: float) -> np.ndarray:
    """Elementary rotation about the x axis."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(angle: float) -> np.ndarray:
    """Elementary rotation about the y axis."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(angle: float) -> np.ndarray:
    """Elementary rotation about the z axis."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def euler_to_rotmat(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """Compose ``Rot(z, gamma) @ Rot(y, beta) @ Rot(x, alpha)`` in closed form.

    The closed form is algebraically identical to the triple matrix
    product but cheaper, which matters inside simplex-search objectives.
    """
    ca, sa = np.cos(alpha), np.sin(alpha)
    cb, sb = np.cos(beta), np.sin(beta)
    cg, sg = np.cos(gamma), np.sin(gamma)
    return np.array(
        [
            [cg * cb, cg * sb * sa - sg * ca, cg * sb * ca + sg * sa],
            [sg * cb, sg * sb * sa + cg * ca, sg * sb * ca - cg * sa],
            [-sb, cb * sa, cb * ca],
        ]
    )


def is_gimbal_locked(R: np.ndarray) -> bool:
    """True when |R[2,0]| is within 1e-12 of 1, i.e. |beta| = pi/2.

    At gimbal lock the z-y-x decomposition is not unique; callers that
    need a unique inverse should test this first.
    """
    return bool(abs(R[2, 0]) > 1.0 - GIMBAL_LOCK_TOL)


def rotmat_to_euler(R: np.ndarray) -> np.ndarray:
    """Invert :func:`euler_to_rotmat`; returns (alpha, beta, gamma).

    Away from gimbal lock the decomposition is unique and round-trips to
    1e-9. At gimbal lock (see :func:`is_gimbal_locked`) one consistent
    decomposition is returned with gamma fixed to 0.
    """
    R = np.asarray(R, dtype=float)
    check_rotation(R)
    if is_gimbal_locked(R):
        # beta = +-pi/2 collapses alpha and gamma into one degree of freedom.
        beta = -np.arcsin(np.clip(R[2, 0], -1.0, 1.0))
        alpha = np.arctan2(-np.sign(R[2, 0]) * R[0, 1], R[1, 1])
        return np.array([alpha, beta, 0.0])
    beta = -np.arcsin(np.clip(R[2, 0], -1.0, 1.0))
    alpha = np.arctan2(R[2, 1], R[2, 2])
    gamma = np.arctan2(R[1, 0], R[0, 0])
    return np.array([alpha, beta, gamma])


def check_rotation(R: np.ndarray, tol: float = ORTHONORMAL_TOL) -> None:
    """Raise ValueError unless R is orthonormal with determinant +1."""
    if R.shape != (3, 3):
        raise ValueError(f"rotation must be 3x3, got {R.shape}")
    if not np.allclose(R.T @ R, np.eye(3), atol=tol):
        raise ValueError("matrix is not orthonormal")
    if abs(np.linalg.det(R) - 1.0) > 1e-6:
        raise ValueError("matrix is not a proper rotation (det != +1)")


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform random rotation via QR of a Gaussian matrix."""
    M = rng.standard_normal((3, 3))
    Q, Rr = np.linalg.qr(M)
    Q *= np.sign(np.diag(Rr))
    if np.linalg.det(Q) < 0:
        Q[:, 2] = -Q[:, 2]
    return Q


@dataclass(frozen=True)
class Pose:
    """Rigid frame: position (mm) and orientation of a body in the world."""

    position: np.ndarray
    rotation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", _as_vec3(self.position))
        R = np.asarray(self.rotation, dtype=float)
        check_rotation(R)
        object.__setattr__(self, "rotation", R)

    def transform(self, p_local) -> np.ndarray:
        """Map a point from this frame into the world frame."""
        return self.rotation @ _as_vec3(p_local) + self.position

    def inverse_transform(self, p_world) -> np.ndarray:
        """Map a world point into this frame."""
        return self.rotation.T @ (_as_vec3(p_world) - self.position)

    def compose(self, other: "Pose") -> "Pose":
        """This pose applied after ``other`` (``self`` is the outer frame)."""
        return Pose(
            self.rotation @ other.position + self.position,
            self.rotation @ other.rotation,
        )

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.zeros(3), np.eye(3))

    @staticmethod
    def from_xyz_euler(params) -> "Pose":
        """Build from a 6-vector (x, y, z, alpha, beta, gamma)."""
        params = np.asarray(params, dtype=float)
        return Pose(params[:3], euler_to_rotmat(*params[3:6]))

    def to_xyz_euler(self) -> np.ndarray:
        """Inverse of :meth:`from_xyz_euler` away from gimbal lock."""
        return np.concatenate([self.position, rotmat_to_euler(self.rotation)])


@dataclass(frozen=True)
class Ray:
    """Half-line in world coordinates with unit direction."""

    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "origin", _as_vec3(self.origin))
        d = _as_vec3(self.direction)
        n = np.linalg.norm(d)
        if n == 0.0 or not np.isfinite(n):
            raise ValueError("ray direction must be nonzero and finite")
        object.__setattr__(self, "direction", d / n)

    def point_at(self, t: float) -> np.ndarray:
        return self.origin + t * self.direction

    def distance_to_point(self, p) -> float:
        """Perpendicular distance from a point to the (infinite) line."""
        w = _as_vec3(p) - self.origin
        return float(np.linalg.norm(w - (w @ self.direction) * self.direction))


@dataclass(frozen=True)
class CameraModel:
    """Pinhole camera: world pose plus intrinsics (f, principal point)."""

    pose: Pose
    focal_length: float
    principal_point: np.ndarray
    image_size: tuple[int, int]  # (width, height) pixels

    def __post_init__(self):
        if self.focal_length <= 0:
            raise ValueError("focal length must be positive")
        pp = np.asarray(self.principal_point, dtype=float)
        if pp.shape != (2,):
            raise ValueError("principal point must be a 2-vector")
        w, h = self.image_size
        if not (0 <= pp[0] < w and 0 <= pp[1] < h):
            raise ValueError("principal point outside image bounds")
        object.__setattr__(self, "principal_point", pp)
        object.__setattr__(self, "image_size", (int(w), int(h)))


def project(cam: CameraModel, p_world) -> np.ndarray:
    """Project a world point to pixel coordinates.

    Raises :class:`BehindCameraError` for points at or behind the
    camera plane (non-positive depth along the optical axis).
    """
    p_cam = cam.pose.inverse_transform(p_world)
    if p_cam[2] <= 0.0:
        raise BehindCameraError(f"point has non-positive depth {p_cam[2]:.3f}")
    return cam.focal_length * p_cam[:2] / p_cam[2] + cam.principal_point


def project_many(cam: CameraModel, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized projection of an (n, 3) array.

    Returns (pixels (n, 2), depths (n,)); the caller decides how to
    treat non-positive depths.
    """
    pts = np.asarray(pts, dtype=float).reshape(-1, 3)
    p_cam = (pts - cam.pose.position) @ cam.pose.rotation
    depths = p_cam[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        pix = cam.focal_length * p_cam[:, :2] / depths[:, None] + cam.principal_point
    return pix, depths


def backproject(cam: CameraModel, pixel) -> Ray:
    """Ray from the camera center through a pixel.

    The unnormalized direction is ``R_cam_world @ [u - cx, v - cy, f]``:
    the world-frame vector from the lens toward the pixel's viewing
    direction. Any world point imaged at ``pixel`` lies on this ray.
    """
    pixel = np.asarray(pixel, dtype=float)
    d_cam = np.array(
        [
            pixel[0] - cam.principal_point[0],
            pixel[1] - cam.principal_point[1],
            cam.focal_length,
        ]
    )
    return Ray(cam.pose.position, cam.pose.rotation @ d_cam)


def backproject_direction_unnormalized(cam: CameraModel, pixel) -> np.ndarray:
    """World-frame ``R @ [u - cx, v - cy, f]`` without normalization.

    Kept separate from :func:`backproject` because the componentwise
    ratio identity between this vector and the camera-to-point vector
    is stated on the unnormalized form.
    """
    pixel = np.asarray(pixel, dtype=float)
    d_cam = np.array(
        [
            pixel[0] - cam.principal_point[0],
            pixel[1] - cam.principal_point[1],
            cam.focal_length,
        ]
    )
    return cam.pose.rotation @ d_cam
