"""Two-phase end-effector position precision toolkit.

Phase one measures ground-truth end-effector position with a calibrated
multi-camera ball-tracking rig; phase two trains a neural network that
corrects the kinematics-reported position of a cable-driven robot.
Everything here runs against a synthetic robot and synthetic camera
scenes, so the full pipeline is reproducible on a desk machine.
"""

__version__ = "0.1.0"

from effpose.geometry import (
    CameraModel,
    Pose,
    Ray,
    backproject,
    euler_to_rotmat,
    is_gimbal_locked,
    project,
    rotmat_to_euler,
)

__all__ = [
    "CameraModel",
    "Pose",
    "Ray",
    "backproject",
    "euler_to_rotmat",
    "is_gimbal_locked",
    "project",
    "rotmat_to_euler",
    "__version__",
]
