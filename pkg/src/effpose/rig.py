"""Synthetic stand-in for the physical capture rig.

Four cameras surround a desk-scale workspace, looking at its center
from above; 16 calibration markers sit on posts at 8 floor locations.
All values are in millimeters and are deliberately round numbers: the
rig is a test fixture, not a claim about any physical setup.
"""

from __future__ import annotations

import numpy as np

from effpose.geometry import CameraModel, Pose

# Axis-aligned box the end effector moves in (mm, world frame).
WORKSPACE_LOW = np.array([-150.0, -150.0, -100.0])
WORKSPACE_HIGH = np.array([150.0, 150.0, 100.0])

# 720p webcams with a mildly tele lens: at this distance/width the
# depth uncertainty of a refined camera pose stays well under 1 mm for
# half-pixel observation noise.
DEFAULT_FOCAL_LENGTH = 1000.0
DEFAULT_IMAGE_SIZE = (1280, 720)
DEFAULT_PRINCIPAL_POINT = np.array([640.0, 360.0])

CAMERA_RING_RADIUS = 650.0
CAMERA_HEIGHT = 400.0
CAMERA_TARGET = np.array([0.0, 0.0, -60.0])

MARKER_RING_RADIUS = 240.0
FLOOR_Z = -160.0
POST_HEIGHT = 180.0


def look_at(position, target, up=(0.0, 0.0, 1.0)) -> Pose:
    """Camera pose whose optical axis (+z) points from position to target.

    Camera +x is chosen horizontal (perpendicular to world up), +y
    completes the right-handed frame (pointing roughly downward).
    """
    position = np.asarray(position, dtype=float)
    z_axis = np.asarray(target, dtype=float) - position
    z_axis = z_axis / np.linalg.norm(z_axis)
    up = np.asarray(up, dtype=float)
    x_axis = np.cross(z_axis, up)
    n = np.linalg.norm(x_axis)
    if n < 1e-9:
        raise ValueError("view direction is parallel to the up vector")
    x_axis /= n
    y_axis = np.cross(z_axis, x_axis)
    return Pose(position, np.column_stack([x_axis, y_axis, z_axis]))


def default_cameras() -> list[CameraModel]:
    """Four cameras at the workspace corners, elevated, aimed just below
    the workspace center so both the marker field and the full motion
    box stay in frame."""
    cams = []
    for k in range(4):
        angle = np.deg2rad(45.0 + 90.0 * k)
        position = np.array(
            [
                CAMERA_RING_RADIUS * np.cos(angle),
                CAMERA_RING_RADIUS * np.sin(angle),
                CAMERA_HEIGHT,
            ]
        )
        cams.append(
            CameraModel(
                pose=look_at(position, CAMERA_TARGET),
                focal_length=DEFAULT_FOCAL_LENGTH,
                principal_point=DEFAULT_PRINCIPAL_POINT.copy(),
                image_size=DEFAULT_IMAGE_SIZE,
            )
        )
    return cams


def default_markers() -> dict[int, np.ndarray]:
    """16 marker points: 8 floor locations, each with a raised twin.

    The raised twins break coplanarity, which conditions the pose
    refinement much better than a flat marker field.
    """
    markers: dict[int, np.ndarray] = {}
    mid = 0
    for k in range(8):
        angle = np.deg2rad(22.5 + 45.0 * k)
        x = MARKER_RING_RADIUS * np.cos(angle)
        y = MARKER_RING_RADIUS * np.sin(angle)
        markers[mid] = np.array([x, y, FLOOR_Z])
        markers[mid + 1] = np.array([x, y, FLOOR_Z + POST_HEIGHT])
        mid += 2
    return markers
