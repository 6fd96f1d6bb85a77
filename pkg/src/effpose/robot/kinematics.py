"""Synthetic 7-joint serial chain standing in for a cable-driven arm.

The structure mimics a surgical spherical arm without claiming
fidelity: two revolute shoulder axes intersecting at the base point, a
prismatic insertion along the tool axis, a tool-roll joint, a wrist
pitch, and two grasper fingers whose mean angle tilts the grasp point.
The base hangs above the workspace pointing down.

Joint vector q (length 7):
    q[0] shoulder yaw   (rad, about the base z axis)
    q[1] shoulder pitch (rad, tilt of the tool axis from straight down)
    q[2] insertion      (mm, added to the 300 mm base insertion offset)
    q[3] tool roll      (rad, about the tool axis)
    q[4] wrist pitch    (rad)
    q[5] finger A       (rad)
    q[6] finger B       (rad)
"""

from __future__ import annotations

import numpy as np

BASE_POSITION = np.array([0.0, 0.0, 520.0])  # mm, world frame
# Base frame flips z so the tool points downward at q = 0.
BASE_ROTATION = np.array([[1.0, 0.0, 0.0],
                          [0.0, -1.0, 0.0],
                          [0.0, 0.0, -1.0]])

INSERTION_OFFSET = 300.0   # mm along the tool axis at q[2] = 0
WRIST_LINK = 12.0          # mm
GRASP_LINK = 10.0          # mm

JOINT_LIMITS = np.array([
    [-2.0 * np.pi, 2.0 * np.pi],   # yaw, unwrapped
    [0.0, 0.8],                    # pitch from vertical
    [0.0, 380.0],                  # insertion, mm (0 = fully retracted)
    [-np.pi, np.pi],               # tool roll
    [-1.2, 1.2],                   # wrist pitch
    [-0.2, 1.2],                   # finger A
    [-0.2, 1.2],                   # finger B
])


class JointLimitError(ValueError):
    pass


def check_joint_limits(q: np.ndarray) -> None:
    q = np.asarray(q, dtype=float)
    low, high = JOINT_LIMITS[:, 0], JOINT_LIMITS[:, 1]
    if np.any(q < low - 1e-9) or np.any(q > high + 1e-9):
        bad = np.nonzero((q < low - 1e-9) | (q > high + 1e-9))[-1]
        raise JointLimitError(f"joint(s) {sorted(set(bad.tolist()))} out of limits")


def _rot_z_batch(a):
    c, s = np.cos(a), np.sin(a)
    z = np.zeros_like(c)
    o = np.ones_like(c)
    return np.stack([np.stack([c, -s, z], -1),
                     np.stack([s, c, z], -1),
                     np.stack([z, z, o], -1)], -2)


def _rot_y_batch(a):
    c, s = np.cos(a), np.sin(a)
    z = np.zeros_like(c)
    o = np.ones_like(c)
    return np.stack([np.stack([c, z, s], -1),
                     np.stack([z, o, z], -1),
                     np.stack([-s, z, c], -1)], -2)


def _rot_x_batch(a):
    c, s = np.cos(a), np.sin(a)
    z = np.zeros_like(c)
    o = np.ones_like(c)
    return np.stack([np.stack([o, z, z], -1),
                     np.stack([z, c, -s], -1),
                     np.stack([z, s, c], -1)], -2)


def forward_kinematics_full(q: np.ndarray, validate: bool = True):
    """Positions and orientations for a (..., 7) joint array.

    Returns (positions (..., 3) mm world frame, rotations (..., 3, 3)
    world orientation of the grasp frame).
    """
    q = np.asarray(q, dtype=float)
    if validate:
        check_joint_limits(q)
    single = q.ndim == 1
    q = np.atleast_2d(q)

    R12 = _rot_z_batch(q[..., 0]) @ _rot_y_batch(q[..., 1])
    R4 = R12 @ _rot_z_batch(q[..., 3])
    R5 = R4 @ _rot_y_batch(q[..., 4])
    R6 = R5 @ _rot_x_batch(0.5 * (q[..., 5] + q[..., 6]))

    tool_dir = R12[..., :, 2]
    depth = INSERTION_OFFSET + q[..., 2]
    p_base = (tool_dir * depth[..., None]
              + WRIST_LINK * R5[..., :, 2]
              + GRASP_LINK * R6[..., :, 2])

    positions = p_base @ BASE_ROTATION.T + BASE_POSITION
    rotations = BASE_ROTATION @ R6
    if single:
        return positions[0], rotations[0]
    return positions, rotations


def forward_kinematics(q: np.ndarray, validate: bool = True) -> np.ndarray:
    """End-effector point only; batched like :func:`forward_kinematics_full`."""
    return forward_kinematics_full(q, validate=validate)[0]


HOME_POSITION = forward_kinematics(np.zeros(7))


def workspace_to_joints(target: np.ndarray, rng: np.random.Generator | None = None,
                        wrist: np.ndarray | None = None) -> np.ndarray:
    """Joints that put the wrist point near a world target (closed form).

    The first three joints are exact spherical coordinates of the
    target in the base frame (the small wrist/grasp links are ignored,
    so the realized effector point sits within ~22 mm of the target).
    Wrist joints are taken from ``wrist`` or drawn from ``rng``.
    """
    v = BASE_ROTATION.T @ (np.asarray(target, dtype=float) - BASE_POSITION)
    s = float(np.linalg.norm(v))
    q2 = float(np.arccos(np.clip(v[2] / s, -1.0, 1.0)))
    q1 = float(np.arctan2(v[1], v[0])) if q2 > 1e-9 else 0.0
    q3 = s - INSERTION_OFFSET
    if wrist is None:
        if rng is None:
            wrist = np.zeros(4)
        else:
            wrist = np.array([rng.uniform(-1.0, 1.0), rng.uniform(-0.6, 0.6),
                              rng.uniform(0.0, 0.8), rng.uniform(0.0, 0.8)])
    q = np.array([q1, q2, q3, wrist[0], wrist[1], wrist[2], wrist[3]])
    check_joint_limits(q)
    return q


def numeric_jacobian(q: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central-difference position Jacobian (3 x 7), mm per joint unit."""
    q = np.asarray(q, dtype=float)
    J = np.empty((3, 7))
    for i in range(7):
        qp, qm = q.copy(), q.copy()
        qp[i] += h
        qm[i] -= h
        J[:, i] = (forward_kinematics(qp, validate=False)
                   - forward_kinematics(qm, validate=False)) / (2 * h)
    return J
