"""End-effector pose from the three triangulated ball centers.

The marker rig puts the green ball on the effector frame's +x axis,
the yellow ball on +y and the red ball on -x, each at distance ``d``
from the effector point. Solving inverts that map: a six-parameter
simplex search over (x, y, z, alpha, beta, gamma) minimizes the summed
squared distance between observed and predicted ball centers, warm
started from a closed-form construction that is exact on noiseless
observations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from effpose.geometry import euler_to_rotmat, rotmat_to_euler
from effpose.optim import NMConfig, nelder_mead


class DegenerateBallGeometryError(ValueError):
    """The three ball centers are (nearly) collinear; no unique frame."""


@dataclass(frozen=True)
class MarkerRigSpec:
    center_distance: float = 38.0  # mm from effector point to each ball center
    ball_radius: float = 20.0      # mm
    # color -> unit offset direction in the effector frame
    color_axes = (("green", (1.0, 0.0, 0.0)),
                  ("yellow", (0.0, 1.0, 0.0)),
                  ("red", (-1.0, 0.0, 0.0)))

    def __post_init__(self):
        if self.center_distance <= 0 or self.ball_radius <= 0:
            raise ValueError("rig dimensions must be positive")

    def offsets(self) -> dict[str, np.ndarray]:
        d = self.center_distance
        return {color: d * np.asarray(axis) for color, axis in self.color_axes}


@dataclass(frozen=True)
class EffectorPose:
    position: np.ndarray          # mm, world frame
    euler: np.ndarray             # (alpha, beta, gamma), rad
    residual_cost: float = 0.0    # mm^2

    def __post_init__(self):
        if self.residual_cost < 0:
            raise ValueError("residual_cost must be >= 0")
        object.__setattr__(self, "position", np.asarray(self.position, float))
        object.__setattr__(self, "euler", np.asarray(self.euler, float))

    @property
    def rotation(self) -> np.ndarray:
        return euler_to_rotmat(*self.euler)

    def as_params(self) -> np.ndarray:
        return np.concatenate([self.position, self.euler])


def rig_forward(pose: EffectorPose, rig: MarkerRigSpec = MarkerRigSpec()):
    """Predicted (green, yellow, red) ball centers for a candidate pose.

    The three centers and the effector point are coplanar by
    construction (all offsets lie in the frame's xy plane).
    """
    R = pose.rotation
    d = rig.center_distance
    green = R @ np.array([d, 0.0, 0.0]) + pose.position
    yellow = R @ np.array([0.0, d, 0.0]) + pose.position
    red = R @ np.array([-d, 0.0, 0.0]) + pose.position
    return green, yellow, red


def rig_cost(pose: EffectorPose, observed_green, observed_yellow, observed_red,
             rig: MarkerRigSpec = MarkerRigSpec()) -> float:
    """Sum of squared distances between observed and predicted centers (mm^2)."""
    pg, py, pr = rig_forward(pose, rig)
    return float(
        np.sum((np.asarray(observed_green, float) - pg) ** 2)
        + np.sum((np.asarray(observed_yellow, float) - py) ** 2)
        + np.sum((np.asarray(observed_red, float) - pr) ** 2)
    )


def initial_guess(observed_green, observed_yellow, observed_red) -> EffectorPose:
    """Closed-form warm start: midpoint of green and red is the position;
    the axes toward green (x) and yellow (y, orthogonalized) fix the
    orientation. Exact whenever the observations are exact."""
    g = np.asarray(observed_green, dtype=float)
    y = np.asarray(observed_yellow, dtype=float)
    r = np.asarray(observed_red, dtype=float)
    p0 = (g + r) / 2.0
    x_axis = g - p0
    y_raw = y - p0
    cross = np.cross(x_axis, y_raw)
    nx, nc = np.linalg.norm(x_axis), np.linalg.norm(cross)
    if nx < 1e-9 or nc < 1e-9 * max(nx * np.linalg.norm(y_raw), 1e-30):
        raise DegenerateBallGeometryError("ball centers are collinear or coincident")
    x_axis = x_axis / nx
    y_axis = y_raw - (y_raw @ x_axis) * x_axis
    y_axis = y_axis / np.linalg.norm(y_axis)
    z_axis = np.cross(x_axis, y_axis)
    R = np.column_stack([x_axis, y_axis, z_axis])
    return EffectorPose(p0, rotmat_to_euler(R), residual_cost=0.0)


DEFAULT_NM = NMConfig(
    max_iterations=4000,
    simplex_tolerance=1e-12,
    # 1 mm position steps, 0.02 rad orientation steps
    initial_step=np.array([1.0, 1.0, 1.0, 0.02, 0.02, 0.02]),
)


class EffectorSolveError(RuntimeError):
    """Simplex search stopped before converging; carries best-so-far."""

    def __init__(self, message: str, best_pose: "EffectorPose"):
        super().__init__(message)
        self.best_pose = best_pose


def solve_effector_pose(observed_green, observed_yellow, observed_red,
                        rig: MarkerRigSpec = MarkerRigSpec(),
                        cfg: NMConfig = DEFAULT_NM) -> EffectorPose:
    """Nelder-Mead refinement of the closed-form initial guess.

    The returned ``residual_cost`` never exceeds the initial guess's
    cost. For noiseless observations the result matches the generating
    pose to solver precision.
    """
    guess = initial_guess(observed_green, observed_yellow, observed_red)
    g = np.asarray(observed_green, dtype=float)
    y = np.asarray(observed_yellow, dtype=float)
    r = np.asarray(observed_red, dtype=float)
    d = rig.center_distance

    def objective(params):
        # Inlined rig_cost: only the x/y columns of the rotation matter.
        ca, sa = np.cos(params[3]), np.sin(params[3])
        cb, sb = np.cos(params[4]), np.sin(params[4])
        cg, sg = np.cos(params[5]), np.sin(params[5])
        px, py_, pz = params[0], params[1], params[2]
        cxx, cxy, cxz = d * cg * cb, d * sg * cb, -d * sb
        cyx = d * (cg * sb * sa - sg * ca)
        cyy = d * (sg * sb * sa + cg * ca)
        cyz = d * cb * sa
        return (
            (g[0] - px - cxx) ** 2 + (g[1] - py_ - cxy) ** 2 + (g[2] - pz - cxz) ** 2
            + (y[0] - px - cyx) ** 2 + (y[1] - py_ - cyy) ** 2 + (y[2] - pz - cyz) ** 2
            + (r[0] - px + cxx) ** 2 + (r[1] - py_ + cxy) ** 2 + (r[2] - pz + cxz) ** 2
        )

    result = nelder_mead(objective, guess.as_params(), cfg)
    solved = EffectorPose(result.solution[:3], result.solution[3:],
                          residual_cost=result.final_objective)
    if not result.converged:
        raise EffectorSolveError(
            f"pose solve did not converge: {result.message}", solved)
    return solved
