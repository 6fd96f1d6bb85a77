"""Teleoperation-like joint trajectories.

Random Cartesian waypoints inside the workspace box are converted to
joint waypoints in closed form, then joined with minimum-jerk quintic
segments (zero velocity and acceleration at every waypoint). The
result is smooth, reproducible motion that sweeps the whole box.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from effpose import rig
from effpose.robot.kinematics import JOINT_LIMITS, check_joint_limits, workspace_to_joints

DEFAULT_WAYPOINT_PERIOD = 3.0  # seconds between waypoints


@dataclass(frozen=True)
class Trajectory:
    trajectory_id: int
    times: np.ndarray       # waypoint times, seconds, starting at 0
    waypoints: np.ndarray   # (n, 7) joint-space waypoints
    duration: float

    def __post_init__(self):
        if len(self.times) != len(self.waypoints):
            raise ValueError("times and waypoints must align")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("waypoint times must increase")
        for q in self.waypoints:
            check_joint_limits(q)

    def sample(self, t: np.ndarray):
        """Joint positions and velocities at times ``t`` (clamped to range).

        Within each segment the quintic s(tau) = 10 tau^3 - 15 tau^4 + 6 tau^5
        blends the two waypoints; its derivative gives the velocity.
        """
        t = np.clip(np.asarray(t, dtype=float), self.times[0], self.times[-1])
        seg = np.clip(np.searchsorted(self.times, t, side="right") - 1,
                      0, len(self.times) - 2)
        t0 = self.times[seg]
        t1 = self.times[seg + 1]
        q0 = self.waypoints[seg]
        q1 = self.waypoints[seg + 1]
        dt = t1 - t0
        tau = ((t - t0) / dt)[..., None]
        s = tau**3 * (10.0 - 15.0 * tau + 6.0 * tau**2)
        sdot = (30.0 * tau**2 - 60.0 * tau**3 + 30.0 * tau**4) / dt[..., None]
        return q0 + (q1 - q0) * s, (q1 - q0) * sdot


def _unwrap_yaw(prev_yaw: float, yaw: float) -> float:
    """Choose the 2-pi-equivalent yaw closest to the previous waypoint."""
    k = np.round((prev_yaw - yaw) / (2.0 * np.pi))
    candidate = yaw + 2.0 * np.pi * k
    lo, hi = JOINT_LIMITS[0]
    if candidate < lo or candidate > hi:
        candidate = yaw
    return float(candidate)


def generate_teleop_trajectories(count: int, duration: float, seed: int,
                                 workspace_low=None, workspace_high=None,
                                 waypoint_period: float = DEFAULT_WAYPOINT_PERIOD,
                                 margin: float = 0.0) -> list[Trajectory]:
    """Reproducible random trajectories spanning the workspace box.

    ``margin`` shrinks the sampled box on every side (useful when the
    rendered marker balls must stay inside the camera frustum).
    """
    low = np.asarray(rig.WORKSPACE_LOW if workspace_low is None else workspace_low,
                     dtype=float) + margin
    high = np.asarray(rig.WORKSPACE_HIGH if workspace_high is None else workspace_high,
                      dtype=float) - margin
    seeds = np.random.SeedSequence(seed).spawn(count)
    trajectories = []
    for tid, child in enumerate(seeds):
        rng = np.random.default_rng(child)
        n_segments = max(int(round(duration / waypoint_period)), 1)
        times = np.linspace(0.0, duration, n_segments + 1)
        waypoints = []
        prev = None
        for _ in range(n_segments + 1):
            target = rng.uniform(low, high)
            q = workspace_to_joints(target, rng=rng)
            if prev is not None:
                q[0] = _unwrap_yaw(prev[0], q[0])
            waypoints.append(q)
            prev = q
        trajectories.append(Trajectory(
            trajectory_id=tid, times=times,
            waypoints=np.asarray(waypoints), duration=float(duration)))
    return trajectories


def occupancy_coverage(positions: np.ndarray, bins: int = 8,
                       low=None, high=None) -> float:
    """Fraction of occupied cells in a bins^3 grid over the workspace box."""
    low = np.asarray(rig.WORKSPACE_LOW if low is None else low, dtype=float)
    high = np.asarray(rig.WORKSPACE_HIGH if high is None else high, dtype=float)
    pts = np.asarray(positions, dtype=float).reshape(-1, 3)
    idx = np.floor((pts - low) / (high - low) * bins).astype(int)
    idx = np.clip(idx, 0, bins - 1)
    flat = (idx[:, 0] * bins + idx[:, 1]) * bins + idx[:, 2]
    return float(np.unique(flat).size) / float(bins**3)
