"""Clocked simulation of one trajectory at the robot's update rate.

Every 1 ms tick produces a full state vector and the true end-effector
position. The encoder side reports the commanded/controlled joints;
the true joints additionally carry the cable error (stretch + backlash
+ noise), and the true Cartesian position carries the measurement
offsets. The reported pose is always the forward kinematics of the
reported joints, mirroring how the real message derives it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from effpose.robot.dataset import (
    Dataset,
    FIELD_SLICES,
    RAVENSTATE_SIZE,
    field_view,
)
from effpose.robot.errors import CableErrorModel, PlayOperator
from effpose.robot.kinematics import forward_kinematics_full
from effpose.robot.trajectories import Trajectory
from effpose.seeding import derived_rng

DEFAULT_RATE_HZ = 1000.0
CONTROL_LAG_S = 0.025  # first-order tracking lag of the joint controller

# Motor gear ratios (motor units per joint unit); plumbing realism only.
GEAR_RATIOS = np.array([20.0, 20.0, 5.0, 12.0, 12.0, 12.0, 12.0])

# Gravity/viscous torque model coefficients (synthetic).
GRAVITY_SHOULDER_YAW = 0.8
GRAVITY_SHOULDER_PITCH = 2.2
GRAVITY_INSERTION = 6.0
WRIST_LOAD = 0.25
VISCOUS = np.array([0.35, 0.4, 0.05, 0.08, 0.1, 0.02, 0.02])
GRASP_BIAS = 0.05

RUNLEVEL = 3.0


def motor_torques(q: np.ndarray, qdot: np.ndarray) -> np.ndarray:
    """Plausible smooth torque field: gravity-like terms plus viscous drag.

    Deterministic in (q, qdot), so the stretch error it drives is
    predictable from the state vector.
    """
    q = np.atleast_2d(q)
    qdot = np.atleast_2d(qdot)
    tau = VISCOUS * qdot
    lever = (300.0 + q[..., 2]) / 300.0
    tau[..., 0] += GRAVITY_SHOULDER_YAW * np.sin(q[..., 1]) * np.cos(q[..., 0])
    tau[..., 1] += GRAVITY_SHOULDER_PITCH * np.sin(q[..., 1]) * lever
    tau[..., 2] += GRAVITY_INSERTION * np.cos(q[..., 1])
    tau[..., 3] += WRIST_LOAD * np.sin(q[..., 4])
    tau[..., 4] += WRIST_LOAD * np.sin(q[..., 1] + q[..., 4])
    tau[..., 5] += GRASP_BIAS
    tau[..., 6] += GRASP_BIAS
    return tau


@dataclass(frozen=True)
class RavenStateRecord:
    """One 1 ms sample: timestamp plus the 118-float state vector."""

    timestamp: float
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (RAVENSTATE_SIZE,):
            raise ValueError(f"state vector must have {RAVENSTATE_SIZE} floats")
        object.__setattr__(self, "values", v)

    def field(self, name: str) -> np.ndarray:
        return field_view(self.values, name)

    @property
    def reported_position(self) -> np.ndarray:
        return self.values[0:3]


def _trajectory_rng(seed: int, trajectory_id: int) -> np.random.Generator:
    return derived_rng(seed, "trajectory", trajectory_id)


def simulate_chunks(traj: Trajectory, err: CableErrorModel,
                    rate: float = DEFAULT_RATE_HZ, seed: int = 0,
                    chunk_size: int = 20000):
    """Yield dict chunks of the full-rate simulation.

    Keys: ``t`` (n,), ``state`` (n, 118), ``true_position`` (n, 3),
    ``true_rotation`` (n, 3, 3). Fully determined by (trajectory,
    error model, rate, seed).
    """
    rng = _trajectory_rng(seed, traj.trajectory_id)
    restart_offset = (err.restart_offset_sigma * rng.standard_normal(3)
                      if err.restart_offset_sigma > 0 else np.zeros(3))
    offset = err.static_offset + restart_offset

    dt = 1.0 / rate
    n_total = int(np.floor(traj.duration * rate)) + 1
    alpha = dt / (CONTROL_LAG_S + dt)
    b_iir, a_iir = [alpha], [1.0, -(1.0 - alpha)]

    q0 = traj.waypoints[0].astype(float)
    lag_prev = q0.copy()          # encoder joints at the previous tick
    play = PlayOperator(err.backlash, q0)
    prev_rep_pos = None           # for Cartesian velocity differencing
    prev_des_pos = None

    start = 0
    while start < n_total:
        idx = np.arange(start, min(start + chunk_size, n_total))
        n = idx.size
        t = idx * dt
        q_d, qd_d = traj.sample(t)

        # Encoder-side joints: first-order lag behind the desired ones.
        q_c = np.empty_like(q_d)
        for j in range(7):
            q_c[:, j], _ = signal.lfilter(
                b_iir, a_iir, q_d[:, j],
                zi=np.array([(1.0 - alpha) * lag_prev[j]]))
        qd_c = np.diff(np.vstack([lag_prev[None, :], q_c]), axis=0) / dt
        if start == 0:
            qd_c[0] = 0.0
        lag_prev = q_c[-1].copy()

        tau = motor_torques(q_c, qd_c)

        # True joints: encoder joints through backlash, plus stretch and noise.
        q_true = play.advance(q_c)
        q_true = q_true + err.stretch_gain * tau
        if np.any(err.noise_sigma > 0):
            q_true = q_true + err.noise_sigma * rng.standard_normal(q_true.shape)

        rep_pos, rep_rot = forward_kinematics_full(q_c, validate=False)
        des_pos, des_rot = forward_kinematics_full(q_d, validate=False)
        true_pos, true_rot = forward_kinematics_full(q_true, validate=False)
        true_pos = true_pos + offset

        cart_vel = np.diff(
            np.vstack([(rep_pos[0] if prev_rep_pos is None else prev_rep_pos)[None, :],
                       rep_pos]), axis=0) / dt
        des_cart_vel = np.diff(
            np.vstack([(des_pos[0] if prev_des_pos is None else prev_des_pos)[None, :],
                       des_pos]), axis=0) / dt
        prev_rep_pos = rep_pos[-1].copy()
        prev_des_pos = des_pos[-1].copy()

        state = np.zeros((n, RAVENSTATE_SIZE))
        state[:, 0:3] = rep_pos
        state[:, 3:12] = rep_rot.reshape(n, 9)
        state[:, 12:15] = des_pos
        state[:, 15:24] = des_rot.reshape(n, 9)
        state[:, 24:31] = q_c
        state[:, 31:38] = q_d
        state[:, 38:45] = qd_c * GEAR_RATIOS
        state[:, 45:52] = qd_c
        state[:, 52:59] = tau
        state[:, 59:66] = q_c * GEAR_RATIOS
        state[:, 66:73] = q_d * GEAR_RATIOS
        state[:, 73:80] = qd_d
        state[:, 80:83] = cart_vel
        state[:, 83:86] = des_cart_vel
        state[:, 86:88] = q_d[:, 5:7]
        state[:, 88:90] = q_c[:, 5:7]
        state[:, 90] = RUNLEVEL
        state[:, 91] = 0.0
        state[:, 92] = idx
        # 93:118 stays zero (padding)

        yield {"t": t, "state": state, "true_position": true_pos,
               "true_rotation": true_rot}
        start += n


def simulate_run(traj: Trajectory, err: CableErrorModel,
                 rate: float = DEFAULT_RATE_HZ, seed: int = 0):
    """Stream of (RavenStateRecord, true_position) at the full rate."""
    for chunk in simulate_chunks(traj, err, rate=rate, seed=seed):
        for i in range(chunk["t"].size):
            yield (RavenStateRecord(float(chunk["t"][i]), chunk["state"][i]),
                   chunk["true_position"][i])


def build_dataset(trajectories, err: CableErrorModel,
                  rate: float = DEFAULT_RATE_HZ, seed: int = 0,
                  record_period_s: float = 0.17) -> Dataset:
    """Subsample full-rate runs at the recording cadence into a Dataset.

    Labels are err = true - reported position (mm). Trajectory
    timestamps are offset so the dataset's clock is continuous.
    """
    stride = max(int(round(record_period_s * rate)), 1)
    ts_parts, feat_parts, label_parts, id_parts = [], [], [], []
    t_base = 0.0
    for traj in trajectories:
        for chunk in simulate_chunks(traj, err, rate=rate, seed=seed):
            # absolute sample indices in this chunk
            abs_idx = np.round(chunk["t"] * rate).astype(int)
            take = (abs_idx % stride == 0)
            if not np.any(take):
                continue
            ts_parts.append(chunk["t"][take] + t_base)
            feat_parts.append(chunk["state"][take])
            label_parts.append(chunk["true_position"][take]
                               - chunk["state"][take][:, 0:3])
            id_parts.append(np.full(int(take.sum()), traj.trajectory_id,
                                    dtype=np.int64))
        t_base += traj.duration + record_period_s
    return Dataset(
        timestamps=np.concatenate(ts_parts),
        features=np.vstack(feat_parts),
        labels=np.vstack(label_parts),
        trajectory_ids=np.concatenate(id_parts),
    )
