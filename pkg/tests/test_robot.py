import numpy as np
import pytest

from effpose import rig
from effpose.robot import (
    CableErrorModel,
    Dataset,
    HOME_POSITION,
    RAVENSTATE_SIZE,
    RavenStateRecord,
    build_dataset,
    forward_kinematics,
    forward_kinematics_full,
    generate_teleop_trajectories,
    read_dataset,
    simulate_run,
    workspace_to_joints,
    write_dataset,
    write_dataset_text,
)
from effpose.robot.dataset import field_view
from effpose.robot.kinematics import JointLimitError, numeric_jacobian
from effpose.robot.trajectories import Trajectory, occupancy_coverage


def mid_config():
    return np.array([0.4, 0.45, 220.0, 0.3, -0.2, 0.3, 0.4])


class TestForwardKinematics:
    def test_zero_configuration_is_home(self):
        assert np.allclose(forward_kinematics(np.zeros(7)), HOME_POSITION)
        assert np.allclose(HOME_POSITION, [0.0, 0.0, 198.0])

    def test_single_and_batched_agree(self):
        rng = np.random.default_rng(3)
        qs = np.stack([mid_config() + rng.normal(0, 0.05, 7) for _ in range(10)])
        batch = forward_kinematics(qs, validate=False)
        for i in range(10):
            assert np.allclose(batch[i], forward_kinematics(qs[i], validate=False))

    def test_directional_response_matches_jacobian_column(self):
        # perturb joint i by delta: position change = J_i * delta + O(delta^2),
        # with the curvature constant bounded by the ~550 mm arm scale
        q = mid_config()
        J = numeric_jacobian(q)
        for i in range(7):
            residuals = []
            for delta in (1e-3, 1e-4):
                qp = q.copy()
                qp[i] += delta
                moved = forward_kinematics(qp) - forward_kinematics(q)
                residuals.append(np.linalg.norm(moved - J[:, i] * delta))
                assert residuals[-1] < 600.0 * delta**2
            # second order: ten times smaller delta, ~hundred times smaller residual
            assert residuals[1] < residuals[0] / 50.0 + 1e-12

    def test_insertion_moves_along_tool_axis(self):
        q = mid_config()
        qp = q.copy()
        qp[2] += 10.0
        moved = forward_kinematics(qp) - forward_kinematics(q)
        assert np.isclose(np.linalg.norm(moved), 10.0, atol=1e-9)
        # direction equals the tool axis for this configuration
        J3 = numeric_jacobian(q)[:, 2]
        assert np.allclose(moved / 10.0, J3, atol=1e-6)

    def test_out_of_limit_rejected(self):
        q = mid_config()
        q[2] = 1e4
        with pytest.raises(JointLimitError):
            forward_kinematics(q)

    def test_workspace_ik_round_trip(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            target = rng.uniform(rig.WORKSPACE_LOW, rig.WORKSPACE_HIGH)
            q = workspace_to_joints(target, rng=rng)
            realized = forward_kinematics(q)
            # wrist/grasp links offset the point by at most 22 mm
            assert np.linalg.norm(realized - target) <= 22.0 + 1e-9


class TestTrajectories:
    def test_fixed_seed_bitwise_identical(self):
        a = generate_teleop_trajectories(5, 20.0, seed=9)
        b = generate_teleop_trajectories(5, 20.0, seed=9)
        for ta, tb in zip(a, b):
            assert np.array_equal(ta.waypoints, tb.waypoints)
            assert np.array_equal(ta.times, tb.times)

    def test_sampling_hits_waypoints_with_zero_velocity(self):
        traj = generate_teleop_trajectories(1, 9.0, seed=2)[0]
        q, qd = traj.sample(traj.times)
        assert np.allclose(q, traj.waypoints, atol=1e-9)
        assert np.allclose(qd, 0.0, atol=1e-9)

    def test_paper_scale_run_counts_and_coverage(self):
        # 140 minutes at 1000 Hz -> 8.4M raw samples; at the recording
        # cadence the pair count lands within 0.5% of 49,407.
        rate = 1000.0
        count, duration = 35, 240.0
        trajs = generate_teleop_trajectories(count, duration, seed=7)
        raw = sum(int(np.floor(t.duration * rate)) + 1 for t in trajs)
        assert abs(raw - 8.4e6) < 1e3
        ds = build_dataset(trajs, CableErrorModel.zero(), seed=7,
                           record_period_s=0.17)
        assert abs(len(ds) - 49407) / 49407 < 0.005
        cov = occupancy_coverage(ds.features[:, 0:3])
        assert cov >= 0.9

    def test_rejects_misaligned_waypoints(self):
        with pytest.raises(ValueError):
            Trajectory(0, np.array([0.0, 1.0]), np.zeros((3, 7)), 1.0)


def one_joint_sine_trajectory(joint: int, amplitude: float, base_q: np.ndarray,
                              periods: int = 3, period_s: float = 8.0):
    """Slow sign-reversing motion on one joint via waypoints."""
    times, points = [], []
    for k in range(2 * periods + 1):
        q = base_q.copy()
        q[joint] += amplitude * (1 if k % 2 == 0 else -1)
        times.append(k * period_s / 2)
        points.append(q)
    return Trajectory(0, np.array(times), np.asarray(points), times[-1])


class TestSimulateRun:
    def test_zero_error_model_reported_equals_true(self):
        traj = generate_teleop_trajectories(1, 6.0, seed=11)[0]
        for record, true_pos in simulate_run(traj, CableErrorModel.zero(), seed=11):
            assert np.array_equal(record.reported_position, true_pos)

    def test_timestamps_at_one_ms_spacing(self):
        traj = generate_teleop_trajectories(1, 0.5, seed=1)[0]
        ts = [rec.timestamp for rec, _ in simulate_run(traj, CableErrorModel.zero())]
        assert np.allclose(np.diff(ts), 1e-3, atol=1e-12)

    def test_backlash_hysteresis_loop_width(self):
        b = 5e-3
        base = mid_config()
        model = CableErrorModel(
            stretch_gain=np.zeros(7),
            backlash=np.array([b, 0, 0, 0, 0, 0, 0]),
            noise_sigma=np.zeros(7),
            static_offset=np.zeros(3), restart_offset_sigma=0.0)
        traj = one_joint_sine_trajectory(0, 0.25, base)
        errs, vels = [], []
        for record, true_pos in simulate_run(traj, model, seed=0):
            errs.append(true_pos - record.reported_position)
            vels.append(record.field("joint_vel")[0])
        errs, vels = np.asarray(errs), np.asarray(vels)
        J1 = numeric_jacobian(base)[:, 0]
        direction = J1 / np.linalg.norm(J1)
        proj = errs @ direction
        fast = np.abs(vels) > 0.05  # backlash fully engaged while moving
        width = proj[fast & (vels < 0)].mean() - proj[fast & (vels > 0)].mean()
        assert np.isclose(width, 2 * b * np.linalg.norm(J1), rtol=0.08)

    def test_default_model_rms_in_paper_band(self):
        # ten-minute run: reported-vs-true 3D RMS within the 3..10 mm band
        trajs = generate_teleop_trajectories(5, 120.0, seed=21)
        ds = build_dataset(trajs, CableErrorModel(), seed=21, record_period_s=0.17)
        rms = np.sqrt(np.mean(np.sum(ds.labels**2, axis=1)))
        assert 3.0 <= rms <= 10.0

    def test_reported_pose_consistent_with_joint_field(self):
        trajs = generate_teleop_trajectories(2, 5.0, seed=3)
        ds = build_dataset(trajs, CableErrorModel(), seed=3, record_period_s=0.05)
        fk = forward_kinematics(field_view(ds.features, "joint_pos"), validate=False)
        assert np.allclose(fk, ds.features[:, 0:3], atol=1e-9)

    def test_stretch_gain_doubling_doubles_stretch_rms(self):
        trajs = generate_teleop_trajectories(2, 10.0, seed=13)
        base = CableErrorModel(
            backlash=np.zeros(7), noise_sigma=np.zeros(7),
            static_offset=np.zeros(3), restart_offset_sigma=0.0)
        doubled = base.scaled_stretch(2.0)
        rms = []
        for model in (base, doubled):
            ds = build_dataset(trajs, model, seed=13, record_period_s=0.05)
            rms.append(np.sqrt(np.mean(np.sum(ds.labels**2, axis=1))))
        # linear in the gain up to tiny kinematic curvature terms
        assert rms[1] >= 2.0 * rms[0] * (1 - 5e-3)

    def test_determinism_bitwise(self):
        trajs = generate_teleop_trajectories(2, 4.0, seed=17)
        a = build_dataset(trajs, CableErrorModel(), seed=17, record_period_s=0.05)
        b = build_dataset(trajs, CableErrorModel(), seed=17, record_period_s=0.05)
        assert np.array_equal(a.features, b.features)
        assert np.array_equal(a.labels, b.labels)
        assert np.array_equal(a.timestamps, b.timestamps)

    def test_record_validates_width(self):
        with pytest.raises(ValueError):
            RavenStateRecord(0.0, np.zeros(10))


class TestDatasetFiles:
    def make(self):
        trajs = generate_teleop_trajectories(3, 4.0, seed=23)
        return build_dataset(trajs, CableErrorModel(), seed=23, record_period_s=0.05)

    def test_binary_round_trip_bit_exact(self, tmp_path):
        ds = self.make()
        path = tmp_path / "data.rvds"
        write_dataset(path, ds)
        back = read_dataset(path)
        assert np.array_equal(back.features, ds.features)
        assert np.array_equal(back.labels, ds.labels)
        assert np.array_equal(back.timestamps, ds.timestamps)
        assert np.array_equal(back.trajectory_ids, ds.trajectory_ids)

    def test_trajectory_table_blocks(self):
        ds = self.make()
        table = ds.trajectory_table()
        assert [row[0] for row in table] == [0, 1, 2]
        assert table[0][1] == 0 and table[-1][2] == len(ds)

    def test_text_export_readable(self, tmp_path):
        ds = self.make()
        path = tmp_path / "data.txt"
        write_dataset_text(path, ds)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("# timestamp_s trajectory_id")
        assert len(lines) == len(ds) + 1
        first = lines[1].split()
        assert len(first) == 2 + RAVENSTATE_SIZE + 3
        assert float(first[0]) == ds.timestamps[0]

    def test_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.rvds"
        path.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(ValueError):
            read_dataset(path)
