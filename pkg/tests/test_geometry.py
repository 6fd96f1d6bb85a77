import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from effpose.geometry import (
    BehindCameraError,
    CameraModel,
    Pose,
    Ray,
    backproject,
    backproject_direction_unnormalized,
    euler_to_rotmat,
    is_gimbal_locked,
    project,
    project_many,
    random_rotation,
    rot_x,
    rot_y,
    rot_z,
    rotmat_to_euler,
)


def matrix_product_oracle(alpha, beta, gamma):
    """Independent composition: explicit product of elementary rotations."""
    return rot_z(gamma) @ rot_y(beta) @ rot_x(alpha)


def default_camera(position=(0.0, 0.0, 0.0), rotation=None, f=500.0):
    R = np.eye(3) if rotation is None else rotation
    return CameraModel(
        pose=Pose(np.asarray(position, float), R),
        focal_length=f,
        principal_point=np.array([320.0, 240.0]),
        image_size=(640, 480),
    )


class TestEulerToRotmat:
    def test_zero_angles_is_identity(self):
        assert np.allclose(euler_to_rotmat(0, 0, 0), np.eye(3))

    def test_quarter_turn_about_z(self):
        expected = np.array([[0, -1, 0], [1, 0, 0], [0, 0, 1]], dtype=float)
        assert np.allclose(euler_to_rotmat(0, 0, np.pi / 2), expected, atol=1e-15)

    def test_matches_elementary_product_oracle(self):
        got = euler_to_rotmat(0.1, 0.2, 0.3)
        assert np.allclose(got, matrix_product_oracle(0.1, 0.2, 0.3), atol=1e-15)

    def test_result_is_orthonormal(self):
        R = euler_to_rotmat(1.1, -0.7, 2.9)
        assert np.allclose(R.T @ R, np.eye(3), atol=1e-12)
        assert np.isclose(np.linalg.det(R), 1.0, atol=1e-12)


class TestRotmatToEuler:
    def test_identity(self):
        assert np.allclose(rotmat_to_euler(np.eye(3)), np.zeros(3))

    def test_round_trip_simple(self):
        angles = np.array([0.1, 0.2, 0.3])
        assert np.allclose(rotmat_to_euler(euler_to_rotmat(*angles)), angles, atol=1e-9)

    def test_round_trip_random_rotations(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            R = random_rotation(rng)
            a, b, g = rotmat_to_euler(R)
            assert np.allclose(euler_to_rotmat(a, b, g), R, atol=1e-9)

    @pytest.mark.parametrize("beta", [np.pi / 2, -np.pi / 2])
    def test_gimbal_lock_flagged_and_consistent(self, beta):
        R = euler_to_rotmat(0.4, beta, 0.0)
        assert is_gimbal_locked(R)
        a, b, g = rotmat_to_euler(R)
        # Non-unique decomposition, but it must still recompose to R.
        assert np.allclose(euler_to_rotmat(a, b, g), R, atol=1e-9)

    def test_away_from_lock_not_flagged(self):
        assert not is_gimbal_locked(euler_to_rotmat(0.3, 1.2, -0.8))

    @given(
        st.floats(-3.1, 3.1),
        st.floats(-1.4, 1.4),
        st.floats(-3.1, 3.1),
    )
    @settings(max_examples=200, deadline=None)
    def test_round_trip_property(self, alpha, beta, gamma):
        angles = np.array([alpha, beta, gamma])
        back = rotmat_to_euler(euler_to_rotmat(*angles))
        assert np.allclose(euler_to_rotmat(*back), euler_to_rotmat(*angles), atol=1e-9)


class TestProjection:
    def test_optical_axis_maps_to_principal_point(self):
        cam = default_camera()
        for depth in (10.0, 500.0, 4000.0):
            assert np.allclose(project(cam, [0, 0, depth]), [320.0, 240.0])

    def test_known_offset_point(self):
        # x_i = f*X/Z + cx = 500*100/1000 + 320 = 370
        cam = default_camera()
        assert np.allclose(project(cam, [100.0, 0.0, 1000.0]), [370.0, 240.0])

    def test_point_behind_camera_rejected(self):
        cam = default_camera()
        with pytest.raises(BehindCameraError):
            project(cam, [0.0, 0.0, -5.0])
        with pytest.raises(BehindCameraError):
            project(cam, [1.0, 1.0, 0.0])

    def test_project_many_matches_scalar(self):
        rng = np.random.default_rng(3)
        cam = default_camera(position=(50, -20, 10), rotation=euler_to_rotmat(0.1, -0.2, 0.4))
        pts = rng.uniform(-100, 100, size=(20, 3)) + np.array([50, -20, 10]) + cam.pose.rotation @ [0, 0, 800]
        pix, depths = project_many(cam, pts)
        for i, p in enumerate(pts):
            if depths[i] > 0:
                assert np.allclose(pix[i], project(cam, p), atol=1e-9)


class TestBackprojection:
    def test_principal_point_gives_optical_axis(self):
        R = euler_to_rotmat(0.2, 0.1, -0.3)
        cam = default_camera(position=(10, 20, 30), rotation=R)
        ray = backproject(cam, cam.principal_point)
        assert np.allclose(ray.direction, R @ [0, 0, 1], atol=1e-12)
        assert np.allclose(ray.origin, [10, 20, 30])

    def test_inverse_of_project(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            R = random_rotation(rng)
            cam = default_camera(position=rng.uniform(-500, 500, 3), rotation=R)
            p = cam.pose.transform([*rng.uniform(-200, 200, 2), rng.uniform(300, 2000)])
            ray = backproject(cam, project(cam, p))
            assert ray.distance_to_point(p) < 1e-9

    def test_componentwise_ratio_identity_sixteen_markers(self):
        # For each marker: v_c2m(k) / v_i2c(k) == |v_c2m| / |v_i2c| for all k,
        # with v_i2c the unnormalized back-projection direction.
        rng = np.random.default_rng(23)
        R = euler_to_rotmat(0.3, -0.15, 2.0)
        cam = default_camera(position=(100.0, -300.0, 150.0), rotation=R)
        markers = cam.pose.transform(np.zeros(3)) + (
            R @ np.vstack([rng.uniform(-250, 250, (16, 2)).T, rng.uniform(500, 1500, 16)])
        ).T
        for m in markers:
            pix = project(cam, m)
            v_c2m = m - cam.pose.position
            v_i2c = backproject_direction_unnormalized(cam, pix)
            ratio = np.linalg.norm(v_c2m) / np.linalg.norm(v_i2c)
            assert np.allclose(v_c2m / v_i2c, ratio, rtol=1e-9)


class TestPoseAndRay:
    def test_pose_round_trip_transform(self):
        rng = np.random.default_rng(5)
        pose = Pose(rng.uniform(-10, 10, 3), random_rotation(rng))
        p = rng.uniform(-5, 5, 3)
        assert np.allclose(pose.inverse_transform(pose.transform(p)), p, atol=1e-12)

    def test_pose_xyz_euler_round_trip(self):
        params = np.array([1.0, -2.0, 3.0, 0.2, -0.4, 1.3])
        assert np.allclose(Pose.from_xyz_euler(params).to_xyz_euler(), params, atol=1e-9)

    def test_rejects_non_orthonormal(self):
        with pytest.raises(ValueError):
            Pose(np.zeros(3), np.eye(3) * 1.1)

    def test_ray_normalizes_direction(self):
        r = Ray(np.zeros(3), [0, 0, 10])
        assert np.isclose(np.linalg.norm(r.direction), 1.0, atol=1e-12)

    def test_camera_validates_intrinsics(self):
        with pytest.raises(ValueError):
            default_camera(f=-1.0)
        with pytest.raises(ValueError):
            CameraModel(Pose.identity(), 500.0, np.array([900.0, 240.0]), (640, 480))
