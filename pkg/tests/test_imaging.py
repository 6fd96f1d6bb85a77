import numpy as np
import pytest

from effpose import rig
from effpose.effector import EffectorPose, rig_forward
from effpose.geometry import CameraModel, Pose
from effpose.imaging import (
    BALL_COLORS,
    BlurEscalationError,
    ColorGates,
    DetectedCircle,
    HoughParams,
    color_check,
    hough_circles,
    preprocess,
    read_ppm,
    render_scene,
    tune_accumulator_threshold,
    write_ppm,
)
from effpose.imaging.colorspace import BACKGROUND_COLOR, rgb_to_hsv
from effpose.imaging.edges import EdgeMap, canny, color_blob_mask, gaussian_blur, to_gray
from effpose.frameloop import FrameLoop
from effpose.tracking import EFFECTIVE, SUSPENDED


def simple_camera(f=500.0, size=(640, 480)):
    return CameraModel(Pose.identity(), f, np.array([size[0] / 2, size[1] / 2]),
                       size)


def render_single_ball(color="green", center=(0.0, 0.0, 1000.0), f=500.0,
                       radius=20.0):
    cam = simple_camera(f=f)
    views = render_scene([cam], {color: np.asarray(center, float)},
                         ball_radius=radius)
    return views[0]


class TestPPM:
    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        image = rng.integers(0, 256, size=(33, 47, 3), dtype=np.uint8)
        path = tmp_path / "img.ppm"
        write_ppm(path, image)
        back = read_ppm(path)
        assert np.array_equal(back, image)

    def test_reads_comments(self, tmp_path):
        path = tmp_path / "c.ppm"
        body = bytes(range(12))
        path.write_bytes(b"P6\n# a comment\n2 2\n255\n" + body)
        img = read_ppm(path)
        assert img.shape == (2, 2, 3)
        assert img.tobytes() == body

    def test_rejects_non_p6(self, tmp_path):
        path = tmp_path / "bad.ppm"
        path.write_bytes(b"P3\n1 1\n255\n0 0 0\n")
        with pytest.raises(ValueError):
            read_ppm(path)


class TestRenderScene:
    def test_axis_ball_projected_size(self):
        # f*r/Z = 500*20/1000 = 10 px at the principal point
        view = render_single_ball()
        assert len(view.circles) == 1
        c = view.circles[0]
        assert np.allclose(c.center, [320.0, 240.0])
        assert np.isclose(c.radius, 10.0)
        assert not view.partial

    def test_default_ball_radius_is_twenty_mm(self):
        import inspect
        sig = inspect.signature(render_scene)
        assert sig.parameters["ball_radius"].default == 20.0

    def test_three_separated_balls_three_oracle_circles(self):
        cam = simple_camera()
        centers = {"green": np.array([-80.0, 0.0, 1000.0]),
                   "yellow": np.array([0.0, 0.0, 1000.0]),
                   "red": np.array([80.0, 0.0, 1000.0])}
        view = render_scene([cam], centers)[0]
        assert len(view.circles) == 3
        assert all(c.visible_fraction == 1.0 for c in view.circles)

    def test_occlusion_depth_order(self):
        cam = simple_camera()
        centers = {"green": np.array([0.0, 0.0, 800.0]),   # nearer
                   "red": np.array([10.0, 0.0, 1000.0])}   # farther, overlapped
        view = render_scene([cam], centers)[0]
        red = next(c for c in view.circles if c.color_id == "red")
        green = next(c for c in view.circles if c.color_id == "green")
        assert green.visible_fraction == 1.0
        assert red.visible_fraction < 1.0
        # the overlap region shows the nearer (green) color
        u, v = int(round(green.center[0])), int(round(green.center[1]))
        assert tuple(view.image[v, u]) == BALL_COLORS["green"]

    def test_ball_behind_camera_flags_partial(self):
        cam = simple_camera()
        view = render_scene([cam], {"green": np.array([0.0, 0.0, -500.0])})[0]
        assert view.partial
        assert len(view.circles) == 0


class TestColorGates:
    def test_rendered_colors_pass_own_gate_only(self):
        gates = ColorGates()
        for color, rgb in BALL_COLORS.items():
            pixel = np.array(rgb, dtype=np.uint8).reshape(1, 1, 3)
            for other in BALL_COLORS:
                expected = other == color
                assert bool(gates.mask(pixel, other)[0, 0]) is expected, (color, other)

    def test_background_fails_all_gates(self):
        gates = ColorGates()
        pixel = np.array(BACKGROUND_COLOR, dtype=np.uint8).reshape(1, 1, 3)
        for color in BALL_COLORS:
            assert not gates.mask(pixel, color)[0, 0]

    def test_hsv_matches_reference_values(self):
        # pure red/green/blue corners
        img = np.array([[[255, 0, 0], [0, 255, 0], [0, 0, 255]]], dtype=np.uint8)
        hue, sat, val = rgb_to_hsv(img)
        assert np.allclose(hue[0], [0.0, 120.0, 240.0])
        assert np.allclose(sat[0], 1.0)
        assert np.allclose(val[0], 1.0)


class TestPreprocess:
    def test_uniform_image_empty_mask(self):
        img = np.full((120, 160, 3), 70, dtype=np.uint8)
        em = preprocess(img, "green", blob_sigma=2.0)
        assert em.count() == 0

    def test_green_ball_edges_on_oracle_outline(self):
        view = render_single_ball("green")
        oracle = view.circles[0]
        em = preprocess(view.image, "green", blob_sigma=0.1 * oracle.radius)
        assert em.count() > 0.5 * 2 * np.pi * oracle.radius
        vs, us = np.nonzero(em.mask)
        dist = np.hypot(us - oracle.center[0], vs - oracle.center[1])
        assert np.all(np.abs(dist - oracle.radius) <= 1.0 + 1.0)  # 1 px + grid quantization

    def test_wrong_target_color_gates_everything_out(self):
        view = render_single_ball("green")
        em = preprocess(view.image, "red", blob_sigma=2.0)
        assert em.count() == 0

    def test_color_blob_strictly_contains_oracle_disk(self):
        view = render_single_ball("green")
        oracle = view.circles[0]
        blob = color_blob_mask(view.image, "green", 0.1 * oracle.radius)
        h, w = blob.shape
        uu, vv = np.meshgrid(np.arange(w), np.arange(h))
        disk = (np.hypot(uu - oracle.center[0], vv - oracle.center[1])
                <= oracle.radius)
        assert np.all(blob[disk])
        assert blob.sum() > disk.sum()  # strictly larger: dilation happened


def edge_map_of(view, color, oracle):
    return preprocess(view.image, color, blob_sigma=0.1 * oracle.radius)


class TestHoughCircles:
    def test_clean_circle_detected_accurately(self):
        view = render_single_ball("green")
        oracle = view.circles[0]
        em = edge_map_of(view, "green", oracle)
        params = HoughParams(r_min=5.0, r_max=20.0, d_min=30.0,
                             accumulator_threshold=20.0)
        circles = hough_circles(em, params, color_id="green")
        assert len(circles) == 1
        assert np.linalg.norm(circles[0].center - oracle.center) <= 1.0
        assert abs(circles[0].radius - oracle.radius) <= 1.0
        assert circles[0].color_id == "green"

    def test_thirty_percent_occlusion_still_detected(self):
        cam = simple_camera()
        center = np.array([0.0, 0.0, 1000.0])
        full_view = render_scene([cam], {"green": center})[0]
        oracle_full = full_view.circles[0]
        em_full = edge_map_of(full_view, "green", oracle_full)
        params = HoughParams(r_min=5.0, r_max=20.0, d_min=30.0,
                             accumulator_threshold=1.0)
        full_score = hough_circles(em_full, params)[0].accumulator_score

        # gray occluder placed nearer, covering ~30% of the disk
        occluded = render_scene(
            [cam], {"green": center}, occluders=[(np.array([18.0, 0.0, 900.0]), 16.0)]
        )[0]
        oracle = occluded.circles[0]
        assert 0.65 <= oracle.visible_fraction <= 0.8
        em = edge_map_of(occluded, "green", oracle)
        params_occ = HoughParams(r_min=5.0, r_max=20.0, d_min=30.0,
                                 accumulator_threshold=0.6 * full_score)
        circles = hough_circles(em, params_occ, color_id="green")
        assert circles, "occluded circle not detected at 60% of full score"
        assert np.linalg.norm(circles[0].center - oracle.center) <= 1.0

    def test_empty_edge_map_gives_empty_list(self):
        em = EdgeMap(np.zeros((50, 50), dtype=bool), np.zeros((50, 50)),
                     np.zeros((50, 50)))
        assert hough_circles(em, HoughParams(r_min=3, r_max=10, d_min=10)) == []


def three_green_view():
    cam = simple_camera()
    centers = {}
    # three same-color balls via three separate renders merged into one image
    view = render_scene([cam], {"green": np.array([-110.0, 0.0, 1000.0])})[0]
    img = view.image.copy()
    oracles = list(view.circles)
    for offset in ([0.0, 0.0], [110.0, 10.0]):
        v2 = render_scene([cam], {"green": np.array([offset[0], offset[1], 1000.0])})[0]
        sel = np.any(v2.image != np.array(BACKGROUND_COLOR, np.uint8), axis=-1)
        img[sel] = v2.image[sel]
        oracles.extend(v2.circles)
    return img, oracles


class TestTuner:
    def test_three_circles_tuned_to_exactly_three(self):
        img, oracles = three_green_view()
        em = preprocess(img, "green", blob_sigma=1.0)
        params = HoughParams(r_min=5.0, r_max=20.0, d_min=30.0)
        thr = tune_accumulator_threshold(em, params, expected_k=3)
        got = hough_circles(em, HoughParams(
            r_min=5.0, r_max=20.0, d_min=30.0, accumulator_threshold=thr))
        assert len(got) == 3
        for oracle in oracles:
            assert min(np.linalg.norm(c.center - oracle.center) for c in got) <= 1.0

    def test_lower_bound_verified(self):
        # threshold - tolerance must yield more than k detections
        img, _ = three_green_view()
        em = preprocess(img, "green", blob_sigma=1.0)
        params = HoughParams(r_min=5.0, r_max=20.0, d_min=30.0)
        thr = tune_accumulator_threshold(em, params, expected_k=3)
        below = hough_circles(em, HoughParams(
            r_min=5.0, r_max=20.0, d_min=30.0,
            accumulator_threshold=max(thr - 0.5, 0.25)))
        assert len(below) > 3
        below1 = hough_circles(em, HoughParams(
            r_min=5.0, r_max=20.0, d_min=30.0,
            accumulator_threshold=max(thr - 1.0, 0.25)))
        assert len(below1) >= 4

    def test_unreachable_k_raises_blur_escalation(self):
        # Two circles only, d_min so wide that no spurious third candidate
        # can ever be accepted: expected_k = 3 is unreachable.
        cam = simple_camera()
        view = render_scene([cam], {"green": np.array([-60.0, 0.0, 1000.0]),
                                    "yellow": np.array([60.0, 0.0, 1000.0])})[0]
        img = view.image
        gates = ColorGates(hue_windows={"green": (40.0, 150.0)})  # accept both
        em = preprocess(img, "green", blob_sigma=1.0, gates=gates)
        params = HoughParams(r_min=5.0, r_max=20.0, d_min=200.0)
        with pytest.raises(BlurEscalationError):
            tune_accumulator_threshold(em, params, expected_k=3)


class TestColorCheck:
    def test_on_ball_passes_with_high_fraction(self):
        view = render_single_ball("green")
        oracle = view.circles[0]
        circle = DetectedCircle(center=oracle.center, radius=oracle.radius,
                                color_id="green", accumulator_score=1.0)
        assert color_check(view.image, circle, "green")

    def test_on_background_fails(self):
        view = render_single_ball("green")
        circle = DetectedCircle(center=np.array([60.0, 60.0]), radius=12.0,
                                color_id="green", accumulator_score=1.0)
        assert not color_check(view.image, circle, "green")

    def test_half_overlap_passes(self):
        img = np.zeros((100, 100, 3), dtype=np.uint8)
        img[:, :50] = BALL_COLORS["green"]  # left half green, right half black
        circle = DetectedCircle(center=np.array([50.0, 50.0]), radius=20.0,
                                color_id="green", accumulator_score=1.0)
        assert color_check(img, circle, "green")

    def test_wrong_color_fails(self):
        view = render_single_ball("yellow")
        oracle = view.circles[0]
        circle = DetectedCircle(center=oracle.center, radius=oracle.radius,
                                color_id="green", accumulator_score=1.0)
        assert not color_check(view.image, circle, "green")


class TestFrameLoop:
    def test_smooth_run_localizes_every_frame(self):
        cams = {i: c for i, c in enumerate(rig.default_cameras())}
        loop = FrameLoop(cams)
        errors = []
        for k in range(8):
            t = k / 8.0
            pose = EffectorPose(
                np.array([40 * np.sin(2 * np.pi * t), 30 * np.cos(2 * np.pi * t),
                          20 * np.sin(4 * np.pi * t)]),
                np.array([0.2 * t, -0.1 * t, 0.3 * t]))
            g, y, r = rig_forward(pose)
            views = render_scene(list(cams.values()),
                                 {"green": g, "yellow": y, "red": r})
            res = loop.process({v.camera_id: v.image for v in views})
            assert res.effector is not None
            errors.append(np.linalg.norm(res.effector.position - pose.position))
        assert np.max(errors) < 1.0

    def test_hidden_ball_suspends_then_reinstates(self):
        cams = {i: c for i, c in enumerate(rig.default_cameras())}
        loop = FrameLoop(cams)
        pose = EffectorPose(np.array([10.0, -20.0, 0.0]), np.array([0.1, 0.2, 0.3]))
        g, y, r = rig_forward(pose)
        centers = {"green": g, "yellow": y, "red": r}

        def frame(occluders=None):
            views = render_scene(list(cams.values()), centers, occluders=occluders)
            return loop.process({v.camera_id: v.image for v in views})

        frame()
        # Occlude the green ball fully in camera 0's view only.
        cam0 = cams[0]
        toward = cam0.pose.position - g
        blocker = (g + 0.35 * toward, 45.0)
        for _ in range(3):
            res = frame(occluders=[blocker])
        assert loop.tracks[(0, "green")].status == SUSPENDED
        assert "green" in res.balls  # other three views still triangulate
        assert res.effector is not None

        # Ball visible again: strictly more than 5 good frames to reinstate.
        for i in range(6):
            res = frame()
            if i < 5:
                assert loop.tracks[(0, "green")].status == SUSPENDED
        assert loop.tracks[(0, "green")].status == EFFECTIVE
