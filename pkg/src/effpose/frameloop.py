"""Sequential per-frame detection and tracking engine.

For every frame, each (camera, color) pair is searched inside a region
of interest derived from its previous detection; the accumulator
threshold is re-tuned by bisection each time, escalating the edge-path
blur only when the tuner cannot isolate exactly one circle. Detected
circles pass the border color check, effective ones triangulate into
ball centers, and the three ball centers yield the effector pose. A
color that drops below two effective views skips a few frames and
restarts with widened search tolerances.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from effpose.effector import (
    DegenerateBallGeometryError,
    EffectorPose,
    EffectorSolveError,
    MarkerRigSpec,
    solve_effector_pose,
)
from effpose.geometry import CameraModel, backproject
from effpose.imaging.colorspace import BALL_COLORS, ColorGates
from effpose.imaging.edges import EdgeMap, preprocess
from effpose.imaging.hough import (
    BlurEscalationError,
    DetectedCircle,
    HoughParams,
    color_check,
    hough_circles,
    tune_accumulator_threshold,
)
from effpose.tracking import (
    EFFECTIVE,
    BallEstimate,
    CircleTrack,
    LocalizationUnavailable,
    SearchBounds,
    TrackerConfig,
    triangulate_ball,
    update_track,
)

BLUR_SIGMA_SCHEDULE = (1.5, 2.5, 4.0)


@dataclass(frozen=True)
class FrameDetection:
    frame: int
    camera_id: int
    color_id: str
    circle: DetectedCircle | None
    color_ok: bool
    status: str                 # track status after this frame's update
    tuned_threshold: float | None = None


@dataclass(frozen=True)
class FrameResult:
    frame: int
    timestamp: float
    detections: list[FrameDetection]
    balls: dict[str, BallEstimate]
    effector: EffectorPose | None
    skipped_colors: tuple[str, ...] = ()


def _crop(image: np.ndarray, center: np.ndarray, half: float):
    h, w = image.shape[:2]
    u0 = int(np.clip(np.floor(center[0] - half), 0, w - 1))
    u1 = int(np.clip(np.ceil(center[0] + half) + 1, 1, w))
    v0 = int(np.clip(np.floor(center[1] - half), 0, h - 1))
    v1 = int(np.clip(np.ceil(center[1] + half) + 1, 1, h))
    return image[v0:v1, u0:u1], np.array([u0, v0], dtype=float)


class FrameLoop:
    """Owns all per-(camera, color) tracker state for one run."""

    def __init__(self, cams: dict[int, CameraModel],
                 tracker_cfg: TrackerConfig = TrackerConfig(),
                 hough_defaults: HoughParams = HoughParams(),
                 gates: ColorGates = ColorGates(),
                 rig_spec: MarkerRigSpec = MarkerRigSpec(),
                 colors=tuple(BALL_COLORS),
                 sigma_schedule=BLUR_SIGMA_SCHEDULE):
        self.cams = dict(cams)
        self.cfg = tracker_cfg
        self.defaults = hough_defaults
        self.gates = gates
        self.rig_spec = rig_spec
        self.colors = tuple(colors)
        self.sigma_schedule = tuple(sigma_schedule)
        self.tracks: dict[tuple[int, str], CircleTrack] = {
            (cid, color): CircleTrack(camera_id=cid, color_id=color)
            for cid in self.cams for color in self.colors
        }
        self.bounds: dict[int, SearchBounds] = {
            cid: SearchBounds(tracker_cfg) for cid in self.cams
        }
        self.skip_remaining: dict[str, int] = {c: 0 for c in self.colors}
        self.frame_index = 0

    # -- detection ---------------------------------------------------------

    def _detect_one(self, image: np.ndarray, cam_id: int, color: str):
        """Detect this color's circle in one view; returns
        (circle or None, tuned threshold or None)."""
        d_min, r_min, r_max = self.bounds[cam_id].current()
        track = self.tracks[(cam_id, color)]
        if track.last_center is not None:
            roi, offset = _crop(image, track.last_center, 2.2 * r_max + 24.0)
        else:
            roi, offset = image, np.zeros(2)
        params = HoughParams(
            dp=self.defaults.dp,
            canny_high=self.defaults.canny_high,
            accumulator_threshold=self.defaults.accumulator_threshold,
            d_min=d_min, r_min=r_min, r_max=r_max,
            blob_sigma=max(0.1 * 0.5 * (r_min + r_max), 0.8),
        )
        for sigma in self.sigma_schedule:
            edges = preprocess(roi, color, params.blob_sigma,
                               canny_high=params.canny_high, edge_sigma=sigma,
                               gates=self.gates)
            try:
                threshold = tune_accumulator_threshold(edges, params, expected_k=1)
            except BlurEscalationError:
                continue
            circles = hough_circles(
                edges, HoughParams(
                    dp=params.dp, canny_high=params.canny_high,
                    accumulator_threshold=threshold, d_min=params.d_min,
                    r_min=params.r_min, r_max=params.r_max,
                    blob_sigma=params.blob_sigma),
                color_id=color)
            if circles:
                c = circles[0]
                moved = DetectedCircle(center=c.center + offset, radius=c.radius,
                                       color_id=color,
                                       accumulator_score=c.accumulator_score)
                return moved, threshold
        return None, None

    # -- one frame ---------------------------------------------------------

    def process(self, images: dict[int, np.ndarray],
                timestamp: float | None = None) -> FrameResult:
        frame = self.frame_index
        self.frame_index += 1
        ts = float(frame) if timestamp is None else float(timestamp)

        skipped = tuple(c for c in self.colors if self.skip_remaining[c] > 0)
        active_colors = [c for c in self.colors if self.skip_remaining[c] == 0]
        for color in skipped:
            self.skip_remaining[color] -= 1
            if self.skip_remaining[color] == 0:
                # Restart: every circle begins effective again.
                for cid in self.cams:
                    self.tracks[(cid, color)] = CircleTrack(
                        camera_id=cid, color_id=color,
                        last_center=self.tracks[(cid, color)].last_center,
                        last_radius=self.tracks[(cid, color)].last_radius)

        raw: dict[tuple[int, str], tuple] = {}
        for cid in sorted(self.cams):
            for color in active_colors:
                circle, threshold = self._detect_one(images[cid], cid, color)
                ok = bool(circle is not None
                          and color_check(images[cid], circle, color, self.gates))
                raw[(cid, color)] = (circle, ok, threshold)

        # Provisional ball estimates from circles that stay effective
        # this frame; suspended circles get their consistency measured
        # against these.
        balls: dict[str, BallEstimate] = {}
        for color in active_colors:
            keep = []
            for cid in sorted(self.cams):
                circle, ok, _ = raw[(cid, color)]
                track = self.tracks[(cid, color)]
                if track.status != EFFECTIVE or circle is None or not ok:
                    continue
                if track.last_center is not None and (
                        np.linalg.norm(circle.center - track.last_center)
                        > self.cfg.motion_threshold):
                    continue
                keep.append((cid, circle.center))
            try:
                balls[color] = triangulate_ball(color, keep, self.cams, self.cfg)
            except LocalizationUnavailable:
                self.skip_remaining[color] = self.cfg.restart_skip
                for cid in self.cams:
                    self.bounds[cid].note_restart()

        detections: list[FrameDetection] = []
        for cid in sorted(self.cams):
            for color in active_colors:
                circle, ok, threshold = raw[(cid, color)]
                consistency = None
                if circle is not None and color in balls:
                    ray = backproject(self.cams[cid], circle.center)
                    consistency = ray.distance_to_point(balls[color].center_w)
                track = update_track(self.tracks[(cid, color)], circle, ok,
                                     consistency, self.cfg)
                self.tracks[(cid, color)] = track
                detections.append(FrameDetection(
                    frame=frame, camera_id=cid, color_id=color, circle=circle,
                    color_ok=ok, status=track.status, tuned_threshold=threshold))

        # Record search bounds for the next frame.
        for cid in sorted(self.cams):
            radii = [raw[(cid, color)][0].radius for color in active_colors
                     if raw[(cid, color)][0] is not None and raw[(cid, color)][1]]
            centers = [raw[(cid, color)][0].center for color in active_colors
                       if raw[(cid, color)][0] is not None and raw[(cid, color)][1]]
            if radii:
                self.bounds[cid].note_good_frame(radii, centers)

        effector = None
        if all(color in balls for color in ("green", "yellow", "red")):
            try:
                effector = solve_effector_pose(
                    balls["green"].center_w, balls["yellow"].center_w,
                    balls["red"].center_w, self.rig_spec)
            except (DegenerateBallGeometryError, EffectorSolveError):
                effector = None
        return FrameResult(frame=frame, timestamp=ts, detections=detections,
                           balls=balls, effector=effector,
                           skipped_colors=skipped)


# ---------------------------------------------------------------------------
# Stream writers for the stage artifacts
# ---------------------------------------------------------------------------

DETECTIONS_HEADER = "# frame camera_id color u_px v_px radius_px score status"
TRACKLOG_HEADER = "# frame camera_id color status u_px v_px radius_px"
BALLS_HEADER = "# frame color x_mm y_mm z_mm pair_count"
EFFECTOR_HEADER = "# timestamp_s x_mm y_mm z_mm alpha_rad beta_rad gamma_rad residual_cost_mm2"


def append_detection_rows(fh, result: FrameResult) -> None:
    for d in result.detections:
        if d.circle is None:
            continue
        fh.write(f"{d.frame} {d.camera_id} {d.color_id} "
                 f"{d.circle.center[0]:.17g} {d.circle.center[1]:.17g} "
                 f"{d.circle.radius:.17g} {d.circle.accumulator_score:.17g} "
                 f"{d.status}\n")


def append_tracklog_rows(fh, result: FrameResult, loop: FrameLoop) -> None:
    for (cid, color), track in sorted(loop.tracks.items()):
        u, v = (track.last_center if track.last_center is not None
                else (np.nan, np.nan))
        radius = track.last_radius if track.last_radius is not None else np.nan
        fh.write(f"{result.frame} {cid} {color} {track.status} "
                 f"{u:.17g} {v:.17g} {radius:.17g}\n")


def append_ball_rows(fh, result: FrameResult) -> None:
    for color in sorted(result.balls):
        b = result.balls[color]
        fh.write(f"{result.frame} {color} {b.center_w[0]:.17g} "
                 f"{b.center_w[1]:.17g} {b.center_w[2]:.17g} {b.pair_count}\n")


def append_effector_row(fh, result: FrameResult) -> None:
    if result.effector is None:
        return
    e = result.effector
    fh.write(f"{result.timestamp:.17g} "
             + " ".join(f"{v:.17g}" for v in e.position)
             + " " + " ".join(f"{v:.17g}" for v in e.euler)
             + f" {e.residual_cost:.17g}\n")


def read_detections(path):
    """Detection rows grouped by frame:
    {frame: [(camera_id, color, center, radius, score, status), ...]}."""
    frames: dict[int, list] = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 8:
                raise ValueError(f"malformed detection row: {line!r}")
            frame = int(parts[0])
            frames.setdefault(frame, []).append((
                int(parts[1]), parts[2],
                np.array([float(parts[3]), float(parts[4])]),
                float(parts[5]), float(parts[6]), parts[7]))
    return frames


def read_effector_stream(path) -> np.ndarray:
    """(n, 8) array: timestamp, x, y, z, alpha, beta, gamma, residual."""
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 8:
                raise ValueError(f"malformed effector row: {line!r}")
            rows.append([float(v) for v in parts])
    return np.asarray(rows, dtype=float).reshape(-1, 8)
