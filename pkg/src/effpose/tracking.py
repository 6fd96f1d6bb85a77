"""Per-circle status tracking and multi-view ball triangulation.

Each (camera, color) pair owns one circle track that is either
*effective* (trusted for triangulation) or *suspended*. Status
transitions follow three suspension conditions and three reinstatement
conditions; reinstatement additionally requires every condition to hold
for strictly more than ``reinstate_frames`` consecutive frames.
Triangulation takes the midpoint of the common perpendicular of every
pair of rays through effective circle centers and averages the pairs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np

from effpose.geometry import CameraModel, Ray, backproject

EFFECTIVE = "effective"
SUSPENDED = "suspended"


class DegenerateRaysError(ValueError):
    """Rays are too close to parallel for a stable intersection."""


class LocalizationUnavailable(RuntimeError):
    """Fewer than two effective circles: skip frames and restart.

    Carries the restart recipe: how many frames to skip and the factor
    by which to widen the search-parameter tolerance meanwhile.
    """

    def __init__(self, color_id: str, effective_count: int,
                 skip_frames: int, tolerance_growth: float):
        super().__init__(
            f"{color_id}: {effective_count} effective circle(s), need >= 2; "
            f"skip {skip_frames} frames and widen tolerance x{tolerance_growth}")
        self.color_id = color_id
        self.effective_count = effective_count
        self.skip_frames = skip_frames
        self.tolerance_growth = tolerance_growth


@dataclass(frozen=True)
class TrackerConfig:
    # Pixel thresholds are calibrated for 1280x720 capture.
    motion_threshold: float = 50.0      # px per frame
    reinstate_frames: int = 5           # conditions must hold > this many frames
    radius_window: float = 0.3          # fraction of last radius
    d_min_factor: float = 0.5           # fraction of min pairwise center distance
    consistency_threshold: float = 10.0  # mm, ray-to-reconstruction distance
    restart_skip: int = 3               # frames skipped on localization loss
    tolerance_growth: float = 1.5       # widening per restart cycle
    global_r_min: float = 10.0
    global_r_max: float = 60.0
    global_d_min: float = 40.0

    def __post_init__(self):
        if self.reinstate_frames < 1:
            raise ValueError("reinstate_frames must be >= 1")
        for name in ("motion_threshold", "radius_window", "d_min_factor",
                     "consistency_threshold", "restart_skip", "tolerance_growth",
                     "global_r_min", "global_r_max", "global_d_min"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class CircleTrack:
    camera_id: int
    color_id: str
    status: str = EFFECTIVE
    last_center: np.ndarray | None = None
    last_radius: float | None = None
    consecutive_good_frames: int = 0


@dataclass(frozen=True)
class BallEstimate:
    color_id: str
    center_w: np.ndarray
    contributing_cameras: frozenset[int]
    pair_count: int


def update_track(track: CircleTrack, detection, color_ok: bool,
                 consistency_mm: float | None, cfg: TrackerConfig) -> CircleTrack:
    """Advance one track by one frame.

    ``detection`` is the circle detected this frame (needs ``.center``
    and ``.radius``) or None when the detector returned nothing even at
    the largest tolerable blur. ``consistency_mm`` is the distance from
    this circle's back-projected ray to the ball center reconstructed
    from the other cameras' effective circles, or None when no
    reconstruction was available.
    """
    if track.status == EFFECTIVE:
        suspend = False
        if detection is None:
            suspend = True
        elif not color_ok:
            suspend = True
        elif track.last_center is not None:
            moved = float(np.linalg.norm(np.asarray(detection.center, float)
                                         - track.last_center))
            if moved > cfg.motion_threshold:
                suspend = True
        if suspend:
            return replace(track, status=SUSPENDED, consecutive_good_frames=0)
        return replace(
            track,
            last_center=np.asarray(detection.center, dtype=float),
            last_radius=float(detection.radius),
            consecutive_good_frames=0,
        )

    # Suspended: count frames where all reinstatement conditions hold.
    good = (detection is not None and color_ok and consistency_mm is not None
            and consistency_mm <= cfg.consistency_threshold)
    if not good:
        return replace(track, consecutive_good_frames=0)
    count = track.consecutive_good_frames + 1
    new = replace(
        track,
        last_center=np.asarray(detection.center, dtype=float),
        last_radius=float(detection.radius),
        consecutive_good_frames=count,
    )
    if count > cfg.reinstate_frames:
        return replace(new, status=EFFECTIVE, consecutive_good_frames=0)
    return new


@dataclass
class SearchBounds:
    """Adaptive Hough parameter bounds for one camera view.

    ``widening`` starts at 1, grows by ``tolerance_growth`` per restart
    cycle and converges geometrically back to 1 while detections keep
    arriving.
    """

    cfg: TrackerConfig
    last_radii: list[float] = field(default_factory=list)
    last_centers: list[np.ndarray] = field(default_factory=list)
    widening: float = 1.0

    def note_restart(self):
        self.widening *= self.cfg.tolerance_growth

    def note_good_frame(self, radii, centers):
        self.last_radii = [float(r) for r in radii]
        self.last_centers = [np.asarray(c, dtype=float) for c in centers]
        self.widening = max(1.0, self.widening / self.cfg.tolerance_growth)

    def current(self) -> tuple[float, float, float]:
        """Return (d_min, r_min, r_max) for the next frame."""
        cfg = self.cfg
        if not self.last_radii:
            return cfg.global_d_min, cfg.global_r_min, cfg.global_r_max
        window = min(cfg.radius_window * self.widening, 0.95)
        r = float(np.mean(self.last_radii))
        r_min = max(r * (1.0 - window), 2.0)
        r_max = r * (1.0 + window)
        if len(self.last_centers) >= 2:
            gaps = [np.linalg.norm(a - b)
                    for a, b in itertools.combinations(self.last_centers, 2)]
            d_min = cfg.d_min_factor * float(min(gaps)) / self.widening
        else:
            d_min = cfg.global_d_min / self.widening
        return d_min, r_min, r_max


def bound_search_params(bounds: SearchBounds) -> tuple[float, float, float]:
    """(d_min, r_min, r_max) from detection history; global bounds cold."""
    return bounds.current()


def triangulate_pair(r1: Ray, r2: Ray) -> np.ndarray:
    """Midpoint of the common perpendicular of two rays' lines.

    Raises :class:`DegenerateRaysError` when |sin(angle)| <= 1e-6.
    """
    d1, d2 = r1.direction, r2.direction
    b = float(d1 @ d2)
    denom = 1.0 - b * b  # == sin^2(angle) for unit directions
    if denom <= 1e-12:
        raise DegenerateRaysError(f"rays nearly parallel (sin^2 = {denom:.3e})")
    w0 = r1.origin - r2.origin
    d = float(d1 @ w0)
    e = float(d2 @ w0)
    s = (b * e - d) / denom
    t = (e - b * d) / denom
    p1 = r1.origin + s * d1
    p2 = r2.origin + t * d2
    return (p1 + p2) / 2.0


def triangulate_ball(color_id: str, circles, cams: dict[int, CameraModel],
                     cfg: TrackerConfig = TrackerConfig()) -> BallEstimate:
    """Mean of pairwise ray intersections over all effective circles.

    ``circles`` is an iterable of (camera_id, center_px) for the
    *effective* circles of one color. Raises
    :class:`LocalizationUnavailable` with the restart recipe when fewer
    than two circles are supplied.
    """
    circles = list(circles)
    if len(circles) < 2:
        raise LocalizationUnavailable(color_id, len(circles),
                                      cfg.restart_skip, cfg.tolerance_growth)
    rays = [(cam_id, backproject(cams[cam_id], center))
            for cam_id, center in circles]
    points = []
    for (ida, ra), (idb, rb) in itertools.combinations(rays, 2):
        points.append(triangulate_pair(ra, rb))
    center = np.mean(points, axis=0)
    return BallEstimate(
        color_id=color_id,
        center_w=center,
        contributing_cameras=frozenset(cam_id for cam_id, _ in circles),
        pair_count=len(points),
    )


def triangulate_ball_least_squares(color_id: str, circles,
                                   cams: dict[int, CameraModel]) -> np.ndarray:
    """Jointly optimal n-view point: minimizes summed squared distance
    to all rays. Off by default; kept as a comparison mode against the
    pairwise-mean estimate."""
    circles = list(circles)
    if len(circles) < 2:
        raise LocalizationUnavailable(color_id, len(circles), 0, 1.0)
    A = np.zeros((3, 3))
    rhs = np.zeros(3)
    for cam_id, center in circles:
        ray = backproject(cams[cam_id], center)
        P = np.eye(3) - np.outer(ray.direction, ray.direction)
        A += P
        rhs += P @ ray.origin
    return np.linalg.solve(A, rhs)
