"""Flat-shaded synthetic scenes: colored balls over a dark background.

Each ball projects to a filled circle at the projected center with
radius f*r/Z; occlusion between balls follows depth order. The oracle
record of true projected circles is returned alongside each image so
detection tests can score themselves.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from effpose.geometry import CameraModel
from effpose.imaging.colorspace import BACKGROUND_COLOR, BALL_COLORS


@dataclass(frozen=True)
class OracleCircle:
    color_id: str
    center: np.ndarray   # subpixel (u, v)
    radius: float        # px
    depth: float         # mm along the optical axis
    visible_fraction: float = 1.0  # share of the disk not occluded


@dataclass(frozen=True)
class RenderedView:
    camera_id: int
    image: np.ndarray
    circles: tuple[OracleCircle, ...]
    partial: bool = False  # some ball was behind this camera


def _paint_disk(image, cu, cv, radius, color):
    h, w = image.shape[:2]
    u0 = max(int(np.floor(cu - radius - 1)), 0)
    u1 = min(int(np.ceil(cu + radius + 1)) + 1, w)
    v0 = max(int(np.floor(cv - radius - 1)), 0)
    v1 = min(int(np.ceil(cv + radius + 1)) + 1, h)
    if u0 >= u1 or v0 >= v1:
        return
    uu = np.arange(u0, u1, dtype=float)
    vv = np.arange(v0, v1, dtype=float)
    du2 = (uu - cu) ** 2
    dv2 = (vv - cv) ** 2
    disk = dv2[:, None] + du2[None, :] <= radius * radius
    image[v0:v1, u0:u1][disk] = color


def _disk_mask_window(u0, u1, v0, v1, cu, cv, radius):
    uu = np.arange(u0, u1, dtype=float)
    vv = np.arange(v0, v1, dtype=float)
    return ((vv[:, None] - cv) ** 2 + (uu[None, :] - cu) ** 2) <= radius * radius


def render_scene(cams, ball_centers: dict[str, np.ndarray], ball_radius: float = 20.0,
                 background=BACKGROUND_COLOR, colors=BALL_COLORS,
                 occluders: list | None = None) -> list[RenderedView]:
    """Render every camera's view of the colored balls.

    ``ball_centers`` maps color id to a world-frame 3-vector.
    ``occluders`` optionally adds plain gray spheres (center, radius)
    that block the view without being detection targets. A ball behind
    a camera marks that view partial instead of raising.
    """
    views = []
    for cam_id, cam in enumerate(cams):
        w, h = cam.image_size
        image = np.empty((h, w, 3), dtype=np.uint8)
        image[:] = background

        items = []  # (depth, color_id, cu, cv, radius_px, paint_rgb)
        partial = False
        for color_id, center in ball_centers.items():
            p_cam = cam.pose.inverse_transform(center)
            if p_cam[2] <= ball_radius:
                partial = True
                continue
            cu = cam.focal_length * p_cam[0] / p_cam[2] + cam.principal_point[0]
            cv = cam.focal_length * p_cam[1] / p_cam[2] + cam.principal_point[1]
            items.append((float(p_cam[2]), color_id, cu, cv,
                          cam.focal_length * ball_radius / p_cam[2],
                          colors[color_id]))
        for center, radius in (occluders or []):
            p_cam = cam.pose.inverse_transform(center)
            if p_cam[2] <= radius:
                partial = True
                continue
            cu = cam.focal_length * p_cam[0] / p_cam[2] + cam.principal_point[0]
            cv = cam.focal_length * p_cam[1] / p_cam[2] + cam.principal_point[1]
            items.append((float(p_cam[2]), None, cu, cv,
                          cam.focal_length * radius / p_cam[2], (90, 90, 90)))

        # Far to near so nearer disks overwrite.
        items.sort(key=lambda t: -t[0])
        for _, _, cu, cv, radius, rgb in items:
            _paint_disk(image, cu, cv, radius, rgb)

        # Oracle: visibility = share of each ball's disk not covered by
        # nearer disks (computed on the pixel grid over a local window).
        oracle = []
        for depth, color_id, cu, cv, radius, _ in items:
            if color_id is None:
                continue
            u0 = max(int(np.floor(cu - radius - 1)), 0)
            u1 = min(int(np.ceil(cu + radius + 1)) + 1, w)
            v0 = max(int(np.floor(cv - radius - 1)), 0)
            v1 = min(int(np.ceil(cv + radius + 1)) + 1, h)
            mask = _disk_mask_window(u0, u1, v0, v1, cu, cv, radius)
            total = int(mask.sum())
            if total == 0:
                continue
            for d2, _c2, cu2, cv2, rad2, _rgb2 in items:
                if d2 < depth:  # nearer object covers
                    mask &= ~_disk_mask_window(u0, u1, v0, v1, cu2, cv2, rad2)
            oracle.append(OracleCircle(
                color_id=color_id,
                center=np.array([cu, cv]),
                radius=float(radius),
                depth=depth,
                visible_fraction=float(mask.sum()) / total,
            ))
        views.append(RenderedView(camera_id=cam_id, image=image,
                                  circles=tuple(oracle), partial=partial))
    return views
