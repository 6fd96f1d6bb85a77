"""Edge detection and the two-path preprocessing chain.

One path takes Canny edges from the blurred gray image; the other
blurs and binarizes the target color's gate mask, intentionally
enlarging each color blob. Multiplying the two keeps true circle
outlines and drops every edge outside the (dilated) blobs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from effpose.imaging.colorspace import ColorGates

# Halving the high threshold for the hysteresis low limit follows the
# usual two-threshold Canny convention.
CANNY_LOW_RATIO = 0.5
EDGE_BLUR_SIGMA = 1.5


@dataclass(frozen=True)
class EdgeMap:
    """Edge pixels plus the gradients they were detected from."""

    mask: np.ndarray  # bool (h, w)
    grad_x: np.ndarray
    grad_y: np.ndarray

    @property
    def shape(self):
        return self.mask.shape

    def count(self) -> int:
        return int(self.mask.sum())

    def masked_by(self, keep: np.ndarray) -> "EdgeMap":
        return EdgeMap(self.mask & keep, self.grad_x, self.grad_y)


def to_gray(image: np.ndarray) -> np.ndarray:
    """Standard luma weights; returns float in [0, 255]."""
    rgb = np.asarray(image, dtype=float)
    return 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]


def gaussian_blur(plane: np.ndarray, sigma: float) -> np.ndarray:
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return ndimage.gaussian_filter(np.asarray(plane, dtype=float), sigma=sigma)


def _nms(magnitude: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Thin edges to local maxima along the gradient direction."""
    h, w = magnitude.shape
    padded = np.zeros((h + 2, w + 2))
    padded[1:-1, 1:-1] = magnitude

    angle = np.rad2deg(np.arctan2(gy, gx)) % 180.0
    sector = np.zeros(magnitude.shape, dtype=np.uint8)
    sector[(angle >= 22.5) & (angle < 67.5)] = 1
    sector[(angle >= 67.5) & (angle < 112.5)] = 2
    sector[(angle >= 112.5) & (angle < 157.5)] = 3

    # Neighbor views along each sector's direction.
    c = padded[1:-1, 1:-1]
    nbrs = {
        0: (padded[1:-1, 2:], padded[1:-1, :-2]),    # east/west
        1: (padded[2:, 2:], padded[:-2, :-2]),       # se/nw
        2: (padded[2:, 1:-1], padded[:-2, 1:-1]),    # south/north
        3: (padded[2:, :-2], padded[:-2, 2:]),       # sw/ne
    }
    keep = np.zeros(magnitude.shape, dtype=bool)
    for s, (a, b) in nbrs.items():
        sel = sector == s
        keep |= sel & (c >= a) & (c >= b)
    return keep


def canny(gray_blurred: np.ndarray, high_threshold: float,
          low_threshold: float | None = None) -> EdgeMap:
    """Canny edges from an already-blurred gray plane.

    Gradients come from 3x3 Sobel kernels; hysteresis links weak edge
    pixels 8-connected to a strong one. The low threshold defaults to
    half the high one.
    """
    if low_threshold is None:
        low_threshold = high_threshold * CANNY_LOW_RATIO
    gx = ndimage.sobel(gray_blurred, axis=1)
    gy = ndimage.sobel(gray_blurred, axis=0)
    magnitude = np.hypot(gx, gy)
    thin = _nms(magnitude, gx, gy)
    strong = thin & (magnitude > high_threshold)
    weak = thin & (magnitude > low_threshold)
    linked = ndimage.binary_propagation(strong, mask=weak,
                                        structure=np.ones((3, 3), dtype=bool))
    return EdgeMap(linked, gx, gy)


def color_blob_mask(image: np.ndarray, target_color: str, blob_sigma: float,
                    gates: ColorGates = ColorGates(),
                    binarize_threshold: float = 0.1) -> np.ndarray:
    """Blur-then-binarize the color gate mask.

    The low binarize threshold after blurring dilates each blob by a
    couple of sigma, so true circle outlines (which sit exactly on the
    blob border) survive the elementwise multiplication step.
    """
    gate = gates.mask(image, target_color).astype(float)
    spread = gaussian_blur(gate, blob_sigma)
    return spread > binarize_threshold


def preprocess(image: np.ndarray, target_color: str, blob_sigma: float,
               canny_high: float = 100.0, edge_sigma: float = EDGE_BLUR_SIGMA,
               gates: ColorGates = ColorGates()) -> EdgeMap:
    """Full chain for one target color: gray + blur + Canny on one path,
    color gate + blur + binarize on the other, multiplied elementwise.

    ``blob_sigma`` should be ~10% of the expected circle radius.
    """
    if blob_sigma <= 0 or edge_sigma <= 0:
        raise ValueError("blur sigmas must be positive")
    edges = canny(gaussian_blur(to_gray(image), edge_sigma), canny_high)
    blob = color_blob_mask(image, target_color, blob_sigma, gates)
    return edges.masked_by(blob)
