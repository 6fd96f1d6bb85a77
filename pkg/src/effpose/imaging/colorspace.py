"""RGB to HSV conversion and the hue/saturation/value gates that define
the three marker colors.

The gates are wide enough to separate the rendered ball colors with
margin; they live in one place so a config file can override them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Flat-shaded ball colors used by the synthetic renderer (R, G, B).
BALL_COLORS = {
    "green": (40, 200, 60),
    "yellow": (230, 200, 30),
    "red": (210, 40, 50),
}

BACKGROUND_COLOR = (18, 18, 18)


def rgb_to_hsv(image: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized HSV: hue in degrees [0, 360), saturation and value in [0, 1]."""
    rgb = np.asarray(image, dtype=float) / 255.0
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    cmax = rgb.max(axis=-1)
    cmin = rgb.min(axis=-1)
    delta = cmax - cmin
    hue = np.zeros_like(cmax)
    nonzero = delta > 1e-12
    rmax = nonzero & (cmax == r)
    gmax = nonzero & (cmax == g) & ~rmax
    bmax = nonzero & ~rmax & ~gmax
    hue[rmax] = 60.0 * (((g - b)[rmax] / delta[rmax]) % 6.0)
    hue[gmax] = 60.0 * ((b - r)[gmax] / delta[gmax] + 2.0)
    hue[bmax] = 60.0 * ((r - g)[bmax] / delta[bmax] + 4.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        sat = np.where(cmax > 1e-12, delta / np.maximum(cmax, 1e-12), 0.0)
    return hue, sat, cmax


@dataclass(frozen=True)
class ColorGates:
    """Per-color hue windows (degrees), with red wrapping through 0."""

    hue_windows: dict = field(default_factory=lambda: {
        "green": (90.0, 150.0),
        "yellow": (40.0, 80.0),
        "red": (340.0, 20.0),
    })
    saturation_min: float = 0.4
    value_min: float = 0.15

    def mask(self, image: np.ndarray, color: str) -> np.ndarray:
        """Boolean mask of pixels passing the named color's gate."""
        if color not in self.hue_windows:
            raise KeyError(f"unknown color {color!r}")
        hue, sat, val = rgb_to_hsv(image)
        return self.mask_from_hsv(hue, sat, val, color)

    def mask_from_hsv(self, hue, sat, val, color: str) -> np.ndarray:
        lo, hi = self.hue_windows[color]
        if lo <= hi:
            in_hue = (hue >= lo) & (hue <= hi)
        else:  # wraparound window, e.g. red 340..20
            in_hue = (hue >= lo) | (hue <= hi)
        return in_hue & (sat > self.saturation_min) & (val > self.value_min)
