from effpose.imaging.colorspace import BALL_COLORS, ColorGates, rgb_to_hsv
from effpose.imaging.edges import EdgeMap, canny, gaussian_blur, preprocess, to_gray
from effpose.imaging.hough import (
    BlurEscalationError,
    DetectedCircle,
    HoughParams,
    color_check,
    hough_circles,
    tune_accumulator_threshold,
)
from effpose.imaging.ppm import read_ppm, write_ppm
from effpose.imaging.render import RenderedView, render_scene

__all__ = [
    "BALL_COLORS",
    "BlurEscalationError",
    "ColorGates",
    "DetectedCircle",
    "EdgeMap",
    "HoughParams",
    "RenderedView",
    "canny",
    "color_check",
    "gaussian_blur",
    "hough_circles",
    "preprocess",
    "read_ppm",
    "render_scene",
    "rgb_to_hsv",
    "to_gray",
    "tune_accumulator_threshold",
    "write_ppm",
]
