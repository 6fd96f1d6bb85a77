"""Circular Hough transform with gradient-direction voting.

Stage one accumulates center votes: every edge pixel votes along its
gradient line (both senses) once per candidate radius. Stage two ranks
accumulator peaks, suppresses centers closer than ``d_min`` and reads
each winner's radius from the distance histogram of nearby edge
pixels. The accumulator threshold ``para2`` has a dedicated bisection
tuner that finds its lower bound for an expected circle count.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from effpose.imaging.colorspace import ColorGates
from effpose.imaging.edges import EdgeMap


class BlurEscalationError(RuntimeError):
    """No threshold returns exactly k circles (count jumps past k).

    Per the detection procedure, the caller should increase the
    Gaussian blur sigma and retry, but only when necessary.
    """

    def __init__(self, expected_k: int, message: str):
        super().__init__(message)
        self.expected_k = expected_k


@dataclass(frozen=True)
class HoughParams:
    dp: float = 1.0                 # accumulator downscale (1 = full resolution)
    canny_high: float = 100.0       # para1
    accumulator_threshold: float = 25.0  # para2
    d_min: float = 40.0             # min distance between accepted centers
    r_min: float = 10.0
    r_max: float = 60.0
    blob_sigma: float = 2.5         # color-path blur, ~10% expected radius

    def __post_init__(self):
        if self.dp < 1:
            raise ValueError("dp must be >= 1")
        if not 0 < self.r_min < self.r_max:
            raise ValueError("need 0 < r_min < r_max")
        if self.d_min <= 0:
            raise ValueError("d_min must be positive")
        if self.accumulator_threshold <= 0:
            raise ValueError("accumulator_threshold must be positive")


@dataclass(frozen=True)
class DetectedCircle:
    center: np.ndarray          # (u, v) px, subpixel
    radius: float               # px
    color_id: str | None
    accumulator_score: float


def _accumulate(edges: EdgeMap, params: HoughParams):
    """Center-vote accumulator over the radius range.

    Each edge pixel votes at p +- r * g_hat for every integer radius;
    votes from one pixel falling in the same cell are deduplicated so a
    pixel contributes at most one vote per cell.
    """
    h, w = edges.shape
    ah = int(np.ceil(h / params.dp))
    aw = int(np.ceil(w / params.dp))
    acc = np.zeros(ah * aw, dtype=np.int64)

    vs, us = np.nonzero(edges.mask)
    if us.size == 0:
        return acc.reshape(ah, aw)
    gx = edges.grad_x[vs, us]
    gy = edges.grad_y[vs, us]
    norm = np.hypot(gx, gy)
    ok = norm > 1e-9
    us, vs, gx, gy, norm = us[ok], vs[ok], gx[ok], gy[ok], norm[ok]
    ux, uy = gx / norm, gy / norm

    radii = np.arange(int(np.floor(params.r_min)),
                      int(np.ceil(params.r_max)) + 1, dtype=float)
    # Candidate centers for all (pixel, radius, sign) combinations.
    cu = np.concatenate([us[None, :] + radii[:, None] * ux[None, :],
                         us[None, :] - radii[:, None] * ux[None, :]], axis=0)
    cv = np.concatenate([vs[None, :] + radii[:, None] * uy[None, :],
                         vs[None, :] - radii[:, None] * uy[None, :]], axis=0)
    iu = np.round(cu / params.dp).astype(np.int64)
    iv = np.round(cv / params.dp).astype(np.int64)
    inside = (iu >= 0) & (iu < aw) & (iv >= 0) & (iv < ah)

    cells = iv * aw + iu
    # Dedupe per source pixel: one vote per (pixel, cell).
    npix = us.size
    pixel_ids = np.broadcast_to(np.arange(npix, dtype=np.int64), cells.shape)
    flat = (pixel_ids * (ah * aw) + cells)[inside]
    flat = np.unique(flat)
    acc += np.bincount(flat % (ah * aw), minlength=ah * aw)
    return acc.reshape(ah, aw)


def _candidate_peaks(acc: np.ndarray):
    """Local maxima of the accumulator in deterministic order.

    A cell wins ties against its right/down neighbors only if strictly
    greater, and against left/up if greater-or-equal: exactly one cell
    per plateau survives. Result is sorted by (score desc, row-major asc).
    """
    padded = np.zeros((acc.shape[0] + 2, acc.shape[1] + 2), dtype=acc.dtype)
    padded[1:-1, 1:-1] = acc
    c = padded[1:-1, 1:-1]
    is_max = (
        (c > 0)
        & (c >= padded[1:-1, :-2]) & (c > padded[1:-1, 2:])
        & (c >= padded[:-2, 1:-1]) & (c > padded[2:, 1:-1])
        & (c >= padded[:-2, :-2]) & (c > padded[2:, 2:])
        & (c >= padded[:-2, 2:]) & (c > padded[2:, :-2])
    )
    vs, us = np.nonzero(is_max)
    scores = acc[vs, us]
    order = np.lexsort((vs * acc.shape[1] + us, -scores))
    return us[order], vs[order], scores[order]


def _refine_center(acc: np.ndarray, u: int, v: int, dp: float) -> np.ndarray:
    """Vote-weighted centroid over the 3x3 peak neighborhood, in pixels."""
    v0, v1 = max(v - 1, 0), min(v + 2, acc.shape[0])
    u0, u1 = max(u - 1, 0), min(u + 2, acc.shape[1])
    patch = acc[v0:v1, u0:u1].astype(float)
    total = patch.sum()
    if total <= 0:
        return np.array([u * dp, v * dp])
    uu = np.arange(u0, u1, dtype=float)
    vv = np.arange(v0, v1, dtype=float)
    cu = float((patch.sum(axis=0) @ uu) / total)
    cv = float((patch.sum(axis=1) @ vv) / total)
    return np.array([cu * dp, cv * dp])


def _estimate_radius(edges: EdgeMap, center: np.ndarray,
                     params: HoughParams) -> float:
    vs, us = np.nonzero(edges.mask)
    dist = np.hypot(us - center[0], vs - center[1])
    sel = (dist >= params.r_min - 1.0) & (dist <= params.r_max + 1.0)
    if not np.any(sel):
        return float(np.clip(0.0, params.r_min, params.r_max))
    dist = dist[sel]
    bins = np.arange(int(np.floor(params.r_min)) - 1,
                     int(np.ceil(params.r_max)) + 2)
    hist, _ = np.histogram(dist, bins=bins)
    best = int(np.argmax(hist))  # argmax takes the smallest bin on ties
    r_mode = bins[best] + 0.5
    near = dist[np.abs(dist - r_mode) <= 1.0]
    radius = float(near.mean()) if near.size else r_mode
    return float(np.clip(radius, params.r_min, params.r_max))


def _select(peaks, params: HoughParams, para2: float, stop_after: int | None = None):
    """Greedy d_min suppression of the threshold-passing peaks.

    The peak list is already in (score desc, row-major asc) order, so
    keep/reject decisions for one peak never depend on lower-ranked
    peaks. That makes the surviving count monotone non-increasing in
    ``para2``, which the bisection tuner relies on. ``stop_after``
    truncates the scan once that many circles are accepted (the tuner
    only needs to distinguish counts up to k+1).
    """
    us, vs, scores = peaks
    keep = scores >= para2
    us, vs, scores = us[keep], vs[keep], scores[keep]
    cu = us.astype(float) * params.dp
    cv = vs.astype(float) * params.dp
    d2_min = params.d_min * params.d_min
    accepted = []
    acc_u = np.empty(us.size)
    acc_v = np.empty(us.size)
    n_acc = 0
    for i in range(us.size):
        if n_acc and np.min((acc_u[:n_acc] - cu[i]) ** 2
                            + (acc_v[:n_acc] - cv[i]) ** 2) < d2_min:
            continue
        accepted.append((int(us[i]), int(vs[i]), float(scores[i])))
        acc_u[n_acc], acc_v[n_acc] = cu[i], cv[i]
        n_acc += 1
        if stop_after is not None and n_acc >= stop_after:
            break
    return accepted


def _materialize(acc, edges: EdgeMap, params: HoughParams,
                 accepted) -> list[DetectedCircle]:
    circles = []
    for u, v, score in accepted:
        center = _refine_center(acc, u, v, params.dp)
        radius = _estimate_radius(edges, center, params)
        circles.append(DetectedCircle(center=center, radius=radius,
                                      color_id=None, accumulator_score=score))
    return circles


def hough_circles(edges: EdgeMap, params: HoughParams,
                  color_id: str | None = None) -> list[DetectedCircle]:
    """Detect circles in an edge map; best accumulator scores first."""
    acc = _accumulate(edges, params)
    peaks = _candidate_peaks(acc)
    accepted = _select(peaks, params, params.accumulator_threshold)
    circles = _materialize(acc, edges, params, accepted)
    if color_id is not None:
        circles = [replace(c, color_id=color_id) for c in circles]
    return circles


def tune_accumulator_threshold(edges: EdgeMap, params: HoughParams,
                               expected_k: int, tolerance: float = 0.5,
                               min_threshold: float = 0.5) -> float:
    """Bisect ``para2`` down to the lower bound that still yields
    exactly ``expected_k`` circles.

    Accumulation and peak finding do not depend on ``para2``, so the
    bisection reuses them and re-runs only the cheap selection stage.
    Raises :class:`BlurEscalationError` when no threshold yields
    exactly k (the count jumps from k-1 to k+1 at a score tie): the
    caller may increase the blur sigma and retry.
    """
    if expected_k < 1:
        raise ValueError("expected_k must be >= 1")
    acc = _accumulate(edges, params)
    peaks = _candidate_peaks(acc)

    def count(p2: float) -> int:
        # Capped at k+1: the bisection only distinguishes ==k from >k.
        return len(_select(peaks, params, p2, stop_after=expected_k + 1))

    lo = min_threshold
    n_lo = count(lo)
    if n_lo == expected_k:
        return lo  # degenerate: even the weakest threshold gives exactly k
    if n_lo < expected_k:
        raise BlurEscalationError(
            expected_k,
            f"only {n_lo} circles at minimum threshold, expected {expected_k}")
    hi = float(acc.max()) + 1.0
    # Invariant: count(lo) > k >= count(hi).
    while hi - lo > tolerance:
        mid = (lo + hi) / 2.0
        if count(mid) > expected_k:
            lo = mid
        else:
            hi = mid
    if count(hi) != expected_k:
        raise BlurEscalationError(
            expected_k,
            f"threshold count jumps past {expected_k} (tie at score {lo:.1f}); "
            "increase blur sigma and retry")
    return hi


def color_check(image: np.ndarray, circle: DetectedCircle, target_color: str,
                gates: ColorGates = ColorGates(), n_samples: int = 32,
                ring_fraction: float = 0.9,
                min_match_fraction: float = 0.25) -> bool:
    """Sample a ring just inside the circle border; pass when more than
    a quarter of the samples match the target color's gate."""
    h, w = image.shape[:2]
    theta = 2.0 * np.pi * np.arange(n_samples) / n_samples
    uu = circle.center[0] + ring_fraction * circle.radius * np.cos(theta)
    vv = circle.center[1] + ring_fraction * circle.radius * np.sin(theta)
    iu = np.clip(np.round(uu).astype(int), 0, w - 1)
    iv = np.clip(np.round(vv).astype(int), 0, h - 1)
    samples = image[iv, iu].reshape(-1, 1, 3)
    matches = gates.mask(samples, target_color)
    return float(matches.mean()) > min_match_fraction
