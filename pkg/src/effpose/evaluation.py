"""Error metrics: per-axis and 3D RMS and standard deviation.

Standard deviations use the population (divide-by-n) convention,
stated in every report header. Per-axis SD is over signed errors (the
magnitude variant is also emitted for reference); the 3D SD is over
the error norms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ErrorReport:
    source: str
    sample_count: int
    axis_rms: np.ndarray        # (3,) mm
    axis_sd: np.ndarray         # (3,) mm, signed errors, population convention
    axis_sd_abs: np.ndarray     # (3,) mm, SD of |error| per axis
    axis_mean: np.ndarray       # (3,) mm
    rms_3d: float               # mm
    sd_3d: float                # mm, SD of the norms
    mean_3d: float              # mm, mean norm

    def __post_init__(self):
        if np.any(self.axis_rms < 0) or self.rms_3d < 0 or self.sd_3d < 0:
            raise ValueError("RMS/SD must be >= 0")


def compute_report(errors: np.ndarray, source: str = "") -> ErrorReport:
    """Metrics over (n, 3) signed error vectors in mm; needs n >= 2."""
    errors = np.asarray(errors, dtype=float).reshape(-1, 3)
    n = errors.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 error samples, got {n}")
    norms = np.linalg.norm(errors, axis=1)
    return ErrorReport(
        source=source,
        sample_count=n,
        axis_rms=np.sqrt(np.mean(errors**2, axis=0)),
        axis_sd=errors.std(axis=0),
        axis_sd_abs=np.abs(errors).std(axis=0),
        axis_mean=errors.mean(axis=0),
        rms_3d=float(np.sqrt(np.mean(norms**2))),
        sd_3d=float(norms.std()),
        mean_3d=float(norms.mean()),
    )


class UndefinedImprovementError(ValueError):
    """Baseline RMS or SD is zero: percentage improvement is undefined."""


def improvement_summary(before: ErrorReport, after: ErrorReport):
    """(rms_reduction_pct, sd_reduction_pct) between two reports."""
    if before.sample_count != after.sample_count:
        raise ValueError("reports cover different sample counts")
    if before.rms_3d == 0.0 or before.sd_3d == 0.0:
        raise UndefinedImprovementError("baseline RMS/SD is zero")
    return (100.0 * (1.0 - after.rms_3d / before.rms_3d),
            100.0 * (1.0 - after.sd_3d / before.sd_3d))


REPORT_HEADER = ("# source n "
                 "x_rms y_rms z_rms rms_3d "
                 "x_sd y_sd z_sd sd_3d "
                 "x_sd_abs y_sd_abs z_sd_abs "
                 "x_mean y_mean z_mean mean_3d "
                 "(mm; SD = population convention, signed per axis)")


def write_reports(path, reports) -> None:
    with open(path, "w") as fh:
        fh.write(REPORT_HEADER + "\n")
        for r in reports:
            fields = [r.source or "-", str(r.sample_count)]
            fields += [f"{v:.17g}" for v in r.axis_rms] + [f"{r.rms_3d:.17g}"]
            fields += [f"{v:.17g}" for v in r.axis_sd] + [f"{r.sd_3d:.17g}"]
            fields += [f"{v:.17g}" for v in r.axis_sd_abs]
            fields += [f"{v:.17g}" for v in r.axis_mean] + [f"{r.mean_3d:.17g}"]
            fh.write(" ".join(fields) + "\n")


def write_trace(path, timestamps, true_positions, reported_positions,
                corrected_positions=None) -> None:
    """Plot-data export: time plus true/reported(/corrected) per axis."""
    cols = ["t_s", "true_x", "true_y", "true_z", "rep_x", "rep_y", "rep_z"]
    arrays = [np.asarray(timestamps).reshape(-1, 1),
              np.asarray(true_positions), np.asarray(reported_positions)]
    if corrected_positions is not None:
        cols += ["cor_x", "cor_y", "cor_z"]
        arrays.append(np.asarray(corrected_positions))
    data = np.hstack(arrays)
    with open(path, "w") as fh:
        fh.write("# " + " ".join(cols) + "\n")
        for row in data:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")
