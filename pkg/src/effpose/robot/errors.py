"""Cable transmission error model.

True joint positions differ from the encoder-side values through three
effects plus measurement-frame offsets:

* stretch: a tension-proportional joint offset, with motor torque as
  the tension proxy (stiffness varies with load);
* backlash: the classic play operator with a per-joint half-width,
  leaving the joint behind the motor by up to that width depending on
  motion direction history;
* white joint noise.

On the Cartesian side a constant world offset models the measurement
frame misalignment, and a per-run offset re-drawn for every trajectory
models the small shift observed whenever the system restarts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class CableErrorModel:
    # rad (or mm for the prismatic joint) per unit torque
    stretch_gain: np.ndarray = field(
        default_factory=lambda: np.array([7.5e-3, 1.05e-2, 0.3, 2e-3, 2e-3, 0.0, 0.0]))
    # play half-width, rad (mm for the prismatic joint)
    backlash: np.ndarray = field(
        default_factory=lambda: np.array([1.5e-3, 1.2e-3, 0.4, 4e-3, 4e-3, 0.0, 0.0]))
    # white noise sigma per joint, rad (mm for prismatic)
    noise_sigma: np.ndarray = field(
        default_factory=lambda: np.array([1.5e-4, 1.5e-4, 0.05, 3e-4, 3e-4, 0.0, 0.0]))
    static_offset: np.ndarray = field(
        default_factory=lambda: np.array([1.5, -2.0, 1.0]))  # mm, world
    # sigma of the per-trajectory (per-restart) world offset, mm per axis
    restart_offset_sigma: float = 0.3

    def __post_init__(self):
        for name in ("stretch_gain", "backlash", "noise_sigma"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (7,):
                raise ValueError(f"{name} must have 7 entries")
            object.__setattr__(self, name, arr)
        if np.any(self.backlash < 0):
            raise ValueError("backlash half-widths must be >= 0")
        if not np.all(np.isfinite(self.stretch_gain)):
            raise ValueError("stretch gains must be finite")
        object.__setattr__(self, "static_offset",
                           np.asarray(self.static_offset, dtype=float))

    @staticmethod
    def zero() -> "CableErrorModel":
        z = np.zeros(7)
        return CableErrorModel(stretch_gain=z, backlash=z, noise_sigma=z,
                               static_offset=np.zeros(3),
                               restart_offset_sigma=0.0)

    def scaled_stretch(self, factor: float) -> "CableErrorModel":
        return CableErrorModel(
            stretch_gain=self.stretch_gain * factor,
            backlash=self.backlash.copy(),
            noise_sigma=self.noise_sigma.copy(),
            static_offset=self.static_offset.copy(),
            restart_offset_sigma=self.restart_offset_sigma)


class PlayOperator:
    """Sequential backlash (play) hysteresis with carry-over state."""

    def __init__(self, half_width: np.ndarray, initial: np.ndarray):
        self.b = np.asarray(half_width, dtype=float)
        self.y = np.asarray(initial, dtype=float).copy()

    def advance(self, inputs: np.ndarray) -> np.ndarray:
        """Run over (n, 7) inputs; returns (n, 7) outputs."""
        inputs = np.asarray(inputs, dtype=float)
        if not np.any(self.b > 0):
            self.y = inputs[-1].copy()
            return inputs.copy()
        out = np.empty_like(inputs)
        y, b = self.y, self.b
        for k in range(inputs.shape[0]):
            y = np.minimum(np.maximum(y, inputs[k] - b), inputs[k] + b)
            out[k] = y
        self.y = y
        return out
