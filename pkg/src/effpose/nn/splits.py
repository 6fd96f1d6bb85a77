"""Trajectory-level train/validation/test splitting.

Whole trajectories are assigned to splits so that no temporal
neighbors leak across the boundary; sample-count fractions land within
a few percent of the targets when trajectories have similar lengths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from effpose.robot.dataset import Dataset
from effpose.seeding import derived_rng


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    val_fraction: float = 0.1
    test_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        total = self.train_fraction + self.val_fraction + self.test_fraction
        if abs(total - 1.0) > 1e-9:
            raise ValueError("fractions must sum to 1")
        if min(self.train_fraction, self.val_fraction, self.test_fraction) <= 0:
            raise ValueError("fractions must be positive")


def split_by_trajectory(ds: Dataset, spec: SplitSpec = SplitSpec()):
    """Partition whole trajectories into (train, val, test) datasets.

    Returns (train, val, test, assignment) where assignment maps
    trajectory id -> split name. Requires at least 10 trajectories.
    """
    table = ds.trajectory_table()
    if len(table) < 10:
        raise ValueError(f"need >= 10 trajectories to split, got {len(table)}")
    rng = derived_rng(spec.seed, "split")
    order = rng.permutation(len(table))
    n = len(ds)
    targets = {"test": spec.test_fraction * n, "val": spec.val_fraction * n}
    assignment: dict[int, str] = {}
    counts = {"test": 0, "val": 0, "train": 0}
    for which in ("test", "val"):
        for k in order:
            tid, start, stop = table[k]
            if tid in assignment:
                continue
            if counts[which] >= targets[which]:
                break
            assignment[tid] = which
            counts[which] += stop - start
    for tid, start, stop in table:
        if tid not in assignment:
            assignment[tid] = "train"
            counts["train"] += stop - start

    index = {name: np.zeros(n, dtype=bool) for name in ("train", "val", "test")}
    for tid, start, stop in table:
        index[assignment[tid]][start:stop] = True
    parts = tuple(ds.subset(np.nonzero(index[name])[0])
                  for name in ("train", "val", "test"))
    realized = {name: index[name].sum() / n for name in ("train", "val", "test")}
    wanted = {"train": spec.train_fraction, "val": spec.val_fraction,
              "test": spec.test_fraction}
    for name in realized:
        if abs(realized[name] - wanted[name]) > 0.05:
            raise ValueError(
                f"{name} split landed at {realized[name]:.3f}, "
                f"target {wanted[name]:.3f}; too few/uneven trajectories")
    return (*parts, assignment)


def split_random_points(ds: Dataset, spec: SplitSpec = SplitSpec()):
    """Point-level random split. Deliberately leaks temporal neighbors
    across splits; kept for the overfitting comparison."""
    rng = derived_rng(spec.seed, "points")
    order = rng.permutation(len(ds))
    n_test = int(round(spec.test_fraction * len(ds)))
    n_val = int(round(spec.val_fraction * len(ds)))
    test_idx = np.sort(order[:n_test])
    val_idx = np.sort(order[n_test:n_test + n_val])
    train_idx = np.sort(order[n_test + n_val:])
    return ds.subset(train_idx), ds.subset(val_idx), ds.subset(test_idx)
