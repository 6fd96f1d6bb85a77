"""The 118-float robot state layout and dataset files.

The state vector layout is this artifact's own (the real message's
field order is not public); it honors the documented category list and
is carried verbatim in every dataset file header, so any future adapter
for real hardware maps into it explicitly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

RAVENSTATE_SIZE = 118
LABEL_SIZE = 3

# name -> (start, stop) into the 118-float vector
FIELD_SLICES = {
    "reported_pose": (0, 12),        # (a) position 3 + rotation 9, row-major
    "desired_pose": (12, 24),        # (b) position 3 + rotation 9
    "joint_pos": (24, 31),           # (c) current joint pose
    "desired_joint_pos": (31, 38),   # (d)
    "motor_vel": (38, 45),           # (e) motor side
    "joint_vel": (45, 52),           # (e) joint side
    "motor_torque": (52, 59),        # (f)
    "motor_pos": (59, 66),           # (g) ...
    "desired_motor_pos": (66, 73),
    "desired_joint_vel": (73, 80),
    "cartesian_vel": (80, 83),
    "desired_cartesian_vel": (83, 86),
    "grasper_desired": (86, 88),
    "grasper_current": (88, 90),
    "runlevel": (90, 91),
    "sublevel": (91, 92),
    "sequence": (92, 93),
    "padding": (93, 118),
}

DATASET_MAGIC = b"RVDS"
DATASET_VERSION = 1


def field_view(values: np.ndarray, name: str) -> np.ndarray:
    start, stop = FIELD_SLICES[name]
    return values[..., start:stop]


def reported_position(values: np.ndarray) -> np.ndarray:
    """Kinematics-reported end-effector position, mm (first 3 floats)."""
    return values[..., 0:3]


@dataclass
class Dataset:
    """Time-synchronized (state, position-error) pairs with trajectory ids.

    ``features`` is (n, 118), ``labels`` (n, 3) mm, ``timestamps`` (n,)
    seconds, ``trajectory_ids`` (n,) ints. Normalization statistics are
    attached by the training code and always come from the training
    split only.
    """

    timestamps: np.ndarray
    features: np.ndarray
    labels: np.ndarray
    trajectory_ids: np.ndarray
    feature_mean: np.ndarray | None = None
    feature_std: np.ndarray | None = None

    def __post_init__(self):
        n = len(self.timestamps)
        if self.features.shape != (n, RAVENSTATE_SIZE):
            raise ValueError(f"features must be (n, {RAVENSTATE_SIZE})")
        if self.labels.shape != (n, LABEL_SIZE):
            raise ValueError(f"labels must be (n, {LABEL_SIZE})")
        if self.trajectory_ids.shape != (n,):
            raise ValueError("trajectory_ids must be (n,)")

    def __len__(self) -> int:
        return len(self.timestamps)

    def trajectory_table(self) -> list[tuple[int, int, int]]:
        """(trajectory id, start index, end index) for each contiguous block."""
        table = []
        ids = self.trajectory_ids
        if len(ids) == 0:
            return table
        start = 0
        for i in range(1, len(ids) + 1):
            if i == len(ids) or ids[i] != ids[start]:
                table.append((int(ids[start]), start, i))
                start = i
        return table

    def subset(self, index: np.ndarray) -> "Dataset":
        return Dataset(self.timestamps[index], self.features[index],
                       self.labels[index], self.trajectory_ids[index],
                       self.feature_mean, self.feature_std)


def write_dataset(path, ds: Dataset) -> None:
    """Versioned binary: magic, version, JSON header, float64 records."""
    header = {
        "n_records": len(ds),
        "n_features": RAVENSTATE_SIZE,
        "n_labels": LABEL_SIZE,
        "field_slices": {k: list(v) for k, v in FIELD_SLICES.items()},
        "trajectory_table": ds.trajectory_table(),
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    records = np.concatenate(
        [ds.timestamps[:, None], ds.features, ds.labels], axis=1)
    with open(path, "wb") as fh:
        fh.write(DATASET_MAGIC)
        fh.write(np.uint32(DATASET_VERSION).tobytes())
        fh.write(np.uint32(len(blob)).tobytes())
        fh.write(blob)
        fh.write(records.astype(np.float64).tobytes())


def read_dataset(path) -> Dataset:
    with open(path, "rb") as fh:
        if fh.read(4) != DATASET_MAGIC:
            raise ValueError("not a dataset file")
        version = int(np.frombuffer(fh.read(4), dtype=np.uint32)[0])
        if version != DATASET_VERSION:
            raise ValueError(f"unsupported dataset version {version}")
        blob_len = int(np.frombuffer(fh.read(4), dtype=np.uint32)[0])
        header = json.loads(fh.read(blob_len).decode("utf-8"))
        n = header["n_records"]
        width = 1 + header["n_features"] + header["n_labels"]
        records = np.frombuffer(fh.read(n * width * 8), dtype=np.float64)
    records = records.reshape(n, width)
    trajectory_ids = np.empty(n, dtype=np.int64)
    for tid, start, stop in header["trajectory_table"]:
        trajectory_ids[start:stop] = tid
    return Dataset(
        timestamps=records[:, 0].copy(),
        features=records[:, 1:1 + RAVENSTATE_SIZE].copy(),
        labels=records[:, 1 + RAVENSTATE_SIZE:].copy(),
        trajectory_ids=trajectory_ids,
    )


def write_dataset_text(path, ds: Dataset) -> None:
    """Delimited-text export: one row per record, documented header."""
    names = [f"f{i:03d}" for i in range(RAVENSTATE_SIZE)]
    with open(path, "w") as fh:
        fh.write("# timestamp_s trajectory_id "
                 + " ".join(names) + " err_x_mm err_y_mm err_z_mm\n")
        for i in range(len(ds)):
            fh.write(f"{ds.timestamps[i]:.17g} {int(ds.trajectory_ids[i])} "
                     + " ".join(f"{v:.17g}" for v in ds.features[i])
                     + " " + " ".join(f"{v:.17g}" for v in ds.labels[i]) + "\n")
