from effpose.nn.layers import Adam, BatchNorm, Dense, Sigmoid
from effpose.nn.model import MLPModel, load_model, save_model
from effpose.nn.splits import SplitSpec, split_by_trajectory
from effpose.nn.training import (
    TrainingConfig,
    correct_position,
    train,
    write_history,
)

__all__ = [
    "Adam",
    "BatchNorm",
    "Dense",
    "MLPModel",
    "Sigmoid",
    "SplitSpec",
    "TrainingConfig",
    "correct_position",
    "load_model",
    "save_model",
    "split_by_trajectory",
    "train",
    "write_history",
]
