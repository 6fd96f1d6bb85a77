from effpose.robot.kinematics import (
    HOME_POSITION,
    JOINT_LIMITS,
    forward_kinematics,
    forward_kinematics_full,
    workspace_to_joints,
)
from effpose.robot.errors import CableErrorModel
from effpose.robot.trajectories import Trajectory, generate_teleop_trajectories
from effpose.robot.simulate import (
    RavenStateRecord,
    build_dataset,
    motor_torques,
    simulate_chunks,
    simulate_run,
)
from effpose.robot.dataset import (
    Dataset,
    FIELD_SLICES,
    RAVENSTATE_SIZE,
    read_dataset,
    reported_position,
    write_dataset,
    write_dataset_text,
)

__all__ = [
    "CableErrorModel",
    "Dataset",
    "FIELD_SLICES",
    "HOME_POSITION",
    "JOINT_LIMITS",
    "RAVENSTATE_SIZE",
    "RavenStateRecord",
    "Trajectory",
    "build_dataset",
    "forward_kinematics",
    "forward_kinematics_full",
    "generate_teleop_trajectories",
    "motor_torques",
    "read_dataset",
    "reported_position",
    "simulate_chunks",
    "simulate_run",
    "workspace_to_joints",
    "write_dataset",
    "write_dataset_text",
]
