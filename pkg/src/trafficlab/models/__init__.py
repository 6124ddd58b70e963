"""Imitation models: goal map, goal-conditioned controller, neighbor
predictor, cloning baseline and the occupancy scorer, plus their training."""

from .goals import GoalMap, GoalPose, goal_map_from_output, sample_goals
from .infer import (
    bc_forward,
    goalnet_forward,
    occupancy_forward,
    policy_controls_batch,
    policy_features,
    policy_forward,
    predictor_forward,
)
from .nets import (
    Encoder,
    GoalNet,
    OccupancyNet,
    PolicyNets,
    fine_to_level,
    occupancy_stride,
)
from .scoring import LikelihoodResult, likelihood_score
from .training import (
    Dataset,
    TrainResult,
    build_dataset,
    build_model,
    load_model,
    save_model,
    train_bits,
    train_goalnet,
    train_occupancy,
    train_policy_nets,
)

__all__ = [
    "GoalMap",
    "GoalPose",
    "goal_map_from_output",
    "sample_goals",
    "bc_forward",
    "goalnet_forward",
    "occupancy_forward",
    "policy_controls_batch",
    "policy_features",
    "policy_forward",
    "predictor_forward",
    "Encoder",
    "GoalNet",
    "OccupancyNet",
    "PolicyNets",
    "fine_to_level",
    "occupancy_stride",
    "LikelihoodResult",
    "likelihood_score",
    "Dataset",
    "TrainResult",
    "build_dataset",
    "build_model",
    "load_model",
    "save_model",
    "train_bits",
    "train_goalnet",
    "train_occupancy",
    "train_policy_nets",
]
