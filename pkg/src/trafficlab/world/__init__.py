"""Scene synthesis: maps, expert traffic logs, serialization, training samples."""

from .types import AgentState, DecisionContext, LaneGraph, Route, SceneLog, SpawnPoint, validate_log
from .mapgen import gen_map, map_id_of, map_spec
from .expert import gen_expert_log
from .logio import read_log, write_log
from .samples import ExtractResult, NeighborTrack, Sample, extract_samples, sample_goal_consistency

__all__ = [
    "AgentState",
    "DecisionContext",
    "LaneGraph",
    "Route",
    "SceneLog",
    "SpawnPoint",
    "validate_log",
    "gen_map",
    "map_id_of",
    "map_spec",
    "gen_expert_log",
    "read_log",
    "write_log",
    "ExtractResult",
    "NeighborTrack",
    "Sample",
    "extract_samples",
    "sample_goal_consistency",
]
