from .checkpoint import Checkpoint, CheckpointSet
from .dataset import LabeledSample
from .track import (
    ACTIONS,
    ACTION_INDEX,
    DIRECTIONS,
    IDLE,
    Action,
    CellKind,
    Outcome,
    Position,
    State,
    StepOutcome,
    TrackMap,
    Trajectory,
)

__all__ = [
    "ACTIONS",
    "ACTION_INDEX",
    "DIRECTIONS",
    "IDLE",
    "Action",
    "CellKind",
    "Checkpoint",
    "CheckpointSet",
    "LabeledSample",
    "Outcome",
    "Position",
    "State",
    "StepOutcome",
    "TrackMap",
    "Trajectory",
]
