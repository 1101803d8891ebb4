from .dataset_dto import DATASET_PRESETS, DatasetConfig, DatasetHeader, SampleRecord
from .eval_dto import EvalConfig, EvalReport, QualityReport
from .manifest_dto import RunManifest
from .planner_dto import ActionQuality, ClassificationResponse, Plan, PlanResponse
from .track_dto import EVAL_PRESETS, SimConfig, TraceRecord
from .training_dto import DaggerConfig, DqnConfig, PilConfig, TrainingTraceRow

__all__ = [
    "DATASET_PRESETS",
    "DatasetConfig",
    "DatasetHeader",
    "SampleRecord",
    "EvalConfig",
    "EvalReport",
    "QualityReport",
    "RunManifest",
    "ActionQuality",
    "ClassificationResponse",
    "Plan",
    "PlanResponse",
    "EVAL_PRESETS",
    "SimConfig",
    "TraceRecord",
    "DaggerConfig",
    "DqnConfig",
    "PilConfig",
    "TrainingTraceRow",
]
