from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.schemas.track_dto import EVAL_PRESETS, TraceRecord

REPORT_COLUMNS = [
    "agent",
    "config",
    "runs",
    "wins",
    "losses",
    "timeouts",
    "win_rate",
    "loss_rate",
    "timeout_rate",
    "avg_return_disc",
    "avg_return_raw",
    "avg_steps_wins",
    "solvable_start_frac",
]

QUALITY_COLUMNS = [
    "agent",
    "config",
    "decisions",
    "optimal",
    "secure",
    "fatal",
    "excluded_unsolvable",
]


class EvalConfig(BaseModel):
    """Protocole d'évaluation: départs partagés entre agents, plafond de pas, graine maîtresse"""

    model_config = ConfigDict(frozen=True)

    preset: str = "NS-ZV-D"
    runs: int = Field(10_000, ge=1)
    step_cap: int = Field(1000, ge=1)
    gamma: float = Field(0.99, ge=0.0, le=1.0)
    seed: int = 0
    velocity_bound: int = Field(5, ge=0)

    @field_validator("preset")
    def validate_preset(cls, v):
        if v not in EVAL_PRESETS:
            raise ValueError(f"Configuration inconnue: {v} (attendu: {', '.join(EVAL_PRESETS)})")
        return v


class EvalReport(BaseModel):
    agent: str
    config: str
    runs: int
    wins: int
    losses: int
    timeouts: int
    win_rate: float
    loss_rate: float
    timeout_rate: float
    avg_return_disc: float
    avg_return_raw: float
    avg_steps_wins: Optional[float] = None
    solvable_start_frac: float


class QualityReport(BaseModel):
    agent: str
    config: str
    decisions: int
    optimal: int
    secure: int
    fatal: int
    excluded_unsolvable: int

    def fraction(self, count: int) -> float:
        return count / self.decisions if self.decisions else 0.0

    @property
    def optimal_frac(self) -> float:
        return self.fraction(self.optimal)

    @property
    def secure_frac(self) -> float:
        return self.fraction(self.secure)

    @property
    def fatal_frac(self) -> float:
        return self.fraction(self.fatal)


class EpisodeHeader(BaseModel):
    """En-tête d'un fichier de trace d'épisode"""

    map_id: str
    agent: str
    config: str
    run: int = Field(..., ge=0)
    start: List[int] = Field(..., min_length=4, max_length=4)
    result: str = Field(..., pattern="^(win|loss|timeout)$")


class EpisodeFile(BaseModel):
    header: EpisodeHeader
    steps: List[TraceRecord]

