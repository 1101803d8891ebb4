from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.schemas.track_dto import DQN_MODES, SimConfig

# default SGD steps
IMITATION_STEP_SIZE = 1e-2
DQN_STEP_SIZE = 1e-3
MAX_PIL_EPOCHS = 20


class PilConfig(BaseModel):
    """Apprentissage par imitation passive d'un réseau"""

    model_config = ConfigDict(frozen=True)

    dataset_preset: Optional[str] = None
    max_epochs: int = Field(MAX_PIL_EPOCHS, ge=1, le=MAX_PIL_EPOCHS)
    step_size: float = Field(IMITATION_STEP_SIZE, gt=0)
    batch_size: int = Field(32, ge=1)


class DaggerConfig(BaseModel):
    """DAGGER avec beta = 0: l'expert ne pilote jamais, il étiquette seulement"""

    model_config = ConfigDict(frozen=True)

    pretrain_preset: Optional[str] = None
    iterations: int = Field(20, ge=1)
    samples_per_iteration: int = Field(5000, ge=1)
    epochs_per_iteration: int = Field(8, ge=1)
    pretrain_epochs: int = Field(8, ge=1)
    beta: float = 0.0
    step_size: float = Field(IMITATION_STEP_SIZE, gt=0)
    batch_size: int = Field(32, ge=1)
    random_start: bool = False
    random_velocity: bool = False
    noisy: bool = False
    velocity_bound: int = Field(5, ge=0)
    step_cap: int = Field(1000, ge=1)

    @field_validator("beta")
    def validate_beta(cls, v):
        if v != 0:
            raise ValueError("Seul beta = 0 est supporté")
        return v

    @property
    def sim_config(self) -> SimConfig:
        return SimConfig(
            random_start=self.random_start,
            random_velocity=self.random_velocity,
            noisy=self.noisy,
            velocity_bound=self.velocity_bound,
        )


class DqnConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    mode: str = "NS-D"
    buffer_capacity: int = Field(100_000, ge=1)
    episodes: int = Field(100_000, ge=1)
    gamma: float = Field(0.99, ge=0.0, le=1.0)
    epsilon_start: float = Field(1.0, ge=0.0, le=1.0)
    epsilon_decay: float = Field(0.999, gt=0.0, le=1.0)
    epsilon_end: float = Field(1e-4, ge=0.0, le=1.0)
    batch_size: int = Field(32, ge=1)
    target_sync_interval: int = Field(500, ge=1)
    step_size: float = Field(DQN_STEP_SIZE, gt=0)
    step_cap: int = Field(1000, ge=1)
    trailing_window: int = Field(100, ge=1)

    @field_validator("mode")
    def validate_mode(cls, v):
        if v not in DQN_MODES:
            raise ValueError(f"Mode DQN inconnu: {v} (attendu: {', '.join(DQN_MODES)})")
        return v

    @property
    def sim_config(self) -> SimConfig:
        random_start, noisy = DQN_MODES[self.mode]
        return SimConfig(random_start=random_start, random_velocity=False, noisy=noisy)


class TrainingTraceRow(BaseModel):
    """Une ligne du CSV de progression DQN"""

    episode: int
    return_raw: float
    return_disc: float
    steps: int
    epsilon: float
    trailing_avg: Optional[float] = None
    outcome: str


class DaggerIterationReport(BaseModel):
    iteration: int
    collected: int
    skipped_unsolvable: int
    aggregate_size: int
    final_loss: Optional[float] = None
