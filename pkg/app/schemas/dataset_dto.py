from typing import Dict, List, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.core.exceptions import UnknownPreset
from app.schemas.track_dto import SimConfig

# preset -> (RS, RV, T, E, U)
DATASET_PRESETS: Dict[str, Tuple[bool, bool, bool, bool, bool]] = {
    "RS-RV": (True, True, False, False, False),
    "NS-ZV-T": (False, False, True, False, False),
    "RS-ZV-T": (True, False, True, False, False),
    "RS-RV-T": (True, True, True, False, False),
    "RS-RV-E": (True, True, False, True, False),
    "RS-RV-U": (True, True, False, False, True),
}


class DatasetConfig(BaseModel):
    """Options de génération d'un jeu de données étiqueté"""

    model_config = ConfigDict(frozen=True)

    random_start: bool = False
    random_velocity: bool = False
    trajectory: bool = Field(False, description="T: tous les états de la trace optimale")
    exhaustive: bool = Field(False, description="E: toutes les actions optimales")
    unique: bool = Field(False, description="U: seulement les états à action optimale unique")
    size: int = Field(100_000, ge=1)
    velocity_bound: int = Field(5, ge=0)

    @model_validator(mode="after")
    def check_combination(self):
        if self.exhaustive and self.trajectory:
            raise ValueError("L'option E exclut l'option T")
        if self.unique and self.exhaustive:
            raise ValueError("L'option U exclut l'option E")
        if self.flags not in DATASET_PRESETS.values():
            raise ValueError(f"Combinaison hors presets: {self.flags}")
        return self

    @property
    def flags(self) -> Tuple[bool, bool, bool, bool, bool]:
        return (
            self.random_start,
            self.random_velocity,
            self.trajectory,
            self.exhaustive,
            self.unique,
        )

    @property
    def preset(self) -> str:
        return next(name for name, flags in DATASET_PRESETS.items() if flags == self.flags)

    @property
    def sim_config(self) -> SimConfig:
        return SimConfig(
            random_start=self.random_start,
            random_velocity=self.random_velocity,
            noisy=False,
            velocity_bound=self.velocity_bound,
        )

    @classmethod
    def from_preset(
        cls, preset: str, size: int = 100_000, velocity_bound: int = 5
    ) -> "DatasetConfig":
        if preset not in DATASET_PRESETS:
            raise UnknownPreset(f"Preset de données inconnu: {preset}")
        rs, rv, t, e, u = DATASET_PRESETS[preset]
        return cls(
            random_start=rs,
            random_velocity=rv,
            trajectory=t,
            exhaustive=e,
            unique=u,
            size=size,
            velocity_bound=velocity_bound,
        )


class DatasetHeader(BaseModel):
    """Première ligne d'un fichier JSONL de données"""

    map_id: str
    preset: str
    size: int = Field(..., ge=0)
    seed: int
    velocity_bound: int = Field(..., ge=0)

    @field_validator("preset")
    def validate_preset(cls, v):
        if v not in DATASET_PRESETS:
            raise UnknownPreset(f"Preset de données inconnu: {v}")
        return v


class SampleRecord(BaseModel):
    x: int
    y: int
    vx: int
    vy: int
    features: List[int] = Field(..., min_length=15, max_length=15)
    labels: List[Tuple[int, int]] = Field(..., min_length=1)

    @field_validator("labels")
    def validate_labels(cls, v):
        for ax, ay in v:
            if ax not in (-1, 0, 1) or ay not in (-1, 0, 1):
                raise ValueError(f"Action hors de {{-1,0,1}}^2: {(ax, ay)}")
        return v
