from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.exceptions import ConfigurationError, UnknownPreset

OutcomeName = Literal["moved", "goal", "crash"]


class SimConfig(BaseModel):
    """Variante de simulation: NS/RS, ZV/RV, N/D"""

    model_config = ConfigDict(frozen=True)

    random_start: bool = Field(False, description="RS (toute case praticable) vs NS")
    random_velocity: bool = Field(False, description="RV vs ZV")
    noisy: bool = Field(False, description="N (route mouillée) vs D")
    velocity_bound: int = Field(5, ge=0, description="Borne par composante sous RV")

    @model_validator(mode="after")
    def reject_ns_rv(self):
        if self.random_velocity and not self.random_start:
            raise ValueError("La combinaison NS+RV n'est pas supportée")
        return self

    @property
    def preset_id(self) -> str:
        start = "RS" if self.random_start else "NS"
        velocity = "RV" if self.random_velocity else "ZV"
        return f"{start}-{velocity}-{'N' if self.noisy else 'D'}"


# Configurations d'évaluation (RS, RV, bruit)
EVAL_PRESETS: Dict[str, tuple] = {
    "NS-ZV-D": (False, False, False),
    "NS-ZV-N": (False, False, True),
    "RS-ZV-D": (True, False, False),
    "RS-ZV-N": (True, False, True),
    "RS-RV-D": (True, True, False),
    "RS-RV-N": (True, True, True),
}

# Configurations d'entraînement DQN (RS, bruit), départ à vitesse nulle
DQN_MODES: Dict[str, tuple] = {
    "NS-D": (False, False),
    "NS-N": (False, True),
    "RS-D": (True, False),
    "RS-N": (True, True),
}

QUALITY_PRESETS = ("NS-ZV", "RS-ZV", "RS-RV")


def sim_config_for_preset(preset: str, velocity_bound: int = 5) -> SimConfig:
    """Traduire un identifiant de configuration d'évaluation en SimConfig"""
    if preset not in EVAL_PRESETS:
        raise UnknownPreset(f"Configuration inconnue: {preset}")
    random_start, random_velocity, noisy = EVAL_PRESETS[preset]
    return SimConfig(
        random_start=random_start,
        random_velocity=random_velocity,
        noisy=noisy,
        velocity_bound=velocity_bound,
    )


def sim_config_for_quality(preset: str, velocity_bound: int = 5) -> SimConfig:
    """Presets de qualité d'action: uniquement déterministes"""
    if preset.endswith("-N"):
        raise ConfigurationError(
            "La qualité d'action n'a pas de sens sous dynamique bruitée"
        )
    name = preset[:-2] if preset.endswith("-D") else preset
    if name not in QUALITY_PRESETS:
        raise UnknownPreset(f"Configuration de qualité inconnue: {preset}")
    return sim_config_for_preset(f"{name}-D", velocity_bound)


class TraceRecord(BaseModel):
    """Un pas d'épisode tel qu'écrit dans les fichiers de trace"""

    x: int
    y: int
    vx: int
    vy: int
    ax: int = Field(..., ge=-1, le=1)
    ay: int = Field(..., ge=-1, le=1)
    noise_applied: bool
    outcome: OutcomeName
    reward: int


class FeatureVectorOut(BaseModel):
    names: List[str]
    values: List[int]


class MapInfo(BaseModel):
    map_id: str
    width: int
    height: int
    start_cells: int
    goal_cells: int
    traversable_cells: int
    content_hash: Optional[str] = None
