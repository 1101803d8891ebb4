from enum import Enum
from typing import List, Optional, Tuple

from pydantic import BaseModel, Field

ActionPair = Tuple[int, int]


class ActionQuality(str, Enum):
    OPTIMAL = "optimal"
    SECURE = "secure"
    FATAL = "fatal"


class Plan(BaseModel):
    """Résultat de l'expert A* pour un état solvable"""

    length: int = Field(..., ge=1, description="Nombre de pas jusqu'à l'arrivée")
    first_actions: List[ActionPair] = Field(
        ..., min_length=1, description="Actions optimales au premier pas (ordre canonique)"
    )
    witness: List[ActionPair] = Field(..., description="Un plan optimal complet")


class PlanResponse(BaseModel):
    map_id: str
    state: Tuple[int, int, int, int]
    solvable: bool
    plan: Optional[Plan] = None


class ClassificationResponse(BaseModel):
    map_id: str
    state: Tuple[int, int, int, int]
    action: ActionPair
    quality: ActionQuality
