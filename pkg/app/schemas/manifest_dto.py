from datetime import datetime
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field


class RunManifest(BaseModel):
    """Tout ce qu'il faut pour rejouer une commande à l'identique"""

    subcommand: str
    config: Dict[str, Any] = Field(default_factory=dict)
    seed: int
    map_id: Optional[str] = None
    map_hash: Optional[str] = None
    tool_version: str
    outputs: List[str] = Field(default_factory=list)
    # not part of the determinism contract
    created_at: Optional[datetime] = None
