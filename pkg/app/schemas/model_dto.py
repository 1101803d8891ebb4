from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, Field

MODEL_FORMAT = 1

ModelKind = Literal["mlp", "lda", "lr"]


class ModelFile(BaseModel):
    """Enveloppe JSON d'un fichier de modèle"""

    format: int = Field(..., description="Version du format de fichier")
    kind: ModelKind
    arch: List[int]
    params: Union[List[Dict[str, Any]], Dict[str, Any]]
    # mlp only: {"shift": [...], "scale": [...]}, identity when absent
    input_scaling: Optional[Dict[str, List[float]]] = None
