from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Tuple


@dataclass
class Checkpoint:
    tag: str
    model: Any
    # trailing-window average return at snapshot time (DQN only)
    score: Optional[float] = None


@dataclass
class CheckpointSet:
    """Instantanés ordonnés d'un entraînement, étiquettes uniques"""

    method: str
    checkpoints: List[Checkpoint] = field(default_factory=list)
    history: List[Dict[str, Any]] = field(default_factory=list)
    initial: Any = None
    aborted: Optional[str] = None

    def add(self, tag: str, model: Any, score: Optional[float] = None) -> Checkpoint:
        if any(c.tag == tag for c in self.checkpoints):
            raise ValueError(f"Étiquette de checkpoint déjà utilisée: {tag}")
        checkpoint = Checkpoint(tag, model, score)
        self.checkpoints.append(checkpoint)
        return checkpoint

    def replace(self, tag: str, model: Any, score: Optional[float] = None) -> Checkpoint:
        self.checkpoints = [c for c in self.checkpoints if c.tag != tag]
        return self.add(tag, model, score)

    def get(self, tag: str) -> Checkpoint:
        for checkpoint in self.checkpoints:
            if checkpoint.tag == tag:
                return checkpoint
        raise KeyError(tag)

    @property
    def tags(self) -> List[str]:
        return [c.tag for c in self.checkpoints]

    def last(self) -> Optional[Checkpoint]:
        return self.checkpoints[-1] if self.checkpoints else None

    def items(self) -> Iterator[Tuple[str, Any]]:
        return ((c.tag, c.model) for c in self.checkpoints)

    def __len__(self) -> int:
        return len(self.checkpoints)

    def __iter__(self) -> Iterator[Checkpoint]:
        return iter(self.checkpoints)
