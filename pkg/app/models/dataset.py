from typing import NamedTuple, Tuple

from app.models.track import Action, State


class LabeledSample(NamedTuple):
    """Unité de donnée d'imitation: état, caractéristiques et action(s) de l'expert"""

    state: State
    features: Tuple[int, ...]
    labels: Tuple[Action, ...]
