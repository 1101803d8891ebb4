"""Agents évaluables: expert A*, aléatoire uniforme, immobile, réseau et classifieurs linéaires."""

import logging
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from app.core.exceptions import ModelFormatError
from app.ml.linear import LinearModel, linear_predict
from app.ml.mlp import Mlp, greedy_index, mlp_forward
from app.models.track import ACTIONS, IDLE, Action, State, TrackMap
from app.repositories.model_repository import load_model
from app.services.planner_service import get_planner

logger = logging.getLogger(__name__)

BUILTIN_AGENTS = ("expert", "random", "idle")


class Agent:
    """Choisit une accélération à partir de l'état et de ses caractéristiques"""

    agent_id: str = "agent"

    def act(
        self, state: State, features: Tuple[int, ...], rng: Optional[np.random.Generator] = None
    ) -> Action:
        raise NotImplementedError


class ExpertAgent(Agent):
    agent_id = "expert"

    def __init__(self, track_map: TrackMap):
        self.planner = get_planner(track_map)

    def act(self, state, features, rng=None) -> Action:
        return self.planner.best_action(state)


class RandomAgent(Agent):
    agent_id = "random"

    def act(self, state, features, rng=None) -> Action:
        return ACTIONS[int(rng.integers(len(ACTIONS)))]


class IdleAgent(Agent):
    agent_id = "idle"

    def act(self, state, features, rng=None) -> Action:
        return IDLE


class NetworkAgent(Agent):
    """Politique gloutonne d'un réseau (imitation ou Q)"""

    def __init__(self, mlp: Mlp, agent_id: str = "network"):
        self.mlp = mlp
        self.agent_id = agent_id
        self._cache: Dict[Tuple[int, ...], Action] = {}

    def act(self, state, features, rng=None) -> Action:
        action = self._cache.get(features)
        if action is None:
            action = ACTIONS[greedy_index(mlp_forward(self.mlp, features))]
            self._cache[features] = action
        return action


class LinearAgent(Agent):
    def __init__(self, model: LinearModel, agent_id: str = "linear"):
        self.model = model
        self.agent_id = agent_id

    def act(self, state, features, rng=None) -> Action:
        return linear_predict(self.model, features)


def build_agent(ref: str, track_map: TrackMap, agent_id: Optional[str] = None) -> Agent:
    """Agent intégré (`expert`, `random`, `idle`) ou fichier de checkpoint"""
    if ref == "expert":
        return ExpertAgent(track_map)
    if ref == "random":
        return RandomAgent()
    if ref == "idle":
        return IdleAgent()

    path = Path(ref)
    if not path.is_file():
        raise ModelFormatError(f"Checkpoint introuvable: {ref}")
    model = load_model(path)
    name = agent_id or path.stem
    logger.debug("Agent %s chargé depuis %s", name, path)
    if isinstance(model, Mlp):
        return NetworkAgent(model, name)
    return LinearAgent(model, name)
