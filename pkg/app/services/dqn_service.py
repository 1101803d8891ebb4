"""Apprentissage Q profond: mémoire de rejeu, réseau cible figé, exploration epsilon-gloutonne."""

import logging
from collections import deque
from typing import Deque, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import torch

from app.core.exceptions import BufferUnderflow, NonFiniteLossError
from app.ml.mlp import (
    Mlp,
    as_tensor,
    fit_input_scaling,
    greedy_index,
    mlp_forward,
    mlp_init,
    mlp_train_batch,
)
from app.models.checkpoint import CheckpointSet
from app.models.track import ACTIONS, State, TrackMap
from app.schemas.training_dto import DqnConfig, TrainingTraceRow
from app.services.track_service import TrackSimulator

logger = logging.getLogger(__name__)

N_FEATURES = 15
_ZERO_FEATURES = (0,) * N_FEATURES
VELOCITY_FEATURES = slice(2, 4)


class Transition(NamedTuple):
    features: Tuple[int, ...]
    action: int
    reward: float
    next_features: Tuple[int, ...]
    terminal: bool


class ReplayBuffer:
    """FIFO bornée; échantillonnage uniforme avec remise"""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("La capacité doit être >= 1")
        self.capacity = capacity
        self._items: Deque[Transition] = deque(maxlen=capacity)

    def push(self, transition: Transition) -> None:
        self._items.append(transition)

    def sample(self, batch_size: int, rng: np.random.Generator) -> List[Transition]:
        if len(self._items) == 0 or len(self._items) < batch_size:
            raise BufferUnderflow(
                f"Mémoire de rejeu insuffisante: {len(self._items)} < {batch_size}"
            )
        indices = rng.integers(len(self._items), size=batch_size)
        return [self._items[i] for i in indices]

    def contents(self) -> List[Transition]:
        return list(self._items)

    def __len__(self) -> int:
        return len(self._items)


def buffer_push(buffer: ReplayBuffer, transition: Transition) -> None:
    buffer.push(transition)


def buffer_sample(buffer: ReplayBuffer, batch_size: int, rng: np.random.Generator) -> List[Transition]:
    return buffer.sample(batch_size, rng)


class EpsilonSchedule:
    """epsilon_i = max(epsilon_0 * decay^i, epsilon_end), calculé directement pour chaque i"""

    def __init__(self, start: float = 1.0, decay: float = 0.999, end: float = 1e-4):
        self.start = start
        self.decay = decay
        self.end = end

    def value(self, episode: int) -> float:
        return max(self.start * self.decay**episode, self.end)

    def step(self, epsilon: float) -> float:
        """Forme itérative de la même règle"""
        return max(epsilon * self.decay, self.end)


def compute_targets(
    target_network: Mlp, batch: Sequence[Transition], gamma: float
) -> torch.Tensor:
    """y = r pour une transition terminale, r + gamma * max_a' Q(s', a'; theta-) sinon"""
    rewards = torch.tensor([t.reward for t in batch], dtype=torch.float64)
    terminal = torch.tensor([t.terminal for t in batch], dtype=torch.bool)
    if terminal.all():
        return rewards
    with torch.no_grad():
        next_q = target_network(as_tensor([t.next_features for t in batch])).max(dim=1).values
    return torch.where(terminal, rewards, rewards + gamma * next_q)


def dqn_learn_step(
    network: Mlp,
    target_network: Mlp,
    batch: Sequence[Transition],
    gamma: float,
    step_size: float,
) -> float:
    """Un pas de gradient: seules les sorties des actions jouées sont tirées vers y"""
    features = as_tensor([t.features for t in batch])
    targets = compute_targets(target_network, batch, gamma)
    with torch.no_grad():
        full_targets = network(features).clone()
    full_targets[torch.arange(len(batch)), torch.tensor([t.action for t in batch])] = targets
    return mlp_train_batch(network, features, full_targets, step_size)


def map_input_scaling(simulator: TrackSimulator, velocity_bound: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Mise à l'échelle des entrées sans jeu de données.

    Caractéristiques de position: statistiques sur les cases praticables.
    Vitesses: centrées, écart-type d'une loi uniforme sur [-borne, borne].
    """
    cells = simulator.track_map.traversable_cells
    shift, scale = fit_input_scaling([simulator.encode(State(x, y, 0, 0)) for x, y in cells])
    shift[VELOCITY_FEATURES] = 0.0
    spread = float(np.sqrt(velocity_bound * (velocity_bound + 1) / 3.0))
    scale[VELOCITY_FEATURES] = max(1.0, spread)
    return shift, scale


class BestSnapshot:
    """Meilleur réseau selon la moyenne glissante non actualisée; à égalité, la moyenne actualisée"""

    def __init__(self):
        self.key: Optional[Tuple[float, float]] = None
        self.network: Optional[Mlp] = None

    @property
    def score(self) -> Optional[float]:
        return None if self.key is None else self.key[0]

    def offer(self, trailing: float, trailing_disc: float, network: Mlp) -> bool:
        key = (trailing, trailing_disc)
        if self.key is not None and key <= self.key:
            return False
        self.key = key
        self.network = network.clone()
        return True


class DqnTrainer:
    def __init__(self, track_map: TrackMap, config: DqnConfig):
        self.track_map = track_map
        self.config = config
        self.simulator = TrackSimulator(track_map)
        self.schedule = EpsilonSchedule(config.epsilon_start, config.epsilon_decay, config.epsilon_end)

    def _act(self, network: Mlp, features, epsilon: float, rng: np.random.Generator) -> int:
        if rng.random() < epsilon:
            return int(rng.integers(len(ACTIONS)))
        return greedy_index(mlp_forward(network, features))

    def train(self, rng: np.random.Generator) -> CheckpointSet:
        config = self.config
        sim_config = config.sim_config
        window = min(config.trailing_window, config.episodes)

        network = mlp_init(rng)
        network.set_input_scaling(*map_input_scaling(self.simulator, sim_config.velocity_bound))
        target_network = network.clone()
        buffer = ReplayBuffer(config.buffer_capacity)
        checkpoints = CheckpointSet(method="dqn")
        returns: Deque[float] = deque(maxlen=window)
        discounted: Deque[float] = deque(maxlen=window)
        best = BestSnapshot()
        gradient_steps = 0

        try:
            for episode in range(config.episodes):
                epsilon = self.schedule.value(episode)
                state = self.simulator.sample_initial_state(sim_config, rng)
                return_raw, return_disc, discount = 0.0, 0.0, 1.0
                outcome_name, steps = "timeout", 0

                for t in range(config.step_cap):
                    features = self.simulator.encode(state)
                    action = self._act(network, features, epsilon, rng)
                    outcome, reward = self.simulator.step(state, ACTIONS[action], sim_config.noisy, rng)
                    return_raw += reward
                    return_disc += discount * reward
                    discount *= config.gamma
                    steps = t + 1

                    # a capped episode stays non-terminal at the cut step
                    next_features = (
                        _ZERO_FEATURES if outcome.terminal else self.simulator.encode(outcome.next_state)
                    )
                    buffer.push(Transition(features, action, reward, next_features, outcome.terminal))

                    if len(buffer) >= config.batch_size:
                        batch = buffer.sample(config.batch_size, rng)
                        dqn_learn_step(network, target_network, batch, config.gamma, config.step_size)
                        gradient_steps += 1
                        if gradient_steps % config.target_sync_interval == 0:
                            target_network.load_state_dict(network.state_dict())

                    if outcome.terminal:
                        outcome_name = outcome.kind.value
                        break
                    state = outcome.next_state

                returns.append(return_raw)
                discounted.append(return_disc)
                trailing = sum(returns) / len(returns) if len(returns) == window else None
                if trailing is not None:
                    best.offer(trailing, sum(discounted) / len(discounted), network)

                checkpoints.history.append(
                    TrainingTraceRow(
                        episode=episode,
                        return_raw=return_raw,
                        return_disc=return_disc,
                        steps=steps,
                        epsilon=epsilon,
                        trailing_avg=trailing,
                        outcome=outcome_name,
                    ).model_dump()
                )
                if (episode + 1) % 1000 == 0:
                    logger.info(
                        "DQN épisode %d/%d: epsilon %.4f, moyenne glissante %s",
                        episode + 1,
                        config.episodes,
                        epsilon,
                        "n/a" if trailing is None else f"{trailing:.2f}",
                    )
        except NonFiniteLossError as exc:
            logger.warning("DQN interrompu à l'épisode %d: %s", len(checkpoints.history), exc)
            checkpoints.aborted = str(exc)

        final = network.clone()
        checkpoints.add("best", final if best.network is None else best.network, best.score)
        checkpoints.add("final", final)
        return checkpoints


def dqn_train(track_map: TrackMap, config: DqnConfig, rng: np.random.Generator) -> CheckpointSet:
    return DqnTrainer(track_map, config).train(rng)
