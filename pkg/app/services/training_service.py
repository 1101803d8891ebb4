"""Apprentissage par imitation: PIL (réseau et classifieurs linéaires) et DAGGER."""

import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.core.exceptions import NonFiniteLossError
from app.ml.linear import LinearKind, linear_fit
from app.ml.mlp import (
    Mlp,
    fit_input_scaling,
    greedy_index,
    mlp_forward,
    mlp_init,
    mlp_train_batch,
)
from app.models.checkpoint import CheckpointSet
from app.models.dataset import LabeledSample
from app.models.track import ACTION_INDEX, ACTIONS, State, TrackMap
from app.schemas.training_dto import DaggerConfig, DaggerIterationReport, PilConfig
from app.services.planner_service import get_planner
from app.services.track_service import TrackSimulator

logger = logging.getLogger(__name__)


def build_targets(samples: Sequence[LabeledSample]) -> Tuple[np.ndarray, np.ndarray]:
    """Entrées (N x 15) et cibles one-hot, multi-hot pour les échantillons E (N x 9)"""
    features = np.asarray([s.features for s in samples], dtype=np.float64)
    targets = np.zeros((len(samples), len(ACTIONS)))
    for i, sample in enumerate(samples):
        for label in sample.labels:
            targets[i, ACTION_INDEX[tuple(label)]] = 1.0
    return features, targets


def reduce_labels(samples: Sequence[LabeledSample]) -> Tuple[np.ndarray, np.ndarray]:
    """Étiquette unique par échantillon (première dans l'ordre canonique) pour LDA / LR"""
    features = np.asarray([s.features for s in samples], dtype=np.float64)
    labels = np.asarray(
        [min(ACTION_INDEX[tuple(label)] for label in s.labels) for s in samples], dtype=np.int64
    )
    return features, labels


def run_epoch(
    mlp: Mlp,
    features: np.ndarray,
    targets: np.ndarray,
    step_size: float,
    batch_size: int,
    rng: np.random.Generator,
) -> float:
    """Une passe mélangée sur les données; renvoie la perte moyenne des lots"""
    order = rng.permutation(features.shape[0])
    losses = []
    for start in range(0, len(order), batch_size):
        batch = order[start : start + batch_size]
        losses.append(mlp_train_batch(mlp, features[batch], targets[batch], step_size))
    return float(np.mean(losses))


def accuracy(mlp: Mlp, samples: Sequence[LabeledSample]) -> float:
    """Part des échantillons dont l'action gloutonne est l'une des étiquettes"""
    if not samples:
        return 0.0
    scores = mlp_forward(mlp, [s.features for s in samples])
    hits = sum(
        ACTIONS[greedy_index(row)] in sample.labels for row, sample in zip(scores, samples)
    )
    return hits / len(samples)


def _fit_network(
    samples: Sequence[LabeledSample],
    epochs: int,
    step_size: float,
    batch_size: int,
    rng: np.random.Generator,
    checkpoints: Optional[CheckpointSet] = None,
    tag_format: str = "epoch-{:02d}",
) -> Tuple[Mlp, Optional[float]]:
    mlp = mlp_init(rng)
    features, targets = build_targets(samples)
    mlp.set_input_scaling(*fit_input_scaling(features))
    loss = None
    for epoch in range(1, epochs + 1):
        loss = run_epoch(mlp, features, targets, step_size, batch_size, rng)
        logger.info("Époque %d/%d: perte %.6f", epoch, epochs, loss)
        if checkpoints is not None:
            checkpoints.add(tag_format.format(epoch), mlp.clone())
    return mlp, loss


def train_pil(
    samples: Sequence[LabeledSample], config: PilConfig, rng: np.random.Generator
) -> CheckpointSet:
    """Imitation passive: un checkpoint par époque (après les mises à jour de l'époque)"""
    if not samples:
        raise ValueError("Jeu de données vide")
    checkpoints = CheckpointSet(method="pil-nn")
    try:
        _fit_network(
            samples, config.max_epochs, config.step_size, config.batch_size, rng, checkpoints
        )
    except NonFiniteLossError as exc:
        logger.warning("Entraînement interrompu après %d époques: %s", len(checkpoints), exc)
        checkpoints.aborted = str(exc)
    return checkpoints


def train_linear(
    samples: Sequence[LabeledSample], kind: LinearKind
) -> CheckpointSet:
    """LDA / LR sur les étiquettes réduites; un seul checkpoint"""
    kind = LinearKind(kind)
    features, labels = reduce_labels(samples)
    checkpoints = CheckpointSet(method=f"pil-{kind.value}")
    checkpoints.add("final", linear_fit(kind, features, labels))
    return checkpoints


class GreedyPolicy:
    """Politique gloutonne d'un réseau, mémorisée par état"""

    def __init__(self, mlp: Mlp, simulator: TrackSimulator):
        self.mlp = mlp
        self.simulator = simulator
        self._cache: Dict[State, int] = {}

    def __call__(self, state: State):
        index = self._cache.get(state)
        if index is None:
            index = greedy_index(mlp_forward(self.mlp, self.simulator.encode(state)))
            self._cache[state] = index
        return ACTIONS[index]


class DaggerTrainer:
    """Agrégation de données: déroulés de la politique courante étiquetés par l'expert"""

    def __init__(self, track_map: TrackMap, config: DaggerConfig):
        self.track_map = track_map
        self.config = config
        self.planner = get_planner(track_map)
        self.simulator = TrackSimulator(track_map)

    def collect(self, mlp: Mlp, rng: np.random.Generator) -> List[State]:
        """États visités par la politique gloutonne jusqu'à samples_per_iteration"""
        config = self.config
        policy = GreedyPolicy(mlp, self.simulator)
        visited: List[State] = []
        while len(visited) < config.samples_per_iteration:
            state = self.simulator.sample_initial_state(config.sim_config, rng)
            for _ in range(config.step_cap):
                visited.append(state)
                if len(visited) >= config.samples_per_iteration:
                    break
                outcome, _ = self.simulator.step(state, policy(state), config.noisy, rng)
                if outcome.terminal:
                    break
                state = outcome.next_state
        return visited

    def label(self, states: Sequence[State]) -> Tuple[List[LabeledSample], int]:
        samples, skipped = [], 0
        for state in states:
            if not self.planner.is_solvable(state):
                skipped += 1
                continue
            action = self.planner.best_action(state)
            samples.append(LabeledSample(state, self.simulator.encode(state), (action,)))
        return samples, skipped

    def train(
        self, pretrain_samples: Sequence[LabeledSample], rng: np.random.Generator
    ) -> CheckpointSet:
        if not pretrain_samples:
            raise ValueError("Jeu de pré-entraînement vide")
        config = self.config
        checkpoints = CheckpointSet(method="dagger")
        aggregate: List[LabeledSample] = list(pretrain_samples)

        try:
            mlp, _ = _fit_network(
                aggregate, config.pretrain_epochs, config.step_size, config.batch_size, rng
            )
            checkpoints.initial = mlp.clone()
            for iteration in range(1, config.iterations + 1):
                visited = self.collect(mlp, rng)
                labeled, skipped = self.label(visited)
                aggregate.extend(labeled)
                # fresh initialization each round
                mlp, loss = _fit_network(
                    aggregate, config.epochs_per_iteration, config.step_size, config.batch_size, rng
                )
                checkpoints.add(f"iter-{iteration:02d}", mlp.clone())
                report = DaggerIterationReport(
                    iteration=iteration,
                    collected=len(visited),
                    skipped_unsolvable=skipped,
                    aggregate_size=len(aggregate),
                    final_loss=loss,
                )
                checkpoints.history.append(report.model_dump())
                logger.info(
                    "DAGGER itération %d/%d: %d états, %d insolubles ignorés, agrégat %d",
                    iteration,
                    config.iterations,
                    len(visited),
                    skipped,
                    len(aggregate),
                )
        except NonFiniteLossError as exc:
            logger.warning("DAGGER interrompu après %d itérations: %s", len(checkpoints), exc)
            checkpoints.aborted = str(exc)
        return checkpoints


def train_dagger(
    track_map: TrackMap,
    pretrain_samples: Sequence[LabeledSample],
    config: DaggerConfig,
    rng: np.random.Generator,
) -> CheckpointSet:
    return DaggerTrainer(track_map, config).train(pretrain_samples, rng)
