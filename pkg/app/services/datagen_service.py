"""Génération des jeux de données étiquetés par l'expert (presets RS/NS, RV/ZV, T, E, U)."""

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional

import numpy as np

from app.core.exceptions import NoSolvableState
from app.core.seeding import derive_rng
from app.models.dataset import LabeledSample
from app.models.track import TrackMap
from app.schemas.dataset_dto import DatasetConfig
from app.services.planner_service import PlannerService, get_planner
from app.services.track_service import (
    MAX_SAMPLING_ATTEMPTS,
    get_feature_encoder,
    sample_initial_state,
)

logger = logging.getLogger(__name__)

# Shard layout is fixed so that the output does not depend on the worker count
SHARD_SIZE = 1000


class DatasetGenerator:
    """Tire des états graines solvables et les fait étiqueter par le planificateur"""

    def __init__(self, track_map: TrackMap, planner: Optional[PlannerService] = None):
        self.track_map = track_map
        self.planner = planner or get_planner(track_map)
        self.encoder = get_feature_encoder(track_map)

    def _draw_seed(self, config: DatasetConfig, rng: np.random.Generator):
        sim_config = config.sim_config
        for _ in range(MAX_SAMPLING_ATTEMPTS):
            # RV draws are filtered by the sampler; ZV draws are filtered here
            seed = sample_initial_state(
                self.track_map, sim_config, rng, is_solvable=self.planner.is_solvable
            )
            if self.planner.is_solvable(seed):
                return seed
        raise NoSolvableState(f"Aucun état graine solvable sur {self.track_map.map_id}")

    def _sample(self, state, labels) -> LabeledSample:
        return LabeledSample(state, self.encoder.encode(state), tuple(labels))

    def generate(self, config: DatasetConfig, rng: np.random.Generator) -> List[LabeledSample]:
        samples: List[LabeledSample] = []
        rejected = 0
        while len(samples) < config.size:
            seed = self._draw_seed(config, rng)
            if config.trajectory:
                samples.extend(
                    self._sample(state, [action])
                    for state, action in self.planner.optimal_trace(seed)
                )
            elif config.exhaustive:
                samples.append(self._sample(seed, self.planner.optimal_actions(seed)))
            elif config.unique:
                optimal = self.planner.optimal_actions(seed)
                if len(optimal) == 1:
                    samples.append(self._sample(seed, optimal))
                else:
                    rejected += 1
                    if rejected >= MAX_SAMPLING_ATTEMPTS and not samples:
                        raise NoSolvableState("Aucun état à action optimale unique trouvé")
            else:
                samples.append(self._sample(seed, [self.planner.best_action(seed)]))

        if config.unique:
            logger.debug("%d graines rejetées (action optimale non unique)", rejected)
        return samples[: config.size]


def generate(
    track_map: TrackMap, config: DatasetConfig, rng: np.random.Generator
) -> List[LabeledSample]:
    return DatasetGenerator(track_map).generate(config, rng)


def _generate_shard(
    track_map: TrackMap, config: DatasetConfig, seed: int, shard: int, size: int
) -> List[LabeledSample]:
    shard_config = config.model_copy(update={"size": size})
    return DatasetGenerator(track_map).generate(shard_config, derive_rng(seed, "datagen", shard))


def generate_dataset(
    track_map: TrackMap, config: DatasetConfig, seed: int, jobs: int = 1
) -> List[LabeledSample]:
    """
    Génération découpée en lots de SHARD_SIZE échantillons, chacun avec son propre flux
    aléatoire; la concaténation suit l'indice de lot quel que soit `jobs`.
    """
    sizes = [SHARD_SIZE] * (config.size // SHARD_SIZE)
    if config.size % SHARD_SIZE:
        sizes.append(config.size % SHARD_SIZE)

    if jobs <= 1 or len(sizes) == 1:
        shards = [
            _generate_shard(track_map, config, seed, i, size) for i, size in enumerate(sizes)
        ]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(_generate_shard, track_map, config, seed, i, size)
                for i, size in enumerate(sizes)
            ]
            shards = [future.result() for future in futures]

    samples = [sample for shard in shards for sample in shard]
    logger.info(
        "Jeu %s généré sur %s: %d échantillons (%d lots)",
        config.preset,
        track_map.map_id,
        len(samples),
        len(sizes),
    )
    return samples
