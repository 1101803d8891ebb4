"""Dynamique du Racetrack: trajectoires discrétisées, transitions, récompenses,
encodage en 15 caractéristiques et tirage des états initiaux."""

import logging
from functools import lru_cache
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from app.core.exceptions import NoSolvableState
from app.models.track import (
    DIRECTIONS,
    IDLE,
    Action,
    CellKind,
    Outcome,
    Position,
    State,
    StepOutcome,
    TrackMap,
    Trajectory,
)
from app.schemas.track_dto import SimConfig

logger = logging.getLogger(__name__)

NOISE_PROBABILITY = 0.1
GOAL_REWARD = 100
CRASH_REWARD = -50
MOVE_REWARD = 0
MAX_SAMPLING_ATTEMPTS = 100_000

FEATURE_NAMES = (
    ["x", "y", "vx", "vy"]
    + [f"d_{dx}_{dy}" for dx, dy in DIRECTIONS]
    + ["dg_x", "dg_y", "dg"]
)
FeatureVector = Tuple[int, ...]

REWARDS: Dict[Outcome, int] = {
    Outcome.REACHED_GOAL: GOAL_REWARD,
    Outcome.CRASHED: CRASH_REWARD,
    Outcome.MOVED: MOVE_REWARD,
}


def _sign(value: int) -> int:
    return (value > 0) - (value < 0)


def round_half_away(numerator: int, denominator: int) -> int:
    """Arrondi exact de numerator/denominator (denominator > 0), .5 loin de zéro"""
    magnitude = (2 * abs(numerator) + denominator) // (2 * denominator)
    return magnitude if numerator >= 0 else -magnitude


@lru_cache(maxsize=1 << 18)
def compute_trajectory(origin: Position, velocity: Tuple[int, int]) -> Trajectory:
    """
    Positions visitées pendant une transition, de l'ancienne à la nouvelle position.

    Axe dominant parcouru case par case; l'axe secondaire est interpolé
    linéairement puis arrondi à la case la plus proche.
    """
    x, y = origin
    vx, vy = velocity
    if vx == 0 and vy == 0:
        return ((x, y),)

    sx, sy = _sign(vx), _sign(vy)
    if vy == 0:
        return tuple((x + i * sx, y) for i in range(abs(vx) + 1))
    if vx == 0:
        return tuple((x, y + i * sy) for i in range(abs(vy) + 1))

    if abs(vx) >= abs(vy):
        n = abs(vx)
        return tuple(
            (x + i * sx, round_half_away(y * n + i * vy, n)) for i in range(n + 1)
        )
    n = abs(vy)
    return tuple((round_half_away(x * n + i * vx, n), y + i * sy) for i in range(n + 1))


def step_outcome(
    track_map: TrackMap, state: State, applied_velocity: Tuple[int, int]
) -> StepOutcome:
    """Parcourir la trajectoire dans l'ordre: le premier événement (arrivée ou mur) l'emporte"""
    trajectory = compute_trajectory((state.x, state.y), applied_velocity)
    # index 0 is the current, already valid position
    for px, py in trajectory[1:]:
        kind = track_map.cell(px, py)
        if kind is CellKind.GOAL:
            return StepOutcome(Outcome.REACHED_GOAL, None, applied_velocity, trajectory)
        if kind is CellKind.WALL:
            return StepOutcome(Outcome.CRASHED, None, applied_velocity, trajectory)

    vx, vy = applied_velocity
    next_state = State(state.x + vx, state.y + vy, vx, vy)
    return StepOutcome(Outcome.MOVED, next_state, applied_velocity, trajectory)


def apply_action(
    track_map: TrackMap,
    state: State,
    action: Action,
    noisy: bool,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[StepOutcome, int]:
    """Appliquer une accélération; sous bruit elle est ignorée avec probabilité 0.1"""
    noise_applied = False
    if noisy and rng.random() < NOISE_PROBABILITY:
        action = IDLE
        noise_applied = True

    outcome = step_outcome(track_map, state, (state.vx + action[0], state.vy + action[1]))
    if noise_applied:
        outcome = outcome._replace(noise_applied=True)
    return outcome, REWARDS[outcome.kind]


class FeatureEncoder:
    """Encodage en 15 caractéristiques; la partie dépendant de la position est précalculée"""

    def __init__(self, track_map: TrackMap):
        self.track_map = track_map
        self._table: Dict[Position, Tuple[int, ...]] = {
            position: self._position_features(position)
            for position in track_map.traversable_cells
        }

    def _wall_distance(self, x: int, y: int, dx: int, dy: int) -> int:
        k = 1
        while not self.track_map.is_blocked(x + k * dx, y + k * dy):
            k += 1
        return k - 1

    def _goal_offset(self, x: int, y: int) -> Tuple[int, int]:
        # goal_cells is in canonical order, so min() keeps the first of equal distances
        gx, gy = min(
            self.track_map.goal_cells, key=lambda g: abs(g[0] - x) + abs(g[1] - y)
        )
        return gx - x, gy - y

    def _position_features(self, position: Position) -> Tuple[int, ...]:
        x, y = position
        distances = tuple(self._wall_distance(x, y, dx, dy) for dx, dy in DIRECTIONS)
        dg_x, dg_y = self._goal_offset(x, y)
        return distances + (dg_x, dg_y, abs(dg_x) + abs(dg_y))

    def encode(self, state: State) -> FeatureVector:
        position = (state.x, state.y)
        cached = self._table.get(position)
        if cached is None:
            cached = self._position_features(position)
        return (state.x, state.y, state.vx, state.vy) + cached


@lru_cache(maxsize=32)
def get_feature_encoder(track_map: TrackMap) -> FeatureEncoder:
    return FeatureEncoder(track_map)


def encode_features(track_map: TrackMap, state: State) -> FeatureVector:
    return get_feature_encoder(track_map).encode(state)


def sample_initial_state(
    track_map: TrackMap,
    sim_config: SimConfig,
    rng: np.random.Generator,
    is_solvable: Optional[Callable[[State], bool]] = None,
    require_solvable: bool = True,
) -> State:
    """
    Tirer un état initial selon NS/RS et ZV/RV.

    Sous RV les tirages non solvables sont rejetés (sauf require_solvable=False).
    """
    cells = track_map.traversable_cells if sim_config.random_start else track_map.start_cells
    bound = sim_config.velocity_bound
    check = sim_config.random_velocity and require_solvable
    if check and is_solvable is None:
        from app.services.planner_service import get_planner

        is_solvable = get_planner(track_map).is_solvable

    for attempt in range(MAX_SAMPLING_ATTEMPTS):
        x, y = cells[int(rng.integers(len(cells)))]
        if sim_config.random_velocity:
            vx = int(rng.integers(-bound, bound + 1))
            vy = int(rng.integers(-bound, bound + 1))
        else:
            vx = vy = 0
        state = State(x, y, vx, vy)
        if not check or is_solvable(state):
            if attempt >= 1000:
                logger.warning("État solvable obtenu après %d tirages", attempt + 1)
            return state

    raise NoSolvableState(
        f"Aucun état solvable après {MAX_SAMPLING_ATTEMPTS} tirages sur {track_map.map_id}"
    )


class TrackSimulator:
    """Façade de simulation liée à une carte (utilisée dans les boucles d'épisodes)"""

    def __init__(self, track_map: TrackMap):
        self.track_map = track_map
        self.encoder = get_feature_encoder(track_map)

    def step(
        self, state: State, action: Action, noisy: bool, rng: Optional[np.random.Generator] = None
    ) -> Tuple[StepOutcome, int]:
        return apply_action(self.track_map, state, action, noisy, rng)

    def encode(self, state: State) -> FeatureVector:
        return self.encoder.encode(state)

    def sample_initial_state(
        self,
        sim_config: SimConfig,
        rng: np.random.Generator,
        require_solvable: bool = True,
    ) -> State:
        return sample_initial_state(
            self.track_map, sim_config, rng, require_solvable=require_solvable
        )
