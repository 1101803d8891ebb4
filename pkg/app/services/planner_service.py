"""Expert A* sous dynamique déterministe (coût uniforme par pas)."""

import heapq
import itertools
import logging
import threading
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

from app.core.exceptions import UnsolvableStateError
from app.models.track import ACTIONS, IDLE, Action, Outcome, State, TrackMap
from app.schemas.planner_dto import ActionQuality, Plan
from app.services.track_service import step_outcome

logger = logging.getLogger(__name__)

_GOAL = "goal"


@lru_cache(maxsize=4096)
def axis_steps(distance: int, velocity: int) -> int:
    """
    Nombre minimal de pas pour couvrir `distance` >= 0 cases sur un axe, depuis une
    vitesse signée `velocity` (positive vers la cible), avec |accélération| <= 1.
    """
    if distance <= 0:
        return 0
    steps, covered, speed = 0, 0, velocity
    while covered < distance:
        steps += 1
        speed += 1
        covered += speed
    return steps


class PlannerService:
    """A* sur l'espace (x, y, vx, vy) avec mémoïsation des distances exactes au but"""

    def __init__(self, track_map: TrackMap):
        self.track_map = track_map
        # state -> exact number of steps to the goal, None if unsolvable
        self._distance: Dict[State, Optional[int]] = {}
        self._lock = threading.RLock()

    def __getstate__(self):
        # picklable for worker processes; the lock is recreated on the other side
        state = self.__dict__.copy()
        state.pop("_lock", None)
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._lock = threading.RLock()

    # Heuristique

    def heuristic(self, state: State) -> int:
        """Minimum sur les cases d'arrivée du maximum par axe des pas nécessaires (murs ignorés)"""
        best = None
        for gx, gy in self.track_map.goal_cells:
            dx, dy = gx - state.x, gy - state.y
            hx = axis_steps(abs(dx), state.vx if dx >= 0 else -state.vx)
            hy = axis_steps(abs(dy), state.vy if dy >= 0 else -state.vy)
            value = max(hx, hy)
            if best is None or value < best:
                best = value
        return best or 0

    # Successeurs déterministes

    def _successors(self, state: State):
        for action in ACTIONS:
            outcome = step_outcome(
                self.track_map, state, (state.vx + action.ax, state.vy + action.ay)
            )
            yield action, outcome

    # Recherche

    def distance(self, state: State) -> Optional[int]:
        """Longueur optimale du plan depuis `state`, None si insoluble"""
        with self._lock:
            if state not in self._distance:
                self._search(state)
            return self._distance[state]

    def _search(self, root: State) -> None:
        counter = itertools.count()
        best_g: Dict[State, int] = {root: 0}
        parent: Dict[State, Optional[State]] = {root: None}
        closed = set()
        frontier: List[Tuple[int, int, int, object, Optional[State]]] = [
            (self.heuristic(root), 0, next(counter), root, None)
        ]

        while frontier:
            f, g, _, node, via = heapq.heappop(frontier)
            if node == _GOAL:
                self._record_path(via, parent, f)
                return
            if node in closed or g > best_g.get(node, g):
                continue
            closed.add(node)

            for _, outcome in self._successors(node):
                if outcome.kind is Outcome.CRASHED:
                    continue
                if outcome.kind is Outcome.REACHED_GOAL:
                    heapq.heappush(frontier, (g + 1, 0, next(counter), _GOAL, node))
                    continue

                successor = outcome.next_state
                known = self._distance.get(successor, -1)
                if known is None:
                    continue
                if known >= 0:
                    # exact remaining cost already known: close the path through it
                    heapq.heappush(
                        frontier, (g + 1 + known, 0, next(counter), _GOAL, node)
                    )
                    continue

                g_next = g + 1
                if g_next < best_g.get(successor, g_next + 1):
                    best_g[successor] = g_next
                    parent[successor] = node
                    h = self.heuristic(successor)
                    heapq.heappush(
                        frontier, (g_next + h, g_next, next(counter), successor, node)
                    )

        # exhausted: nothing reachable from the root reaches the goal
        for node in closed:
            self._distance[node] = None

    def _record_path(self, last: State, parent: Dict[State, Optional[State]], total: int) -> None:
        """Tout suffixe d'un plan optimal est optimal: mémoriser les distances le long du chemin"""
        path = []
        node = last
        while node is not None:
            path.append(node)
            node = parent.get(node)
        path.reverse()
        # `last` may reach the goal through a memoized successor
        remaining = total - (len(path) - 1)
        for offset, node in enumerate(reversed(path)):
            self._distance.setdefault(node, remaining + offset)

    # Opérations de l'expert

    def astar(self, state: State) -> Optional[Plan]:
        """Plan optimal (longueur, premières actions optimales, témoin) ou None"""
        length = self.distance(state)
        if length is None:
            return None
        first_actions = self.optimal_actions(state)
        witness = [action for _, action in self.optimal_trace(state)]
        return Plan(
            length=length,
            first_actions=[tuple(a) for a in first_actions],
            witness=[tuple(a) for a in witness],
        )

    def is_solvable(self, state: State) -> bool:
        return self.distance(state) is not None

    def _action_value(self, state: State, action: Action) -> Optional[int]:
        """Longueur du meilleur plan commençant par `action`, None si fatal"""
        outcome = step_outcome(
            self.track_map, state, (state.vx + action.ax, state.vy + action.ay)
        )
        if outcome.kind is Outcome.REACHED_GOAL:
            return 1
        if outcome.kind is Outcome.CRASHED:
            return None
        remaining = self.distance(outcome.next_state)
        return None if remaining is None else 1 + remaining

    def optimal_actions(self, state: State) -> List[Action]:
        """Ensemble (ordre canonique) des actions qui commencent un plan de longueur minimale"""
        length = self.distance(state)
        if length is None:
            raise UnsolvableStateError(f"État insoluble: {tuple(state)}")
        return [a for a in ACTIONS if self._action_value(state, a) == length]

    def best_action(self, state: State) -> Action:
        """Première action optimale dans l'ordre canonique; (0,0) sur un état insoluble"""
        if not self.is_solvable(state):
            return IDLE
        return self.optimal_actions(state)[0]

    def classify_action(self, state: State, action: Action) -> ActionQuality:
        length = self.distance(state)
        if length is None:
            raise UnsolvableStateError(
                f"Classification demandée sur un état insoluble: {tuple(state)}"
            )
        value = self._action_value(state, Action(*action))
        if value is None:
            return ActionQuality.FATAL
        if value == length:
            return ActionQuality.OPTIMAL
        return ActionQuality.SECURE

    def optimal_trace(self, state: State) -> List[Tuple[State, Action]]:
        """Plan témoin déroulé: (état visité, action optimale) jusqu'à l'arrivée"""
        if self.distance(state) is None:
            raise UnsolvableStateError(f"État insoluble: {tuple(state)}")
        trace: List[Tuple[State, Action]] = []
        current = state
        while True:
            action = self.optimal_actions(current)[0]
            trace.append((current, action))
            outcome = step_outcome(
                self.track_map, current, (current.vx + action.ax, current.vy + action.ay)
            )
            if outcome.kind is Outcome.REACHED_GOAL:
                return trace
            current = outcome.next_state

    def cache_size(self) -> int:
        return len(self._distance)


_planners: Dict[Tuple[str, str], PlannerService] = {}
_planners_lock = threading.Lock()


def get_planner(track_map: TrackMap) -> PlannerService:
    """Planificateur partagé par carte (le cache de distances est réutilisé)"""
    with _planners_lock:
        key = (track_map.map_id, track_map.content_hash)
        planner = _planners.get(key)
        if planner is None:
            planner = PlannerService(track_map)
            _planners[key] = planner
        return planner


def heuristic(track_map: TrackMap, state: State) -> int:
    return get_planner(track_map).heuristic(state)


def astar(track_map: TrackMap, state: State) -> Optional[Plan]:
    return get_planner(track_map).astar(state)


def is_solvable(track_map: TrackMap, state: State) -> bool:
    return get_planner(track_map).is_solvable(state)


def classify_action(track_map: TrackMap, state: State, action: Action) -> ActionQuality:
    return get_planner(track_map).classify_action(state, action)


def optimal_trace(track_map: TrackMap, state: State) -> List[Tuple[State, Action]]:
    return get_planner(track_map).optimal_trace(state)
