import numpy as np
import pytest

from app.core.exceptions import UnsolvableStateError
from app.models.track import ACTIONS, IDLE, Action, Outcome, State
from app.schemas.planner_dto import ActionQuality
from app.services.planner_service import PlannerService, axis_steps, get_planner
from app.services.track_service import step_outcome
from tests.fixtures.track_fixtures import bfs_distance


def _states(track_map, bound):
    return [
        State(x, y, vx, vy)
        for x, y in track_map.traversable_cells
        for vx in range(-bound, bound + 1)
        for vy in range(-bound, bound + 1)
    ]


class TestHeuristic:
    """Tests de l'heuristique admissible"""

    def test_axis_steps(self):
        """Test du nombre de pas minimal sur un axe"""
        assert axis_steps(3, 0) == 2
        assert axis_steps(3, 3) == 1
        assert axis_steps(0, -4) == 0
        assert axis_steps(1, -1) == 2

    def test_corridor_values(self, corr7):
        """Test des valeurs de l'heuristique sur le couloir"""
        planner = PlannerService(corr7)
        assert planner.heuristic(State(2, 1, 0, 0)) == 2
        assert planner.heuristic(State(2, 1, 3, 0)) == 1

    def test_admissible(self, corr7):
        """Test de l'admissibilité de l'heuristique"""
        planner = PlannerService(corr7)
        for state in _states(corr7, 3):
            distance = planner.distance(state)
            if distance is not None:
                assert planner.heuristic(state) <= distance


class TestAstar:
    """Tests de l'expert A*"""

    def test_corridor_plan(self, corr7):
        """Test du plan sur le couloir"""
        plan = PlannerService(corr7).astar(State(1, 1, 0, 0))
        assert plan.length == 3
        assert plan.first_actions == [(1, 0), (1, 1)]
        # canonical tie-breaking prefers (0, 0) over (1, 0) at the second step
        assert plan.witness == [(1, 0), (0, 0), (1, 0)]

    def test_one_step_from_goal(self, corr7):
        """Test des premières actions à un pas de l'arrivée"""
        plan = PlannerService(corr7).astar(State(4, 1, 2, 0))
        assert plan.length == 1
        expected = [
            tuple(a)
            for a in ACTIONS
            if step_outcome(corr7, State(4, 1, 2, 0), (2 + a.ax, a.ay)).kind
            is Outcome.REACHED_GOAL
        ]
        assert plan.first_actions == expected
        assert (-1, -1) not in plan.first_actions

    def test_fast_state_still_solvable(self, corr7):
        """Test d'un état rapide encore résoluble"""
        plan = PlannerService(corr7).astar(State(4, 1, 4, 0))
        assert plan is not None
        assert plan.length == 1
        assert bfs_distance(corr7, State(4, 1, 4, 0)) == 1

    def test_unsolvable_state(self, corr7):
        """Test d'un état sans solution"""
        planner = PlannerService(corr7)
        state = State(1, 1, -7, 0)
        assert planner.astar(state) is None
        assert not planner.is_solvable(state)
        assert planner.best_action(state) == IDLE
        with pytest.raises(UnsolvableStateError):
            planner.optimal_actions(state)

    def test_witness_replays_to_goal(self, lshape20):
        """Test du rejeu du témoin jusqu'à l'arrivée"""
        planner = PlannerService(lshape20)
        state = State(1, 8, 0, 0)
        plan = planner.astar(state)
        assert len(plan.witness) == plan.length
        for i, action in enumerate(plan.witness):
            outcome = step_outcome(lshape20, state, (state.vx + action[0], state.vy + action[1]))
            if i == plan.length - 1:
                assert outcome.kind is Outcome.REACHED_GOAL
            else:
                assert outcome.kind is Outcome.MOVED
                state = outcome.next_state

    def test_matches_bfs_on_corridor(self, corr7):
        """Test de l'égalité avec le parcours en largeur sur le couloir"""
        planner = PlannerService(corr7)
        for state in _states(corr7, 3):
            assert planner.distance(state) == bfs_distance(corr7, state)

    def test_matches_bfs_on_lshape(self, lshape20):
        """Test de l'égalité avec le parcours en largeur sur la carte en L"""
        planner = PlannerService(lshape20)
        rng = np.random.default_rng(7)
        candidates = _states(lshape20, 3)
        for i in rng.choice(len(candidates), size=100, replace=False):
            state = candidates[int(i)]
            assert planner.distance(state) == bfs_distance(lshape20, state)

    @pytest.mark.parametrize("map_name", ["corr7", "lshape20", "block30"])
    def test_matches_bfs_on_every_map(self, request, map_name):
        """Test de l'égalité avec le parcours en largeur sur chaque carte fournie (échantillon réduit)"""
        track_map = request.getfixturevalue(map_name)
        planner = PlannerService(track_map)
        candidates = _states(track_map, 3)
        rng = np.random.default_rng(8)
        solvable = 0
        for i in rng.choice(len(candidates), size=30, replace=False):
            state = candidates[int(i)]
            expected = bfs_distance(track_map, state)
            assert planner.distance(state) == expected, state
            solvable += expected is not None
        assert solvable > 0

    @pytest.mark.slow
    def test_matches_bfs_on_lshape_extended(self, lshape20):
        """Test de l'égalité avec le parcours en largeur sur 500 états de la carte en L"""
        planner = PlannerService(lshape20)
        rng = np.random.default_rng(8)
        candidates = _states(lshape20, 3)
        for i in rng.choice(len(candidates), size=500, replace=False):
            state = candidates[int(i)]
            assert planner.distance(state) == bfs_distance(lshape20, state)

    def test_cache_does_not_change_answers(self, lshape20):
        """Un planificateur déjà chaud répond comme un planificateur neuf"""
        warm = PlannerService(lshape20)
        states = [State(1, 8, 0, 0), State(3, 2, 1, 0), State(10, 3, 2, -1), State(2, 6, 0, -2)]
        for state in states:
            warm.distance(state)
        assert warm.cache_size() >= len(states)
        for state in reversed(states):
            assert warm.distance(state) == PlannerService(lshape20).distance(state)

    def test_first_actions_are_exact(self, corr7):
        """Test de l'exactitude des premières actions optimales"""
        planner = PlannerService(corr7)
        state = State(1, 2, 0, 0)
        length = planner.distance(state)
        for action in ACTIONS:
            outcome = step_outcome(corr7, state, (action.ax, action.ay))
            if outcome.kind is Outcome.REACHED_GOAL:
                value = 1
            elif outcome.kind is Outcome.CRASHED:
                value = None
            else:
                rest = bfs_distance(corr7, outcome.next_state)
                value = None if rest is None else rest + 1
            assert (value == length) == (action in planner.optimal_actions(state))

    def test_shared_planner_by_content(self, corr7):
        """Test du planificateur partagé par contenu de carte"""
        assert get_planner(corr7) is get_planner(corr7)


class TestClassifyAction:
    """Tests de la partition Optimal / Secure / Fatal"""

    def test_idle_is_secure(self, corr7):
        """Test de l'action nulle classée sûre"""
        planner = PlannerService(corr7)
        assert planner.classify_action(State(1, 1, 0, 0), IDLE) is ActionQuality.SECURE

    def test_partition(self, corr7):
        """Test de la partition optimale, sûre, fatale"""
        planner = PlannerService(corr7)
        for state in [State(1, 1, 0, 0), State(2, 2, 1, 0), State(3, 3, 1, 1)]:
            if not planner.is_solvable(state):
                continue
            qualities = {a: planner.classify_action(state, a) for a in ACTIONS}
            optimal = [a for a, q in qualities.items() if q is ActionQuality.OPTIMAL]
            assert optimal == planner.optimal_actions(state)
            for action, quality in qualities.items():
                outcome = step_outcome(corr7, state, (state.vx + action.ax, state.vy + action.ay))
                fatal = outcome.kind is Outcome.CRASHED or (
                    outcome.kind is Outcome.MOVED
                    and bfs_distance(corr7, outcome.next_state) is None
                )
                assert (quality is ActionQuality.FATAL) == fatal

    def test_crash_is_fatal(self, corr7):
        """Test d'une collision classée fatale"""
        planner = PlannerService(corr7)
        assert planner.classify_action(State(1, 1, 0, 0), Action(-1, 0)) is ActionQuality.FATAL

    def test_unsolvable_raises(self, corr7):
        """Test du classement sur un état sans solution"""
        with pytest.raises(UnsolvableStateError):
            PlannerService(corr7).classify_action(State(1, 1, -7, 0), IDLE)


class TestOptimalTrace:
    """Tests de la trace optimale"""

    def test_trace_length(self, corr7):
        """Test de la longueur de la trace optimale"""
        planner = PlannerService(corr7)
        trace = planner.optimal_trace(State(1, 3, 0, 0))
        assert len(trace) == planner.distance(State(1, 3, 0, 0))
        assert trace[0][0] == State(1, 3, 0, 0)


class TestModuleFunctions:
    """Tests des fonctions de module"""

    def test_shared_planner_functions(self, corr7):
        """Test des fonctions de module sur le planificateur partagé"""
        from app.services import planner_service

        state = State(1, 2, 0, 0)
        assert planner_service.heuristic(corr7, state) == 3
        assert planner_service.is_solvable(corr7, state)
        assert planner_service.astar(corr7, state).length == 3
        assert len(planner_service.optimal_trace(corr7, state)) == 3
        assert planner_service.classify_action(corr7, state, Action(-1, 0)) is ActionQuality.FATAL
