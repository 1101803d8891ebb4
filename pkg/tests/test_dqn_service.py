import math

import numpy as np
import pytest
import torch

from app.core.exceptions import BufferUnderflow
from app.ml.mlp import mlp_forward, mlp_init
from app.schemas.eval_dto import EvalConfig
from app.schemas.training_dto import DqnConfig
from app.services.agent_service import NetworkAgent
from app.services.dqn_service import (
    BestSnapshot,
    EpsilonSchedule,
    ReplayBuffer,
    Transition,
    buffer_push,
    buffer_sample,
    compute_targets,
    dqn_learn_step,
    dqn_train,
    map_input_scaling,
)
from app.services.evaluation_service import evaluate_agents
from app.services.track_service import TrackSimulator


def _transition(i, terminal=False, reward=0.0):
    features = tuple([i] + [0] * 14)
    return Transition(features, i % 9, reward, tuple([i + 1] + [0] * 14), terminal)


class TestReplayBuffer:
    """Tests de la mémoire de rejeu"""

    def test_fifo_eviction(self):
        """Test de l'éviction de la plus ancienne transition"""
        buffer = ReplayBuffer(3)
        for i in range(5):
            buffer_push(buffer, _transition(i))
        assert len(buffer) == 3
        assert [t.features[0] for t in buffer.contents()] == [2, 3, 4]

    def test_underflow(self):
        """Test du tirage sur une mémoire trop petite"""
        buffer = ReplayBuffer(10)
        with pytest.raises(BufferUnderflow):
            buffer_sample(buffer, 1, np.random.default_rng(0))
        buffer.push(_transition(0))
        with pytest.raises(BufferUnderflow):
            buffer_sample(buffer, 2, np.random.default_rng(0))

    def test_uniform_sampling(self):
        """Test de l'uniformité du tirage"""
        buffer = ReplayBuffer(10)
        for i in range(10):
            buffer.push(_transition(i))
        draws = 100_000
        rng = np.random.default_rng(50)
        drawn = [t.features[0] for _ in range(draws // 10) for t in buffer_sample(buffer, 10, rng)]
        counts = np.bincount(drawn, minlength=10)
        sigma = math.sqrt(draws * 0.1 * 0.9)
        assert np.all(np.abs(counts - draws / 10) <= 4 * sigma)

    def test_invalid_capacity(self):
        """Test d'une capacité nulle"""
        with pytest.raises(ValueError):
            ReplayBuffer(0)


class TestEpsilonSchedule:
    """Tests du calendrier d'exploration"""

    def test_closed_form_matches_iteration(self):
        """Test de la forme close contre la récurrence"""
        schedule = EpsilonSchedule(1.0, 0.999, 1e-4)
        epsilon = schedule.value(0)
        assert epsilon == 1.0
        for i in range(1, 20_001):
            epsilon = schedule.step(epsilon)
            assert epsilon == pytest.approx(schedule.value(i), rel=1e-11)

    def test_hundredth_episode(self):
        """Test de la valeur au centième épisode"""
        assert EpsilonSchedule().value(100) == pytest.approx(0.9048, abs=1e-4)

    def test_floor(self):
        """Test du plancher d'exploration"""
        schedule = EpsilonSchedule()
        assert schedule.value(10_000) == 1e-4
        assert schedule.value(100_000) == 1e-4


class TestTargets:
    """Tests des cibles de Bellman"""

    def test_terminal_targets_ignore_target_network(self):
        """Test des cibles terminales sans réseau cible"""
        target_network = mlp_init(np.random.default_rng(51))
        with torch.no_grad():
            for parameter in target_network.parameters():
                parameter.fill_(float("nan"))
        batch = [_transition(i, terminal=True, reward=100.0) for i in range(4)]
        assert compute_targets(target_network, batch, 0.99).tolist() == [100.0] * 4

    def test_mixed_batch(self):
        """Test d'un lot mêlant transitions terminales et non terminales"""
        target_network = mlp_init(np.random.default_rng(52))
        batch = [_transition(1, terminal=True, reward=-50.0), _transition(2, reward=0.0)]
        targets = compute_targets(target_network, batch, 0.9)
        expected = 0.9 * mlp_forward(target_network, batch[1].next_features).max()
        assert targets[0].item() == -50.0
        assert targets[1].item() == pytest.approx(expected)

        with torch.no_grad():
            for parameter in target_network.parameters():
                parameter.fill_(float("nan"))
        assert compute_targets(target_network, batch, 0.9)[0].item() == -50.0

    def test_learn_step_loss_uses_taken_actions(self):
        """Test de la perte restreinte aux actions jouées"""
        network = mlp_init(np.random.default_rng(53))
        target_network = network.clone()
        batch = [_transition(i, terminal=(i % 2 == 0), reward=float(i)) for i in range(6)]
        features = np.asarray([t.features for t in batch], dtype=float)
        predictions = mlp_forward(network, features)
        targets = compute_targets(target_network, batch, 0.99).numpy()
        expected = np.mean(
            [(predictions[i, t.action] - targets[i]) ** 2 for i, t in enumerate(batch)]
        )
        loss = dqn_learn_step(network, target_network, batch, 0.99, 1e-3)
        assert loss == pytest.approx(expected)


class TestDqnTrainer:
    """Tests de la boucle d'entraînement"""

    @pytest.fixture
    def config(self):
        return DqnConfig(
            mode="NS-D",
            episodes=30,
            step_cap=50,
            trailing_window=5,
            buffer_capacity=1000,
            target_sync_interval=20,
        )

    def test_best_and_final(self, corr7, config):
        """Test des points de contrôle best et final"""
        checkpoints = dqn_train(corr7, config, np.random.default_rng(54))
        assert set(checkpoints.tags) == {"best", "final"}
        assert len(checkpoints.history) == 30

        averages = [row["trailing_avg"] for row in checkpoints.history]
        assert all(a is None for a in averages[:4])
        assert all(a is not None for a in averages[4:])
        assert checkpoints.get("best").score == max(averages[4:])

    def test_trace_rows(self, corr7, config):
        """Test des lignes de trace"""
        checkpoints = dqn_train(corr7, config, np.random.default_rng(55))
        schedule = EpsilonSchedule()
        for row in checkpoints.history:
            assert row["epsilon"] == schedule.value(row["episode"])
            assert 1 <= row["steps"] <= 50
            assert row["outcome"] in ("goal", "crash", "timeout")
            if row["outcome"] == "timeout":
                assert row["steps"] == 50
                assert row["return_raw"] == 0

    def test_deterministic(self, corr7, config):
        """Test du déterminisme à graine fixée"""
        a = dqn_train(corr7, config, np.random.default_rng(56)).history
        b = dqn_train(corr7, config, np.random.default_rng(56)).history
        assert a == b

    def test_invalid_mode(self):
        """Test d'un mode d'entraînement inconnu"""
        with pytest.raises(ValueError):
            DqnConfig(mode="NS-RV")

    def test_network_is_scaled(self, corr7, config):
        """Test de la mise à l'échelle des entrées du réseau appris"""
        checkpoints = dqn_train(corr7, config, np.random.default_rng(58))
        shift, scale = checkpoints.get("final").model.input_scaling()
        expected_shift, expected_scale = map_input_scaling(TrackSimulator(corr7), 5)
        assert np.array_equal(shift, expected_shift)
        assert np.array_equal(scale, expected_scale)

    @pytest.mark.slow
    def test_corridor_win_rate(self, corr7):
        """Test du taux de victoire glouton du meilleur réseau sur le couloir (RS-N, 2e4 épisodes)"""
        checkpoints = dqn_train(corr7, DqnConfig(mode="RS-N", episodes=20_000), np.random.default_rng(57))
        agent = NetworkAgent(checkpoints.get("best").model, "dqn-best")
        report = evaluate_agents([agent], corr7, EvalConfig(preset="NS-ZV-D", runs=1000, seed=57))["dqn-best"]
        assert report.win_rate >= 0.95, report


class TestMapInputScaling:
    """Tests de la mise à l'échelle tirée de la carte"""

    def test_velocity_columns(self, corr7):
        """Test des colonnes de vitesse: centrées, écart-type de la loi uniforme"""
        shift, scale = map_input_scaling(TrackSimulator(corr7), 5)
        assert shift.shape == scale.shape == (15,)
        assert shift[2:4].tolist() == [0.0, 0.0]
        assert scale[2:4] == pytest.approx([math.sqrt(10.0)] * 2)

    def test_scale_floor(self, corr7):
        """Test du plancher à 1 de l'écart-type"""
        _, scale = map_input_scaling(TrackSimulator(corr7), 0)
        assert np.all(scale >= 1.0)
        assert scale[2:4].tolist() == [1.0, 1.0]

    def test_position_statistics(self, corr7):
        """Test des statistiques de position sur les cases praticables"""
        shift, _ = map_input_scaling(TrackSimulator(corr7), 5)
        xs = [x for x, _ in corr7.traversable_cells]
        assert shift[0] == pytest.approx(np.mean(xs))


class TestBestSnapshot:
    """Tests du choix du meilleur réseau"""

    def test_empty(self):
        """Test d'un instantané vide"""
        snapshot = BestSnapshot()
        assert snapshot.score is None
        assert snapshot.network is None

    def test_higher_average_wins(self):
        """Test du remplacement sur une meilleure moyenne non actualisée"""
        snapshot = BestSnapshot()
        first, second = mlp_init(np.random.default_rng(1)), mlp_init(np.random.default_rng(2))
        assert snapshot.offer(10.0, 9.0, first)
        assert snapshot.offer(20.0, 1.0, second)
        assert not snapshot.offer(15.0, 50.0, first)
        assert snapshot.score == 20.0
        assert snapshot.network.state_dict()["layers.0.weight"].equal(second.state_dict()["layers.0.weight"])

    def test_tie_goes_to_discounted_average(self):
        """Test de l'égalité départagée par la moyenne actualisée"""
        snapshot = BestSnapshot()
        slow, fast = mlp_init(np.random.default_rng(3)), mlp_init(np.random.default_rng(4))
        assert snapshot.offer(100.0, 40.0, slow)
        assert snapshot.offer(100.0, 80.0, fast)
        assert not snapshot.offer(100.0, 80.0, slow)
        assert snapshot.score == 100.0
        assert snapshot.network.state_dict()["layers.0.weight"].equal(fast.state_dict()["layers.0.weight"])

    def test_snapshot_is_a_copy(self):
        """Test de l'indépendance de l'instantané vis-à-vis du réseau en cours"""
        snapshot = BestSnapshot()
        network = mlp_init(np.random.default_rng(5))
        snapshot.offer(1.0, 1.0, network)
        with torch.no_grad():
            for parameter in network.parameters():
                parameter.zero_()
        assert snapshot.network.state_dict()["layers.0.weight"].abs().sum() > 0
