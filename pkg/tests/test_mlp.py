import numpy as np
import pytest
import torch

from app.core.exceptions import NonFiniteInput
from app.ml.mlp import (
    ARCHITECTURE,
    as_tensor,
    fit_input_scaling,
    greedy_action,
    loss_and_gradients,
    mlp_forward,
    mlp_init,
    mlp_train_batch,
)
from app.models.track import Action

EPSILON = 1e-5


def _pre_activation_signs(mlp, x):
    signs = []
    h = as_tensor(x)
    with torch.no_grad():
        for layer in mlp.layers[:-1]:
            h = layer(h)
            signs.append((h > 0).numpy().copy())
            h = torch.relu(h)
    return signs


def _same_pattern(a, b):
    return all(np.array_equal(p, q) for p, q in zip(a, b))


class TestInit:
    """Tests de l'initialisation"""

    def test_deterministic(self):
        """Test deux initialisations de même graine identiques"""
        a = mlp_init(np.random.default_rng(1))
        b = mlp_init(np.random.default_rng(1))
        for (wa, ba), (wb, bb) in zip(a.parameter_arrays(), b.parameter_arrays()):
            assert np.array_equal(wa, wb)
            assert np.array_equal(ba, bb)

    def test_different_seeds(self):
        """Test graines différentes, paramètres différents"""
        a = mlp_init(np.random.default_rng(1)).parameter_arrays()
        b = mlp_init(np.random.default_rng(2)).parameter_arrays()
        assert not np.array_equal(a[0][0], b[0][0])

    def test_shapes_and_bounds(self):
        """Test formes des couches, bornes uniformes et biais nuls"""
        arrays = mlp_init(np.random.default_rng(3)).parameter_arrays()
        for (weight, bias), fan_in, fan_out in zip(arrays, ARCHITECTURE, ARCHITECTURE[1:]):
            assert weight.shape == (fan_out, fan_in)
            assert np.all(np.abs(weight) <= 1 / np.sqrt(fan_in))
            assert np.all(bias == 0)

    def test_finite_outputs(self):
        """Test scores finis dès l'initialisation"""
        mlp = mlp_init(np.random.default_rng(4))
        scores = mlp_forward(mlp, np.random.default_rng(5).normal(size=(50, 15)) * 10)
        assert scores.shape == (50, 9)
        assert np.isfinite(scores).all()


class TestForward:
    """Tests du calcul des scores"""

    def test_zero_input_zero_bias(self):
        """Test entrée nulle et biais nuls: neuf zéros"""
        mlp = mlp_init(np.random.default_rng(6))
        assert np.array_equal(mlp_forward(mlp, np.zeros(15)), np.zeros(9))

    def test_zero_weights(self):
        """Test poids et biais nuls: neuf zéros quelle que soit l'entrée"""
        mlp = mlp_init(np.random.default_rng(7))
        with torch.no_grad():
            for parameter in mlp.parameters():
                parameter.zero_()
        x = np.random.default_rng(8).normal(size=15)
        assert np.array_equal(mlp_forward(mlp, x), np.zeros(9))

    def test_output_layer_scaling(self):
        """Test la couche de sortie est linéaire"""
        mlp = mlp_init(np.random.default_rng(9))
        x = np.random.default_rng(10).normal(size=15)
        before = mlp_forward(mlp, x)
        with torch.no_grad():
            mlp.layers[-1].weight.mul_(3.0)
        assert np.allclose(mlp_forward(mlp, x), 3.0 * before)

    def test_non_finite_input(self):
        """Test rejet d'une entrée NaN"""
        mlp = mlp_init(np.random.default_rng(11))
        x = np.zeros(15)
        x[4] = np.nan
        with pytest.raises(NonFiniteInput):
            mlp_forward(mlp, x)


class TestInputScaling:
    """Tests de la mise à l'échelle des entrées"""

    def test_identity_by_default(self):
        """Test sans mise à l'échelle le réseau voit les caractéristiques brutes"""
        shift, scale = mlp_init(np.random.default_rng(40)).input_scaling()
        assert np.array_equal(shift, np.zeros(15))
        assert np.array_equal(scale, np.ones(15))

    def test_forward_standardizes(self):
        """Test scores d'un réseau mis à l'échelle = scores du même réseau sur l'entrée réduite"""
        rng = np.random.default_rng(41)
        raw = mlp_init(rng)
        scaled = raw.clone()
        shift = rng.normal(size=15) * 5
        scale = rng.uniform(1.0, 4.0, size=15)
        scaled.set_input_scaling(shift, scale)
        x = rng.normal(size=(20, 15)) * 10
        assert np.allclose(mlp_forward(scaled, x), mlp_forward(raw, (x - shift) / scale))

    def test_fit_floors_standard_deviation(self):
        """Test écart-type plancher à 1 pour une caractéristique constante ou peu dispersée"""
        features = np.zeros((4, 15))
        features[:, 0] = [0, 10, 20, 30]
        features[:, 1] = [1, 1, 1, 2]
        shift, scale = fit_input_scaling(features)
        assert shift[0] == 15.0
        assert scale[0] == pytest.approx(np.std([0, 10, 20, 30]))
        assert scale[1] == 1.0
        assert scale[2] == 1.0

    def test_invalid_scaling(self):
        """Test écart-type nul ou forme incorrecte refusés"""
        mlp = mlp_init(np.random.default_rng(42))
        with pytest.raises(ValueError):
            mlp.set_input_scaling(np.zeros(15), np.zeros(15))
        with pytest.raises(ValueError):
            mlp.set_input_scaling(np.zeros(14), np.ones(14))

    def test_training_keeps_scaling(self):
        """Test la descente de gradient ne touche pas la mise à l'échelle"""
        rng = np.random.default_rng(43)
        mlp = mlp_init(rng)
        mlp.set_input_scaling(np.full(15, 2.0), np.full(15, 3.0))
        mlp_train_batch(mlp, rng.normal(size=(8, 15)), rng.normal(size=(8, 9)), step_size=0.1)
        shift, scale = mlp.input_scaling()
        assert np.array_equal(shift, np.full(15, 2.0))
        assert np.array_equal(scale, np.full(15, 3.0))


class TestTrainBatch:
    """Tests de la descente de gradient"""

    def test_zero_loss_leaves_parameters(self):
        """Test cible égale à la prédiction: perte nulle, paramètres inchangés"""
        mlp = mlp_init(np.random.default_rng(12))
        x = np.random.default_rng(13).normal(size=(4, 15))
        targets = mlp_forward(mlp, x)
        before = mlp.parameter_arrays()
        loss = mlp_train_batch(mlp, x, targets, step_size=0.1)
        assert loss == 0.0
        for (wa, ba), (wb, bb) in zip(before, mlp.parameter_arrays()):
            assert np.array_equal(wa, wb)
            assert np.array_equal(ba, bb)

    def test_loss_decreases_on_single_sample(self):
        """Test la perte diminue sur un échantillon répété"""
        mlp = mlp_init(np.random.default_rng(14))
        x = np.random.default_rng(15).normal(size=(1, 15))
        target = np.zeros((1, 9))
        target[0, 3] = 1.0
        first = mlp_train_batch(mlp, x, target, step_size=1e-2)
        for _ in range(99):
            last = mlp_train_batch(mlp, x, target, step_size=1e-2)
        assert last < first

    def test_invalid_arguments(self):
        """Test pas nul et formes incompatibles refusés"""
        mlp = mlp_init(np.random.default_rng(16))
        with pytest.raises(ValueError):
            mlp_train_batch(mlp, np.zeros((2, 15)), np.zeros((2, 9)), step_size=0.0)
        with pytest.raises(ValueError):
            mlp_train_batch(mlp, np.zeros((2, 15)), np.zeros((3, 9)), step_size=0.1)

    def test_gradients_match_finite_differences(self):
        """Gradient analytique contre différences centrées (ε = 1e-5)"""
        rng = np.random.default_rng(17)
        worst = 0.0
        for _ in range(20):
            mlp = mlp_init(rng)
            x = rng.normal(size=(4, 15)) * 3
            targets = rng.normal(size=(4, 9))
            _, gradients = loss_and_gradients(mlp, x, targets)
            for parameter, gradient in zip(mlp.parameters(), gradients):
                flat = parameter.data.view(-1)
                picks = rng.choice(flat.numel(), size=min(10, flat.numel()), replace=False)
                for index in picks.tolist():
                    original = flat[index].item()
                    with torch.no_grad():
                        flat[index] = original + EPSILON
                    plus_pattern = _pre_activation_signs(mlp, x)
                    plus, _ = loss_and_gradients(mlp, x, targets)
                    with torch.no_grad():
                        flat[index] = original - EPSILON
                    minus_pattern = _pre_activation_signs(mlp, x)
                    minus, _ = loss_and_gradients(mlp, x, targets)
                    with torch.no_grad():
                        flat[index] = original
                    if not _same_pattern(plus_pattern, minus_pattern):
                        continue  # crossing a ReLU kink
                    numeric = (plus - minus) / (2 * EPSILON)
                    analytic = gradient.view(-1)[index].item()
                    error = abs(analytic - numeric) / max(abs(analytic) + abs(numeric), 1e-4)
                    worst = max(worst, error)
        assert worst <= 1e-4


class TestGreedyAction:
    """Tests de l'action gloutonne"""

    def test_argmax(self):
        """Test maximum unique"""
        scores = [0, 0, 0, 0, 0, 0, 0, 1, 0]
        assert greedy_action(scores) == Action(1, 0)

    def test_ties_take_canonical_first(self):
        """Test égalités: première action de l'ordre canonique"""
        assert greedy_action([0.0] * 9) == Action(-1, -1)
        assert greedy_action([0, 2, 0, 0, 2, 0, 0, 0, 0]) == Action(-1, 0)
