import json

import numpy as np
import pytest

from app.core.exceptions import ArchitectureMismatch, ModelFormatError
from app.ml.linear import LinearKind, linear_fit, linear_predict
from app.ml.mlp import mlp_forward, mlp_init
from app.models.checkpoint import CheckpointSet
from app.repositories.model_repository import load_model, save_checkpoints, save_model


class TestModelFiles:
    """Tests de sérialisation des modèles"""

    def test_mlp_bit_identical(self, tmp_path):
        """Test sauvegarde puis relecture: scores identiques au bit près"""
        mlp = mlp_init(np.random.default_rng(30))
        path = save_model(mlp, tmp_path / "net.json")
        loaded = load_model(path)
        x = np.random.default_rng(31).normal(size=(100, 15)) * 5
        assert np.array_equal(mlp_forward(mlp, x), mlp_forward(loaded, x))

    def test_header_fields(self, tmp_path):
        """Test en-tête: format, type et architecture"""
        path = save_model(mlp_init(np.random.default_rng(32)), tmp_path / "net.json")
        payload = json.loads(path.read_text())
        assert payload["format"] == 1
        assert payload["kind"] == "mlp"
        assert payload["arch"] == [15, 64, 64, 9]
        assert payload["input_scaling"] == {"shift": [0.0] * 15, "scale": [1.0] * 15}

    def test_input_scaling_round_trip(self, tmp_path):
        """Test la mise à l'échelle des entrées est relue à l'identique"""
        rng = np.random.default_rng(38)
        mlp = mlp_init(rng)
        mlp.set_input_scaling(rng.normal(size=15), rng.uniform(1.0, 5.0, size=15))
        loaded = load_model(save_model(mlp, tmp_path / "net.json"))
        for expected, actual in zip(mlp.input_scaling(), loaded.input_scaling()):
            assert np.array_equal(expected, actual)
        x = rng.normal(size=(50, 15)) * 8
        assert np.array_equal(mlp_forward(mlp, x), mlp_forward(loaded, x))

    def test_missing_input_scaling_is_identity(self, tmp_path):
        """Test fichier sans mise à l'échelle: identité"""
        path = save_model(mlp_init(np.random.default_rng(39)), tmp_path / "net.json")
        payload = json.loads(path.read_text())
        del payload["input_scaling"]
        path.write_text(json.dumps(payload))
        shift, scale = load_model(path).input_scaling()
        assert np.array_equal(shift, np.zeros(15))
        assert np.array_equal(scale, np.ones(15))

    def test_invalid_input_scaling(self, tmp_path):
        """Test écart-type nul dans le fichier refusé"""
        path = save_model(mlp_init(np.random.default_rng(44)), tmp_path / "net.json")
        payload = json.loads(path.read_text())
        payload["input_scaling"]["scale"] = [0.0] * 15
        path.write_text(json.dumps(payload))
        with pytest.raises(ModelFormatError):
            load_model(path)

    @pytest.mark.parametrize("kind", [LinearKind.LDA, LinearKind.LR])
    def test_linear_round_trip(self, tmp_path, kind):
        """Test aller-retour des classifieurs linéaires"""
        rng = np.random.default_rng(33)
        features = rng.normal(size=(60, 15))
        labels = rng.integers(0, 3, size=60) * 4
        model = linear_fit(kind, features, labels)
        loaded = load_model(save_model(model, tmp_path / f"{kind.value}.json"))
        assert loaded.kind is kind
        assert np.array_equal(loaded.classes, model.classes)
        for x in rng.normal(size=(50, 15)):
            assert np.array_equal(loaded.scores(x), model.scores(x))
            assert linear_predict(loaded, x) == linear_predict(model, x)

    def test_corrupted_file(self, tmp_path):
        """Test fichier tronqué refusé"""
        path = save_model(mlp_init(np.random.default_rng(34)), tmp_path / "net.json")
        text = path.read_text()
        path.write_text(text[: len(text) // 2])
        with pytest.raises(ModelFormatError):
            load_model(path)

    def test_missing_file(self, tmp_path):
        """Test fichier absent"""
        with pytest.raises(ModelFormatError):
            load_model(tmp_path / "absent.json")

    def test_wrong_architecture(self, tmp_path):
        """Test architecture d'en-tête incompatible"""
        path = save_model(mlp_init(np.random.default_rng(35)), tmp_path / "net.json")
        payload = json.loads(path.read_text())
        payload["arch"] = [15, 32, 9]
        path.write_text(json.dumps(payload))
        with pytest.raises(ArchitectureMismatch):
            load_model(path)

    def test_wrong_layer_shape(self, tmp_path):
        """Test couche de forme incorrecte"""
        path = save_model(mlp_init(np.random.default_rng(36)), tmp_path / "net.json")
        payload = json.loads(path.read_text())
        payload["params"][1]["bias"] = [0.0] * 10
        path.write_text(json.dumps(payload))
        with pytest.raises(ArchitectureMismatch):
            load_model(path)

    def test_unknown_kind(self, tmp_path):
        """Test type de modèle inconnu"""
        path = tmp_path / "odd.json"
        path.write_text(json.dumps({"format": 1, "kind": "svm", "arch": [15, 9], "params": {}}))
        with pytest.raises(ModelFormatError):
            load_model(path)

    def test_save_checkpoints(self, tmp_path):
        """Test un fichier par étiquette, étiquettes uniques"""
        checkpoints = CheckpointSet(method="pil-nn")
        rng = np.random.default_rng(37)
        checkpoints.add("epoch-01", mlp_init(rng))
        checkpoints.add("epoch-02", mlp_init(rng))
        paths = save_checkpoints(checkpoints, tmp_path / "ckpt")
        assert sorted(p.name for p in paths) == ["epoch-01.json", "epoch-02.json"]
        with pytest.raises(ValueError):
            checkpoints.add("epoch-01", mlp_init(rng))
