"""Sérialisation JSON des modèles (réseau et classifieurs linéaires).

Les flottants sont écrits via leur repr binary64, la relecture est donc exacte.
"""

import json
import logging
from pathlib import Path
from typing import Union

import numpy as np
import torch
from pydantic import ValidationError

from app.core.exceptions import ArchitectureMismatch, ModelFormatError
from app.ml.linear import N_CLASSES, N_FEATURES, LinearKind, LinearModel
from app.ml.mlp import ARCHITECTURE, Mlp
from app.schemas.model_dto import MODEL_FORMAT, ModelFile

logger = logging.getLogger(__name__)

AnyModel = Union[Mlp, LinearModel]
LINEAR_ARCH = [N_FEATURES, N_CLASSES]


def model_to_dict(model: AnyModel) -> dict:
    if isinstance(model, Mlp):
        params = [
            {"weight": weight.tolist(), "bias": bias.tolist()}
            for weight, bias in model.parameter_arrays()
        ]
        shift, scale = model.input_scaling()
        return {
            "format": MODEL_FORMAT,
            "kind": "mlp",
            "arch": list(model.sizes),
            "params": params,
            "input_scaling": {"shift": shift.tolist(), "scale": scale.tolist()},
        }

    if model.kind is LinearKind.LDA:
        params = {
            "classes": model.classes.tolist(),
            "means": model.means.tolist(),
            "precision": model.precision.tolist(),
            "priors": model.priors.tolist(),
        }
    else:
        params = {
            "classes": model.classes.tolist(),
            "weights": model.weights.tolist(),
            "bias": model.bias.tolist(),
        }
    return {"format": MODEL_FORMAT, "kind": model.kind.value, "arch": LINEAR_ARCH, "params": params}


def _array(values, shape, name: str) -> np.ndarray:
    try:
        array = np.asarray(values, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(f"Paramètre {name} illisible") from exc
    if array.shape != shape:
        raise ArchitectureMismatch(f"Paramètre {name} de forme {array.shape}, attendu {shape}")
    return array


def model_from_dict(payload: dict) -> AnyModel:
    try:
        envelope = ModelFile.model_validate(payload)
    except ValidationError as exc:
        raise ModelFormatError(f"Fichier de modèle invalide: {exc.errors()[0]['msg']}") from exc
    if envelope.format != MODEL_FORMAT:
        raise ModelFormatError(f"Version de format {envelope.format} non supportée")

    if envelope.kind == "mlp":
        if tuple(envelope.arch) != ARCHITECTURE:
            raise ArchitectureMismatch(
                f"Architecture {envelope.arch}, attendu {list(ARCHITECTURE)}"
            )
        if not isinstance(envelope.params, list) or len(envelope.params) != len(ARCHITECTURE) - 1:
            raise ArchitectureMismatch("Nombre de couches incompatible")
        mlp = Mlp(ARCHITECTURE)
        with torch.no_grad():
            for i, (layer, entry) in enumerate(zip(mlp.layers, envelope.params)):
                if "weight" not in entry or "bias" not in entry:
                    raise ModelFormatError(f"Couche {i}: poids ou biais manquant")
                weight = _array(entry["weight"], (layer.out_features, layer.in_features), f"weight[{i}]")
                bias = _array(entry["bias"], (layer.out_features,), f"bias[{i}]")
                layer.weight.copy_(torch.from_numpy(weight))
                layer.bias.copy_(torch.from_numpy(bias))
        if envelope.input_scaling is not None:
            scaling = envelope.input_scaling
            if "shift" not in scaling or "scale" not in scaling:
                raise ModelFormatError("input_scaling: shift ou scale manquant")
            shift = _array(scaling["shift"], (ARCHITECTURE[0],), "input_scaling.shift")
            scale = _array(scaling["scale"], (ARCHITECTURE[0],), "input_scaling.scale")
            try:
                mlp.set_input_scaling(shift, scale)
            except ValueError as exc:
                raise ModelFormatError(str(exc)) from exc
        return mlp

    if envelope.arch != LINEAR_ARCH:
        raise ArchitectureMismatch(f"Architecture {envelope.arch}, attendu {LINEAR_ARCH}")
    params = envelope.params
    if not isinstance(params, dict):
        raise ModelFormatError("Paramètres linéaires attendus sous forme d'objet")
    try:
        classes = np.asarray(params["classes"], dtype=bool)
        if classes.shape != (N_CLASSES,):
            raise ArchitectureMismatch(f"classes de forme {classes.shape}")
        if envelope.kind == "lda":
            return LinearModel(
                kind=LinearKind.LDA,
                classes=classes,
                means=_array(params["means"], (N_CLASSES, N_FEATURES), "means"),
                precision=_array(params["precision"], (N_FEATURES, N_FEATURES), "precision"),
                priors=_array(params["priors"], (N_CLASSES,), "priors"),
            )
        return LinearModel(
            kind=LinearKind.LR,
            classes=classes,
            weights=_array(params["weights"], (N_CLASSES, N_FEATURES), "weights"),
            bias=_array(params["bias"], (N_CLASSES,), "bias"),
        )
    except KeyError as exc:
        raise ModelFormatError(f"Paramètre manquant: {exc.args[0]}") from exc


def save_model(model: AnyModel, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(model_to_dict(model)), encoding="utf-8")
    logger.debug("Modèle écrit: %s", path)
    return path


def load_model(path: Union[str, Path]) -> AnyModel:
    path = Path(path)
    if not path.is_file():
        raise ModelFormatError(f"Fichier de modèle introuvable: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"JSON invalide dans {path}: {exc.msg} (ligne {exc.lineno})") from exc
    if not isinstance(payload, dict):
        raise ModelFormatError(f"Objet JSON attendu dans {path}")
    return model_from_dict(payload)


def save_checkpoints(checkpoints, out_dir: Union[str, Path]) -> list:
    """Écrire chaque checkpoint sous `<out_dir>/<tag>.json`"""
    out_dir = Path(out_dir)
    paths = [save_model(model, out_dir / f"{tag}.json") for tag, model in checkpoints.items()]
    logger.info("%d checkpoints écrits dans %s", len(paths), out_dir)
    return paths
