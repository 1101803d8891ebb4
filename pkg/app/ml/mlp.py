"""Perceptron multicouche 15 -> 64 -> 64 -> 9 (classifieur d'imitation et réseau Q)."""

import copy
import logging
from typing import List, Sequence, Tuple, Union

import numpy as np
import torch
import torch.nn as nn

from app.core.exceptions import NonFiniteInput, NonFiniteLossError
from app.models.track import ACTIONS, Action

logger = logging.getLogger(__name__)

ARCHITECTURE: Tuple[int, ...] = (15, 64, 64, 9)
DTYPE = torch.float64

ArrayLike = Union[Sequence[float], Sequence[Sequence[float]], np.ndarray, torch.Tensor]


class Mlp(nn.Module):
    """
    Couches affines, rectifieur sur les couches cachées, sortie linéaire.

    Les caractéristiques brutes sont centrées et réduites à l'entrée
    (`input_shift`, `input_scale`): ce sont des tampons fixes, hors descente de gradient.
    Par défaut la mise à l'échelle est l'identité.
    """

    def __init__(self, sizes: Sequence[int] = ARCHITECTURE):
        super().__init__()
        self.sizes = tuple(sizes)
        self.layers = nn.ModuleList(
            nn.Linear(fan_in, fan_out, dtype=DTYPE)
            for fan_in, fan_out in zip(self.sizes, self.sizes[1:])
        )
        self.register_buffer("input_shift", torch.zeros(self.sizes[0], dtype=DTYPE))
        self.register_buffer("input_scale", torch.ones(self.sizes[0], dtype=DTYPE))

    def set_input_scaling(self, shift: ArrayLike, scale: ArrayLike) -> None:
        shift_t, scale_t = as_tensor(shift), as_tensor(scale)
        if shift_t.shape != self.input_shift.shape or scale_t.shape != self.input_scale.shape:
            raise ValueError(
                f"Mise à l'échelle de forme {tuple(shift_t.shape)}, attendu ({self.sizes[0]},)"
            )
        finite = torch.isfinite(shift_t).all() and torch.isfinite(scale_t).all()
        if not (finite and (scale_t > 0).all()):
            raise ValueError("Mise à l'échelle non finie ou écart-type non positif")
        self.input_shift.copy_(shift_t)
        self.input_scale.copy_(scale_t)

    def input_scaling(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.input_shift.numpy().copy(), self.input_scale.numpy().copy()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = (x - self.input_shift) / self.input_scale
        last = len(self.layers) - 1
        for i, layer in enumerate(self.layers):
            x = layer(x)
            if i < last:
                x = torch.relu(x)
        return x

    def clone(self) -> "Mlp":
        """Copie gelée (réseau cible)"""
        twin = copy.deepcopy(self)
        twin.requires_grad_(False)
        return twin

    def parameter_arrays(self) -> List[Tuple[np.ndarray, np.ndarray]]:
        return [
            (layer.weight.detach().numpy().copy(), layer.bias.detach().numpy().copy())
            for layer in self.layers
        ]


def fit_input_scaling(features: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
    """Moyenne et écart-type par caractéristique; écart-type plancher à 1 (valeurs entières)"""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError(f"Matrice de caractéristiques attendue, forme {x.shape}")
    return x.mean(axis=0), np.maximum(x.std(axis=0), 1.0)


def mlp_init(rng: np.random.Generator, sizes: Sequence[int] = ARCHITECTURE) -> Mlp:
    """Poids uniformes dans [-1/sqrt(fan_in), 1/sqrt(fan_in)], biais nuls"""
    mlp = Mlp(sizes)
    with torch.no_grad():
        for layer in mlp.layers:
            fan_in = layer.in_features
            bound = 1.0 / np.sqrt(fan_in)
            weight = rng.uniform(-bound, bound, size=(layer.out_features, fan_in))
            layer.weight.copy_(torch.from_numpy(weight))
            layer.bias.zero_()
    return mlp


def as_tensor(values: ArrayLike) -> torch.Tensor:
    if isinstance(values, torch.Tensor):
        return values.to(DTYPE)
    return torch.as_tensor(np.asarray(values, dtype=np.float64))


def mlp_forward(mlp: Mlp, features: ArrayLike) -> np.ndarray:
    """Scores des 9 actions (ou matrice N x 9 pour un lot)"""
    x = as_tensor(features)
    if not torch.isfinite(x).all():
        raise NonFiniteInput("Entrée non finie pour le réseau")
    with torch.no_grad():
        return mlp(x).numpy()


def batch_loss(mlp: Mlp, features: torch.Tensor, targets: torch.Tensor) -> torch.Tensor:
    """Moyenne sur le lot de l'erreur quadratique sommée sur les 9 sorties"""
    predictions = mlp(features)
    return ((predictions - targets) ** 2).sum(dim=1).mean()


def loss_and_gradients(
    mlp: Mlp, features: ArrayLike, targets: ArrayLike
) -> Tuple[float, List[torch.Tensor]]:
    """Perte et gradients analytiques, sans mise à jour des paramètres"""
    mlp.zero_grad(set_to_none=True)
    loss = batch_loss(mlp, as_tensor(features), as_tensor(targets))
    loss.backward()
    gradients = [p.grad.detach().clone() for p in mlp.parameters()]
    mlp.zero_grad(set_to_none=True)
    return float(loss.item()), gradients


def mlp_train_batch(
    mlp: Mlp, features: ArrayLike, targets: ArrayLike, step_size: float
) -> float:
    """Un pas de descente de gradient simple; renvoie la perte avant mise à jour"""
    if step_size <= 0:
        raise ValueError("step_size doit être strictement positif")
    x = as_tensor(features)
    t = as_tensor(targets)
    if x.ndim != 2 or x.shape[0] == 0 or t.shape != (x.shape[0], mlp.sizes[-1]):
        raise ValueError(f"Lot invalide: entrées {tuple(x.shape)}, cibles {tuple(t.shape)}")

    mlp.zero_grad(set_to_none=True)
    loss = batch_loss(mlp, x, t)
    if not torch.isfinite(loss):
        raise NonFiniteLossError(f"Perte non finie ({loss.item()}) sur un lot de {x.shape[0]}")
    loss.backward()
    with torch.no_grad():
        for parameter in mlp.parameters():
            parameter.sub_(step_size * parameter.grad)
    mlp.zero_grad(set_to_none=True)
    return float(loss.item())


def greedy_index(scores: ArrayLike) -> int:
    # np.argmax keeps the first maximum, i.e. the canonical order
    return int(np.argmax(np.asarray(scores, dtype=np.float64)))


def greedy_action(scores: ArrayLike) -> Action:
    return ACTIONS[greedy_index(scores)]
