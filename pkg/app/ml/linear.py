"""Classifieurs linéaires: analyse discriminante linéaire (LDA) et régression logistique
multinomiale (LR)."""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from app.core.exceptions import InsufficientClasses, SingularCovariance
from app.models.track import ACTIONS, Action

logger = logging.getLogger(__name__)

N_FEATURES = 15
N_CLASSES = len(ACTIONS)

SHRINKAGE_FACTOR = 1e-3
LR_EPOCHS = 200
LR_STEP_SIZE = 1e-2
# scores this close to the maximum (relative) count as ties
TIE_TOLERANCE = 1e-12


class LinearKind(str, Enum):
    LDA = "lda"
    LR = "lr"


@dataclass
class LinearModel:
    """
    Modèle linéaire ajusté.

    LDA: moyennes par classe (9x15), inverse de la covariance partagée (15x15), priors.
    LR: matrice de poids (9x15) et biais (9) exprimés dans l'espace des caractéristiques brutes.
    `classes` marque les classes présentes à l'apprentissage; les autres ne sont jamais prédites.
    """

    kind: LinearKind
    classes: np.ndarray
    means: Optional[np.ndarray] = None
    precision: Optional[np.ndarray] = None
    priors: Optional[np.ndarray] = None
    weights: Optional[np.ndarray] = None
    bias: Optional[np.ndarray] = None

    def scores(self, features: Sequence[float]) -> np.ndarray:
        x = np.asarray(features, dtype=np.float64)
        if self.kind is LinearKind.LDA:
            projected = self.means @ self.precision
            scores = (
                projected @ x
                - 0.5 * np.einsum("kf,kf->k", projected, self.means)
                + np.log(np.where(self.classes, self.priors, 1.0))
            )
        else:
            scores = self.weights @ x + self.bias
        return np.where(self.classes, scores, -np.inf)


class LogisticRegression(nn.Module):
    """Régression logistique multinomiale: une couche affine suivie d'un softmax"""

    def __init__(self, n_features: int = N_FEATURES, n_classes: int = N_CLASSES):
        super().__init__()
        self.layer = nn.Linear(n_features, n_classes, dtype=torch.float64)
        with torch.no_grad():
            self.layer.weight.zero_()
            self.layer.bias.zero_()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.layer(x)


def _check_inputs(features: np.ndarray, labels: np.ndarray) -> np.ndarray:
    if features.ndim != 2 or features.shape[1] != N_FEATURES:
        raise ValueError(f"Caractéristiques de forme {features.shape}, attendu (N, {N_FEATURES})")
    if labels.shape != (features.shape[0],):
        raise ValueError("Une étiquette par échantillon est attendue")
    present = np.zeros(N_CLASSES, dtype=bool)
    present[np.unique(labels)] = True
    if present.sum() < 2:
        raise InsufficientClasses(
            f"Au moins deux actions distinctes sont nécessaires, trouvé {int(present.sum())}"
        )
    return present


def _fit_lda(features: np.ndarray, labels: np.ndarray, present: np.ndarray) -> LinearModel:
    n = features.shape[0]
    means = np.zeros((N_CLASSES, N_FEATURES))
    priors = np.zeros(N_CLASSES)
    scatter = np.zeros((N_FEATURES, N_FEATURES))
    for k in np.flatnonzero(present):
        members = features[labels == k]
        means[k] = members.mean(axis=0)
        priors[k] = members.shape[0] / n
        centered = members - means[k]
        scatter += centered.T @ centered
    covariance = scatter / n

    trace = float(np.trace(covariance))
    shrinkage = SHRINKAGE_FACTOR * trace / N_FEATURES if trace > 0 else SHRINKAGE_FACTOR
    covariance = covariance + shrinkage * np.eye(N_FEATURES)
    try:
        cholesky = torch.linalg.cholesky(torch.from_numpy(covariance))
    except RuntimeError as exc:
        raise SingularCovariance("Covariance non définie positive après régularisation") from exc
    precision = torch.cholesky_inverse(cholesky).numpy()
    # symmetric by construction; remove rounding asymmetry
    precision = 0.5 * (precision + precision.T)

    return LinearModel(
        kind=LinearKind.LDA, classes=present, means=means, precision=precision, priors=priors
    )


def _fit_lr(
    features: np.ndarray,
    labels: np.ndarray,
    present: np.ndarray,
    epochs: int = LR_EPOCHS,
    step_size: float = LR_STEP_SIZE,
) -> LinearModel:
    # internal standardization, folded back into the stored weights
    mean = features.mean(axis=0)
    std = features.std(axis=0)
    std[std == 0] = 1.0
    x = torch.from_numpy((features - mean) / std)
    y = torch.from_numpy(labels.astype(np.int64))
    absent = torch.from_numpy(~present)

    model = LogisticRegression()
    for epoch in range(epochs):
        model.zero_grad(set_to_none=True)
        logits = model(x).masked_fill(absent, float("-inf"))
        loss = F.cross_entropy(logits, y)
        loss.backward()
        with torch.no_grad():
            for parameter in model.parameters():
                parameter.sub_(step_size * parameter.grad)
    logger.debug("LR: perte finale %.6f après %d époques", loss.item(), epochs)

    scaled = model.layer.weight.detach().numpy() / std
    bias = model.layer.bias.detach().numpy() - scaled @ mean
    return LinearModel(kind=LinearKind.LR, classes=present, weights=scaled, bias=bias)


def linear_fit(
    kind: LinearKind, features: Sequence[Sequence[float]], labels: Sequence[int]
) -> LinearModel:
    """
    Ajuster un classifieur linéaire sur des échantillons à étiquette unique
    (indices d'action dans l'ordre canonique).
    """
    kind = LinearKind(kind)
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    present = _check_inputs(x, y)
    model = _fit_lda(x, y, present) if kind is LinearKind.LDA else _fit_lr(x, y, present)
    logger.info(
        "Modèle %s ajusté sur %d échantillons (%d classes)", kind.value, x.shape[0], int(present.sum())
    )
    return model


def canonical_argmax(scores: np.ndarray) -> int:
    """Premier indice, dans l'ordre canonique, parmi les scores égaux au maximum"""
    best = float(np.max(scores))
    if not np.isfinite(best):
        return int(np.argmax(scores))
    tolerance = TIE_TOLERANCE * max(1.0, abs(best))
    return int(np.flatnonzero(scores >= best - tolerance)[0])


def linear_predict(model: LinearModel, features: Sequence[float]) -> Action:
    """Action de score maximal; égalités départagées par l'ordre canonique"""
    return ACTIONS[canonical_argmax(model.scores(features))]
