"""Fichiers JSONL de données étiquetées: une ligne d'en-tête puis un échantillon par ligne."""

import json
import logging
from pathlib import Path
from typing import List, Optional, Tuple, Union

from pydantic import ValidationError

from app.core.exceptions import DatasetFormatError, MapMismatchError, UnknownPreset
from app.models.dataset import LabeledSample
from app.models.track import Action, State
from app.schemas.dataset_dto import DatasetHeader, SampleRecord

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _dumps(payload: dict) -> str:
    return json.dumps(payload, separators=(",", ":"))


def _first_error(exc: ValidationError) -> str:
    error = exc.errors()[0]
    location = ".".join(str(part) for part in error["loc"])
    return f"{location}: {error['msg']}" if location else error["msg"]


def write_dataset(samples: List[LabeledSample], path: PathLike, header: DatasetHeader) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        handle.write(_dumps(header.model_dump()) + "\n")
        for sample in samples:
            state = sample.state
            record = {
                "x": state.x,
                "y": state.y,
                "vx": state.vx,
                "vy": state.vy,
                "features": list(sample.features),
                "labels": [list(label) for label in sample.labels],
            }
            handle.write(_dumps(record) + "\n")
    logger.info("Jeu de données écrit: %s (%d échantillons)", path, len(samples))
    return path


def _parse_line(line: str, number: int) -> dict:
    try:
        payload = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"JSON invalide: {exc.msg}", line=number) from exc
    if not isinstance(payload, dict):
        raise DatasetFormatError("Objet JSON attendu", line=number)
    return payload


def read_dataset(
    path: PathLike, expected_map_id: Optional[str] = None
) -> Tuple[DatasetHeader, List[LabeledSample]]:
    """
    Relire un jeu de données. Toute ligne mal formée lève DatasetFormatError avec son
    numéro (1 = en-tête); un en-tête d'une autre carte lève MapMismatchError.
    """
    path = Path(path)
    if not path.is_file():
        raise DatasetFormatError(f"Fichier de données introuvable: {path}")

    with path.open("r", encoding="utf-8") as handle:
        lines = handle.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise DatasetFormatError("Fichier vide", line=1)

    try:
        header = DatasetHeader.model_validate(_parse_line(lines[0], 1))
    except UnknownPreset:
        raise
    except ValidationError as exc:
        raise DatasetFormatError(f"En-tête invalide ({_first_error(exc)})", line=1) from exc
    if expected_map_id is not None and header.map_id != expected_map_id:
        raise MapMismatchError(
            f"Jeu de données pour la carte {header.map_id}, contexte {expected_map_id}"
        )

    samples: List[LabeledSample] = []
    for number, line in enumerate(lines[1:], start=2):
        try:
            record = SampleRecord.model_validate(_parse_line(line, number))
        except ValidationError as exc:
            raise DatasetFormatError(f"Échantillon invalide ({_first_error(exc)})", line=number) from exc
        samples.append(
            LabeledSample(
                State(record.x, record.y, record.vx, record.vy),
                tuple(record.features),
                tuple(Action(ax, ay) for ax, ay in record.labels),
            )
        )

    if len(samples) != header.size:
        raise DatasetFormatError(
            f"{len(samples)} échantillons lus, {header.size} annoncés", line=len(lines) + 1
        )
    return header, samples
