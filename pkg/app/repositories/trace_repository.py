"""Traces d'épisodes: un fichier JSONL par épisode (en-tête puis un pas par ligne)."""

import json
import logging
from pathlib import Path
from typing import List, Union

from pydantic import ValidationError

from app.core.exceptions import DatasetFormatError
from app.schemas.eval_dto import EpisodeFile, EpisodeHeader
from app.schemas.track_dto import TraceRecord

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def write_episode(episode: EpisodeFile, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [json.dumps(episode.header.model_dump(), separators=(",", ":"))]
    lines.extend(json.dumps(step.model_dump(), separators=(",", ":")) for step in episode.steps)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_episode(path: PathLike) -> EpisodeFile:
    path = Path(path)
    if not path.is_file():
        raise DatasetFormatError(f"Trace introuvable: {path}")
    lines = [line for line in path.read_text(encoding="utf-8").split("\n") if line]
    if not lines:
        raise DatasetFormatError(f"Trace vide: {path}", line=1)
    try:
        header = EpisodeHeader.model_validate(json.loads(lines[0]))
    except (json.JSONDecodeError, ValidationError) as exc:
        raise DatasetFormatError(f"En-tête de trace invalide: {path}", line=1) from exc
    steps: List[TraceRecord] = []
    for number, line in enumerate(lines[1:], start=2):
        try:
            steps.append(TraceRecord.model_validate(json.loads(line)))
        except (json.JSONDecodeError, ValidationError) as exc:
            raise DatasetFormatError(f"Pas de trace invalide: {path}", line=number) from exc
    return EpisodeFile(header=header, steps=steps)
