import logging
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional, Union

from app.core.config import settings
from app.core.exceptions import (
    MapParseError,
    NoGoalCells,
    NoStartCells,
    RaggedLines,
    UnknownCharacter,
    UnknownMap,
)
from app.models.track import CELL_SYMBOLS, CellKind, TrackMap

logger = logging.getLogger(__name__)

MAP_SUFFIX = ".track"


def parse_map(text: str, map_id: str = "anonymous") -> TrackMap:
    """
    Lire une carte ASCII (`#` mur, `.` libre, `s` départ, `g` arrivée).

    Une ligne par rangée, y croissant vers le bas; le saut de ligne final est optionnel.
    """
    lines = text.replace("\r\n", "\n").replace("\r", "\n").split("\n")
    while lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise MapParseError("Carte vide")

    width = len(lines[0])
    rows = []
    for y, line in enumerate(lines):
        if len(line) != width:
            raise RaggedLines(
                f"Longueur {len(line)} au lieu de {width}", line=y + 1, column=len(line) + 1
            )
        row = []
        for x, char in enumerate(line):
            kind = CELL_SYMBOLS.get(char)
            if kind is None:
                raise UnknownCharacter(f"Caractère inconnu {char!r}", line=y + 1, column=x + 1)
            row.append(kind)
        rows.append(tuple(row))

    cells = tuple(rows)
    if not any(kind is CellKind.START for row in cells for kind in row):
        raise NoStartCells("Aucune case de départ", line=len(cells))
    if not any(kind is CellKind.GOAL for row in cells for kind in row):
        raise NoGoalCells("Aucune case d'arrivée", line=len(cells))

    return TrackMap(width=width, height=len(cells), cells=cells, map_id=map_id, text=text)


class MapRepository:
    """Accès aux cartes embarquées et aux fichiers de carte"""

    def __init__(self, maps_dir: Optional[Union[str, Path]] = None):
        self.maps_dir = Path(maps_dir or settings.MAPS_DIR)
        self._cache: Dict[str, TrackMap] = {}

    def list_map_ids(self) -> List[str]:
        return sorted(p.stem for p in self.maps_dir.glob(f"*{MAP_SUFFIX}"))

    def get(self, map_ref: Union[str, Path]) -> TrackMap:
        """Charger une carte par identifiant embarqué (`corr7`) ou par chemin de fichier"""
        key = str(map_ref)
        if key in self._cache:
            return self._cache[key]

        path = Path(key)
        if not path.is_file():
            path = self.maps_dir / f"{key}{MAP_SUFFIX}"
        if not path.is_file():
            raise UnknownMap(f"Carte introuvable: {key}")

        track_map = parse_map(path.read_text(encoding="utf-8"), map_id=path.stem)
        logger.debug("Carte %s chargée (%dx%d)", track_map.map_id, track_map.width, track_map.height)
        self._cache[key] = track_map
        return track_map


@lru_cache(maxsize=1)
def get_map_repository() -> MapRepository:
    """Factory function pour le repository de cartes"""
    return MapRepository()
