"""Exceptions du domaine Racetrack.

Toutes héritent de `RacetrackError` afin que la CLI et l'API puissent les
traduire en codes de sortie / statuts HTTP.
"""

from typing import Optional


class RacetrackError(Exception):
    """Erreur racine du domaine"""


class ConfigurationError(RacetrackError):
    """Configuration incohérente (combinaison de drapeaux interdite, preset bruité...)"""


# Cartes


class MapParseError(RacetrackError):
    """Erreur de lecture d'une carte ASCII"""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        location = ""
        if line is not None:
            location = f" (ligne {line}" + (f", colonne {column})" if column is not None else ")")
        super().__init__(f"{message}{location}")


class RaggedLines(MapParseError):
    pass


class UnknownCharacter(MapParseError):
    pass


class NoStartCells(MapParseError):
    pass


class NoGoalCells(MapParseError):
    pass


class UnknownMap(RacetrackError):
    pass


# Planification


class NoSolvableState(RacetrackError):
    """Le tirage d'un état initial solvable a dépassé le nombre de tentatives"""


class UnsolvableStateError(RacetrackError):
    """Requête sur un état depuis lequel aucun plan n'atteint l'arrivée"""


# Données et modèles


class DatasetFormatError(RacetrackError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(message if line is None else f"{message} (ligne {line})")


class UnknownPreset(RacetrackError):
    pass


class MapMismatchError(RacetrackError):
    pass


class ModelFormatError(RacetrackError):
    pass


class ArchitectureMismatch(ModelFormatError):
    pass


class InsufficientClasses(RacetrackError):
    pass


class SingularCovariance(RacetrackError):
    pass


class NonFiniteInput(RacetrackError):
    pass


class NonFiniteLossError(RacetrackError):
    pass


class BufferUnderflow(RacetrackError):
    pass


# Rendu et rapports


class TraceMapMismatch(RacetrackError):
    pass


class ReportFormatError(RacetrackError):
    pass
