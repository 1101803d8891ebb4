"""Rapports d'évaluation (CSV / JSON) et trace d'entraînement DQN (CSV)."""

import csv
import json
import logging
from pathlib import Path
from typing import Dict, List, Sequence, Type, Union

from pydantic import BaseModel, ValidationError

from app.core.exceptions import ReportFormatError
from app.schemas.eval_dto import QUALITY_COLUMNS, REPORT_COLUMNS, EvalReport, QualityReport
from app.schemas.training_dto import DaggerIterationReport, TrainingTraceRow

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
REPORT_FORMATS = ("csv", "json")
TRAINING_TRACE_COLUMNS = list(TrainingTraceRow.model_fields)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, fieldnames: Sequence[str], rows: Sequence[Dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({key: _cell(row.get(key)) for key in fieldnames})


def _read_csv(path: Path, model: Type[BaseModel], fieldnames: Sequence[str]) -> List[BaseModel]:
    with path.open("r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames != list(fieldnames):
            raise ReportFormatError(f"En-tête CSV inattendu dans {path}: {reader.fieldnames}")
        rows = []
        for number, row in enumerate(reader, start=2):
            cleaned = {key: (value if value != "" else None) for key, value in row.items()}
            try:
                rows.append(model.model_validate(cleaned))
            except ValidationError as exc:
                raise ReportFormatError(f"Ligne {number} invalide dans {path}") from exc
    return rows


def _report_kind(reports: Sequence[BaseModel]):
    if reports and isinstance(reports[0], QualityReport):
        return QualityReport, QUALITY_COLUMNS
    return EvalReport, REPORT_COLUMNS


def export_report(
    reports: Sequence[Union[EvalReport, QualityReport]], path: PathLike, fmt: str = "csv"
) -> Path:
    """Écrire des rapports d'évaluation ou de qualité; colonnes dans l'ordre documenté"""
    if fmt not in REPORT_FORMATS:
        raise ReportFormatError(f"Format de rapport inconnu: {fmt} (attendu: csv, json)")
    path = Path(path)
    _, columns = _report_kind(reports)
    rows = [report.model_dump(include=set(columns)) for report in reports]
    if fmt == "csv":
        _write_csv(path, columns, rows)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        ordered = [{key: row[key] for key in columns} for row in rows]
        path.write_text(json.dumps(ordered, indent=2) + "\n", encoding="utf-8")
    logger.info("Rapport écrit: %s", path)
    return path


def read_report(path: PathLike, quality: bool = False) -> List[Union[EvalReport, QualityReport]]:
    path = Path(path)
    model, columns = (QualityReport, QUALITY_COLUMNS) if quality else (EvalReport, REPORT_COLUMNS)
    if path.suffix == ".json":
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
            return [model.model_validate(row) for row in payload]
        except (json.JSONDecodeError, ValidationError, TypeError) as exc:
            raise ReportFormatError(f"Rapport JSON invalide: {path}") from exc
    return _read_csv(path, model, columns)


def write_training_trace(rows: Sequence[Dict], path: PathLike) -> Path:
    path = Path(path)
    _write_csv(path, TRAINING_TRACE_COLUMNS, rows)
    return path


def read_training_trace(path: PathLike) -> List[TrainingTraceRow]:
    return _read_csv(Path(path), TrainingTraceRow, TRAINING_TRACE_COLUMNS)


def write_dagger_history(rows: Sequence[Dict], path: PathLike) -> Path:
    path = Path(path)
    _write_csv(path, list(DaggerIterationReport.model_fields), rows)
    return path
