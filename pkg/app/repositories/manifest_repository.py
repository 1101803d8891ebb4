import json
import logging
from pathlib import Path
from typing import Union

from app.schemas.manifest_dto import RunManifest

logger = logging.getLogger(__name__)

MANIFEST_SUFFIX = ".manifest.json"


def manifest_path_for(output: Union[str, Path]) -> Path:
    """`rapport.csv` -> `rapport.csv.manifest.json`; un répertoire reçoit `manifest.json`"""
    output = Path(output)
    if output.is_dir():
        return output / "manifest.json"
    return output.with_name(output.name + MANIFEST_SUFFIX)


def write_manifest(manifest: RunManifest, output: Union[str, Path]) -> Path:
    path = manifest_path_for(output)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(manifest.model_dump(mode="json"), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    logger.debug("Manifeste écrit: %s", path)
    return path


def read_manifest(path: Union[str, Path]) -> RunManifest:
    return RunManifest.model_validate_json(Path(path).read_text(encoding="utf-8"))
