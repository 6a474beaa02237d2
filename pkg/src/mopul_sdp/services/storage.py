"""Artifact storage: atomic JSON/CSV writes into one output directory plus its run manifest."""

import csv
import io
import json
import os
import tempfile
import time
from pathlib import Path
from typing import Any

from pydantic import BaseModel

from .. import __version__
from ..models.experiment import RunManifest
from ..utils.logger import get_logger

logger = get_logger("storage")

MANIFEST_NAME = "manifest.json"


class ArtifactStore:
    """Owns an output directory; every file lands via a temporary file and ``os.replace``."""

    def __init__(self, out_dir: str | Path):
        """Create the directory if needed and start the wall clock for the manifest.

        Args:
            out_dir: Directory all artifacts are written into
        """
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.artifacts: list[str] = []
        self._started = time.perf_counter()
        logger.info("Artifact store initialized", out_dir=str(self.out_dir))

    def path(self, name: str) -> Path:
        return self.out_dir / name

    def _write_text(self, name: str, text: str) -> Path:
        target = self.path(name)
        target.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            os.replace(tmp, target)
        except Exception as e:
            logger.error("Failed to write artifact", name=name, error=str(e), error_type=type(e).__name__)
            Path(tmp).unlink(missing_ok=True)
            raise
        if name != MANIFEST_NAME:
            self.artifacts.append(name)
        logger.info("Artifact saved", name=name, bytes=len(text.encode("utf-8")))
        return target

    def write_json(self, name: str, payload: BaseModel | dict[str, Any] | list[Any]) -> Path:
        if isinstance(payload, BaseModel):
            text = payload.model_dump_json(indent=2)
        else:
            text = json.dumps(payload, indent=2, sort_keys=True)
        return self._write_text(name, text + "\n")

    def write_csv(self, name: str, rows: list[dict[str, Any]], fieldnames: list[str] | None = None) -> Path:
        """One row per dict; columns default to the keys of the first row."""
        fieldnames = fieldnames or (list(rows[0].keys()) if rows else [])
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _cell(row.get(k)) for k in fieldnames})
        return self._write_text(name, buf.getvalue())

    def write_manifest(self, command: str, config: dict[str, Any], seed: int | None = None) -> Path:
        """Write ``manifest.json`` listing every artifact saved so far; call it last."""
        manifest = RunManifest(
            command=command,
            config=config,
            seed=seed,
            artifacts=self.artifacts,
            tool_version=__version__,
            wall_time_sec=time.perf_counter() - self._started,
        )
        return self._write_text(MANIFEST_NAME, manifest.model_dump_json(indent=2) + "\n")


def _cell(value: Any) -> Any:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return value
