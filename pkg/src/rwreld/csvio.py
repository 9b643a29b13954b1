"""CSV and run-manifest emission.

Every CSV starts with a schema-version comment line ("# schema: <name>/<v>")
followed by a mandatory header row; golden tests pin the schemas.  The
manifest echoes the effective configuration, timestamps, per-file sha256
checksums and any warnings, and is written even when a run fails.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional


def write_csv(path, schema: str, columns: list[str], rows) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(f"# schema: {schema}\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow(["" if v is None else v for v in row])


def read_csv(path):
    """-> (schema, columns, rows as list of dicts of strings)."""
    path = Path(path)
    with path.open() as fh:
        first = fh.readline().strip()
        schema = None
        if first.startswith("# schema:"):
            schema = first.split(":", 1)[1].strip()
            reader = csv.reader(fh)
        else:
            reader = csv.reader([first] + fh.readlines())
        rows = list(reader)
    if not rows:
        return schema, [], []
    columns = rows[0]
    data = [dict(zip(columns, r)) for r in rows[1:]]
    return schema, columns, data


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    command: str
    config: dict
    version: str
    master_seed: Optional[int] = None
    started: float = field(default_factory=time.time)
    finished: Optional[float] = None
    files: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    status: str = "running"
    error: Optional[str] = None

    def add_file(self, path) -> None:
        self.files[Path(path).name] = sha256_file(path)

    def finish(self, status: str = "ok", error: Optional[str] = None) -> None:
        self.finished = time.time()
        self.status = status
        self.error = error

    def write(self, path) -> None:
        doc = {
            "command": self.command,
            "config": self.config,
            "version": self.version,
            "master_seed": self.master_seed,
            "started": self.started,
            "finished": self.finished,
            "wall_time": None if self.finished is None
            else self.finished - self.started,
            "files": self.files,
            "warnings": self.warnings,
            "status": self.status,
            "error": self.error,
        }
        Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
