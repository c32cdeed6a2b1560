"""Report writers: delimited tables plus a JSON summary per scenario run.

File names embed the scenario id and the grid signature.  Headline numbers
live under the "headline" key of the summary and are written with full float
precision so that re-running an identical config reproduces them byte for
byte; wall-clock and host facts live under "metadata" and are excluded from
that contract.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

__all__ = ["SCHEMA_VERSION", "report_basename", "write_csv", "write_summary", "config_hash"]

SCHEMA_VERSION = "maglab-report/1"


def config_hash(config: dict, version: str) -> str:
    blob = json.dumps({"config": config, "version": version}, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def report_basename(scenario_id: str, grid_signature: str) -> str:
    return f"{scenario_id}__{grid_signature}"


def write_csv(path: Path, rows: list[dict], fieldnames: list[str] | None = None) -> None:
    if not rows:
        path.write_text("")
        return
    fieldnames = fieldnames or list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v)
                             for k, v in row.items()})


def write_summary(path: Path, summary: dict) -> None:
    summary = {"schema": SCHEMA_VERSION, **summary}
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
