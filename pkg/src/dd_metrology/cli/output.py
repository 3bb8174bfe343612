"""Table and JSON rendering with fixed significant digits, plus the run manifest."""

import hashlib
import json
import logging
import math
import os
import sys

from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
import pandas as pd

from ..config import DecouplingMetrologyMetadata, EngineConfig
from ..entities import RunManifest, Scenario
from ..metrology import Unbounded
from ..utils import Constants

logger = logging.getLogger(__name__)

CSV = "csv"
JSON = "json"
MANIFEST = "manifest.json"


def _digits() -> int:
    return int(EngineConfig.get_or_create_instance().output["significant_digits"])


def format_value(value: Any) -> str:
    """Cell text: fixed significant digits, 'unbounded' for infinite values, 'n/a' for missing ones."""
    if value is None:
        return Constants.MISSING_TOKEN
    if value is Unbounded.UNBOUNDED:
        return Constants.UNBOUNDED_TOKEN
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            return Constants.UNBOUNDED_TOKEN
        text = f"{float(value):.{_digits()}g}"
        return "0" if text == "-0" else text
    return str(value)


def json_value(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): json_value(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_value(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if value is None:
        return None
    if isinstance(value, (float, np.floating)) or value is Unbounded.UNBOUNDED:
        text = format_value(value)
        return text if text == Constants.UNBOUNDED_TOKEN else float(text)
    return value


def render_table(rows: Sequence[dict], columns: Sequence[str], fmt: str = CSV) -> str:
    if fmt == JSON:
        payload = {"columns": list(columns), "rows": [[json_value(r[c]) for c in columns] for r in rows]}
        return render_json(payload)
    frame = pd.DataFrame(
        [[format_value(row[c]) for c in columns] for row in rows], columns=list(columns), dtype=str
    )
    return frame.to_csv(index=False, lineterminator="\n")


def render_json(payload: Any) -> str:
    return json.dumps(json_value(payload), indent=2, sort_keys=True) + "\n"


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def scenario_digest(scenario: Scenario) -> str:
    canonical = json.dumps(scenario.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return sha256_hex(canonical.encode("utf-8"))


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    moment = datetime.fromtimestamp(int(epoch), tz=timezone.utc) if epoch else datetime.now(timezone.utc)
    return moment.replace(microsecond=0).isoformat()


class OutputSink:
    """Writes named artifacts to ``out_dir`` (recording checksums) or to stdout."""

    def __init__(self, out_dir: Optional[Path], fmt: str = CSV):
        self.out_dir = out_dir
        self.fmt = fmt
        self.checksums: dict[str, str] = {}
        if out_dir is not None:
            out_dir.mkdir(parents=True, exist_ok=True)

    def table(self, name: str, rows: Sequence[dict], columns: Sequence[str]):
        self.write(f"{name}.{self.fmt}", render_table(rows, columns, self.fmt))

    def json(self, name: str, payload: Any):
        self.write(f"{name}.json", render_json(payload))

    def write(self, filename: str, text: str):
        data = text.encode("utf-8")
        if self.out_dir is None:
            sys.stdout.write(text)
            return
        (self.out_dir / filename).write_bytes(data)
        self.checksums[filename] = sha256_hex(data)
        logger.debug(f"[OUTPUT] Wrote {filename} ({len(data)} bytes)")

    def manifest(self, command: str, scenario: Optional[Scenario], seed: Optional[int]) -> Optional[RunManifest]:
        if self.out_dir is None:
            return None
        manifest = RunManifest(
            version=DecouplingMetrologyMetadata.version,
            command=command,
            scenario_sha256=scenario_digest(scenario) if scenario is not None else None,
            seed=seed,
            timestamp=_timestamp(),
            outputs=dict(sorted(self.checksums.items())),
        )
        text = json.dumps(manifest.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"
        (self.out_dir / MANIFEST).write_text(text, encoding="utf-8")
        logger.info(f"[OUTPUT] Manifest written to {self.out_dir / MANIFEST}")
        return manifest
