"""
CSV and JSON emission.

CSV files use RFC-4180 quoting, '.' as decimal separator and 17 significant
digits for floats, and end with a ``# config_sha256=<hash>`` line. JSON
reports are written with sorted keys. Nothing time-dependent is written
here; wall time lives only in the run manifest.
"""

import csv
import hashlib
import io
import json
import math
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path
from typing import Any

import numpy as np

# Settings that do not change results and so are excluded from the hash.
_UNHASHED_KEYS = frozenset({"threads", "out", "log_level"})


def format_value(value: Any) -> str:
    """Format a scalar for CSV output."""
    if isinstance(value, bool | np.bool_):
        return "true" if value else "false"
    if isinstance(value, int | np.integer):
        return str(int(value))
    if isinstance(value, float | np.floating):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.17g}"
    if value is None:
        return ""
    return str(value)


def to_jsonable(value: Any) -> Any:
    """Convert numpy containers and scalars into plain JSON values."""
    if isinstance(value, Mapping):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, list | tuple):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, float | np.floating):
        value = float(value)
        if math.isnan(value) or math.isinf(value):
            return format_value(value)
        return value
    return value


def config_hash(config: Mapping[str, Any]) -> str:
    """SHA-256 of the canonical JSON form of a run configuration."""
    canonical = {k: v for k, v in config.items() if k not in _UNHASHED_KEYS}
    payload = json.dumps(to_jsonable(canonical), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def render_csv(
    header: Sequence[str], rows: Iterable[Sequence[Any]], digest: str
) -> str:
    """Render a table as CSV text with the trailing manifest line."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"Row has {len(row)} fields, header has {len(header)}")
        writer.writerow([format_value(v) for v in row])
    buffer.write(f"# config_sha256={digest}\n")
    return buffer.getvalue()


def write_csv(
    path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]], digest: str
) -> Path:
    """Write a CSV table and return its path."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_csv(header, rows, digest), encoding="utf-8")
    return path


def render_json(payload: Any) -> str:
    """Render a JSON report deterministically."""
    return json.dumps(to_jsonable(payload), sort_keys=True, indent=2) + "\n"


def write_json(path: Path, payload: Any) -> Path:
    """Write a JSON report and return its path."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_json(payload), encoding="utf-8")
    return path


def file_digest(path: Path) -> str:
    """SHA-256 of a file's bytes."""
    return hashlib.sha256(path.read_bytes()).hexdigest()


def exponent_label(alpha: Iterable[int]) -> str:
    """Multi-index as a CSV field, e.g. (2, 0) -> "2,0"."""
    return ",".join(str(int(a)) for a in alpha)
