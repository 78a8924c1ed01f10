"""Deterministic CSV and JSON emission.

Floats are written with ``repr`` (shortest round-trip form), lines end in
LF, and metadata goes into '#'-prefixed comment lines (CSV) or a "meta"
object (JSON).  Only the metadata may differ between identical runs, and
only by its timestamp, which callers can omit.
"""

from __future__ import annotations

import json
import math
from datetime import datetime, timezone


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    if hasattr(value, "item"):  # numpy scalar
        return format_value(value.item())
    return str(value)


def _json_safe(value):
    if isinstance(value, dict):
        return {str(key): _json_safe(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(item) for item in value]
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return format_value(value)
    return value


def build_meta(config: dict, version: str, extra: dict | None = None, timestamp: bool = True) -> dict:
    meta = {"version": version, "config": config}
    if extra:
        meta.update(extra)
    if timestamp:
        meta["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return meta


def render_csv(columns, rows, meta: dict | None = None) -> str:
    lines = []
    for key, value in (meta or {}).items():
        text = json.dumps(_json_safe(value), sort_keys=True) if isinstance(value, (dict, list)) else format_value(value)
        lines.append(f"# {key}: {text}")
    lines.append(",".join(columns))
    lines.extend(",".join(format_value(cell) for cell in row) for row in rows)
    return "\n".join(lines) + "\n"


def render_json(columns, rows, meta: dict | None = None) -> str:
    body = {
        "meta": _json_safe(meta or {}),
        "rows": [_json_safe(dict(zip(columns, row))) for row in rows],
    }
    return json.dumps(body, indent=2, sort_keys=True) + "\n"


def render(fmt: str, columns, rows, meta: dict | None = None) -> str:
    if fmt == "json":
        return render_json(columns, rows, meta)
    return render_csv(columns, rows, meta)


def csv_body(text: str) -> str:
    """The CSV text without its '#' metadata lines."""
    return "".join(line + "\n" for line in text.splitlines() if not line.startswith("#"))


def write_text(text: str, path: str | None, stream) -> None:
    if path is None or path == "-":
        stream.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
