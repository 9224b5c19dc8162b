"""CSV and JSON report writers."""

from __future__ import annotations

import json
import math
import os
import sys
from typing import Iterable, List, Optional, Sequence

SCHEMA_VERSION = 1


class ReportWriteError(OSError):
    pass


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".17g")
    return str(value)


def _columns(records: Sequence[dict], columns: Optional[Sequence[str]]) -> List[str]:
    if columns is not None:
        return list(columns)
    seen: dict = {}
    for r in records:
        for k in r:
            seen.setdefault(k, None)
    return list(seen)


def _quote(text: str) -> str:
    # csv.writer skips quoting a bare CR when the terminator is LF
    if any(ch in text for ch in ',"\r\n'):
        return '"' + text.replace('"', '""') + '"'
    return text


def render_csv(records: Sequence[dict], columns: Optional[Sequence[str]] = None) -> str:
    """RFC 4180 text with LF line endings."""
    cols = _columns(records, columns)
    lines = [",".join(_quote(str(c)) for c in cols)]
    for r in records:
        lines.append(",".join(_quote(_cell(r.get(c))) for c in cols))
    return "\n".join(lines) + "\n"


def render_json(records: Sequence[dict], report: str = "", meta: Optional[dict] = None) -> str:
    doc = {"schema_version": SCHEMA_VERSION, "report": report, "meta": meta or {},
           "records": list(records)}
    return json.dumps(doc, indent=2, allow_nan=True) + "\n"


def emit_report(records: Iterable[dict], fmt: str, path: Optional[str], report: str = "",
                columns: Optional[Sequence[str]] = None, meta: Optional[dict] = None) -> str:
    """Write ``records`` as CSV or JSON to ``path`` (``None`` or ``"-"`` for stdout).

    Returns the rendered text.  I/O failures raise :class:`ReportWriteError`.
    """
    records = list(records)
    if fmt == "csv":
        text = render_csv(records, columns)
    elif fmt == "json":
        text = render_json(records, report, meta)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    if path is None or path == "-":
        sys.stdout.write(text)
        return text
    try:
        parent = os.path.dirname(os.path.abspath(path))
        os.makedirs(parent, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise ReportWriteError(f"cannot write report to {path}: {exc}") from exc
    return text


def load_report(path: str) -> List[dict]:
    """Records of a JSON report written by :func:`emit_report`."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema version {doc.get('schema_version')!r}")
    return doc["records"]
