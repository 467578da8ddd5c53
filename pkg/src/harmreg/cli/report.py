"""Run reports and their canonical JSON / CSV encodings.

JSON has sorted keys and floats written with 17 significant digits, so equal
reports give equal bytes and parsing the text returns the same values.
Non-finite floats are written as the strings ``"inf"``, ``"-inf"``, ``"nan"``.
The CSV has one row per numeric or boolean leaf: ``check, field, value``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass
class Check:
    name: str
    values: dict
    passed: bool
    slack: float | None = None

    def as_dict(self) -> dict:
        return {"name": self.name, "values": self.values, "passed": bool(self.passed), "slack": self.slack}


@dataclass
class Report:
    command: str
    config: dict
    provenance: dict
    checks: list = field(default_factory=list)
    complete: bool = True
    error: str | None = None
    # in-memory only: refinement traces and objects for plotting
    traces: dict = field(default_factory=dict)
    context: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.complete and bool(self.checks) and all(c.passed for c in self.checks)

    def add(self, name: str, values: dict, passed: bool, slack: float | None = None) -> Check:
        chk = Check(name, plain(values), bool(passed), slack)
        self.checks.append(chk)
        return chk

    def as_dict(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "provenance": self.provenance,
            "checks": [c.as_dict() for c in self.checks],
            "complete": self.complete,
            "passed": self.passed,
            "error": self.error,
        }


def plain(obj):
    """Convert numpy scalars/arrays and tuples to JSON-ready builtins."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if hasattr(obj, "as_dict"):
        return plain(obj.as_dict())
    return obj


def format_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    text = "%.17g" % x
    if all(ch not in text for ch in ".eE"):
        text += ".0"
    return text


def _emit(obj, out: list, indent: int, level: int):
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            out.append(("," if i else "") + pad + json.dumps(key) + ": ")
            _emit(obj[key], out, indent, level + 1)
        out.append(end + "}")
    elif isinstance(obj, list):
        if not obj:
            out.append("[]")
            return
        out.append("[")
        for i, item in enumerate(obj):
            out.append(("," if i else "") + pad)
            _emit(item, out, indent, level + 1)
        out.append(end + "]")
    elif isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        out.append(json.dumps(obj))
    elif isinstance(obj, float):
        out.append(format_float(obj))
    else:
        raise TypeError(f"cannot encode {type(obj).__name__}")


def to_json(obj, indent: int = 2) -> str:
    out: list[str] = []
    _emit(plain(obj), out, indent, 0)
    return "".join(out) + "\n"


def _leaves(obj, prefix=""):
    if isinstance(obj, dict):
        for key in sorted(obj):
            yield from _leaves(obj[key], f"{prefix}.{key}" if prefix else str(key))
    elif isinstance(obj, list):
        for i, item in enumerate(obj):
            yield from _leaves(item, f"{prefix}[{i}]")
    elif isinstance(obj, (bool, int, float)):
        yield prefix, obj


def numeric_rows(report: dict) -> list[tuple[str, str, object]]:
    """``(check, field, value)`` for every numeric or boolean leaf of the checks."""
    rows = []
    for chk in report["checks"]:
        rows.append((chk["name"], "passed", chk["passed"]))
        if chk.get("slack") is not None:
            rows.append((chk["name"], "slack", chk["slack"]))
        rows.extend((chk["name"], path, v) for path, v in _leaves(chk["values"]))
    return rows


def _csv_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format_float(v).strip('"')
    return str(v)


def to_csv(report: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["check", "field", "value"])
    for row in numeric_rows(report):
        writer.writerow([row[0], row[1], _csv_value(row[2])])
    return buf.getvalue()


def parse_csv_value(text: str):
    if text in ("true", "false"):
        return text == "true"
    if text in ("inf", "-inf", "nan"):
        return float(text)
    if all(ch not in text for ch in ".eEn"):
        return int(text)
    return float(text)


def write_report(report: Report, out_dir: str | Path, fmt: str) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = report.command.replace(" ", "-")
    data = report.as_dict()
    paths = []
    if fmt in ("json", "both"):
        path = out / f"{stem}.json"
        path.write_text(to_json(data), encoding="utf-8")
        paths.append(path)
    if fmt in ("csv", "both"):
        path = out / f"{stem}.csv"
        path.write_text(to_csv(data), encoding="utf-8")
        paths.append(path)
    return paths
