"""Report documents: JSON, Markdown and CSV renderings of a scenario run."""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Any

import numpy as np

REPORT_VERSION = 1
FORMATS = ("json", "md", "csv")
CSV_COLUMNS = ("id", "op", "status", "max_residual", "tolerance", "value", "wall_time")


def clean(x: Any) -> Any:
    """Make a value JSON-safe: complex as [re, im], non-finite floats as strings."""
    if isinstance(x, dict):
        return {str(k): clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return clean(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        z = complex(x)
        return [clean(z.real), clean(z.imag)]
    if isinstance(x, (float, np.floating)):
        f = float(x)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f
    return x


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, list) and len(x) == 2 and all(isinstance(v, (int, float)) for v in x):
        return f"{x[0]:.12g}{x[1]:+.12g}j"
    if isinstance(x, float):
        return f"{x:.12g}"
    return json.dumps(x, ensure_ascii=False)


def emit(report: dict, format: str = "json") -> str:
    if format == "json":
        return json.dumps(report, indent=2, ensure_ascii=False, sort_keys=False) + "\n"
    if format == "md":
        return _markdown(report)
    if format == "csv":
        return _csv(report)
    raise ValueError(f"unknown format {format!r}; choose one of {', '.join(FORMATS)}")


def _res(x) -> str:
    return x if isinstance(x, str) else f"{x:.3e}"


def _markdown(report: dict) -> str:
    s = report["summary"]
    out = [f"# Scenario `{report['scenario']}`", "",
           f"seed {report['seed']}; input `{report['inputs']['source']}` "
           f"(sha256 {report['inputs']['sha256'][:16]})", "",
           f"**{s['passed']}/{s['total']} passed**, {s['failed']} failed, {s['errors']} errors", "",
           "## Concordance", "",
           "| check | op | identity | residual | tolerance | status |",
           "|---|---|---|---|---|---|"]
    for c in report["checks"]:
        ident = c.get("identity", "").replace("|", "\\|")
        out.append(f"| {c['id']} | {c['op']} | {ident} | {_res(c['max_residual'])} | "
                   f"{c['tolerance']:.3e} | {c['status']} |")
    details = [c for c in report["checks"] if c["residuals"] or c["warnings"] or c["error"]]
    if details:
        out += ["", "## Residuals", ""]
        for c in details:
            parts = ", ".join(f"{k} {_res(v)}" for k, v in c["residuals"].items())
            out.append(f"- **{c['id']}**: {parts or 'none'}")
            for w in c["warnings"]:
                out.append(f"  - warning: {w}")
            if c["error"]:
                out.append(f"  - error: {c['error']}")
    if report["tables"]:
        out += ["", "## Tables", ""]
        out += [f"    {row}" for row in report["tables"]]
    return "\n".join(out) + "\n"


def _csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for c in report["checks"]:
        head = c.get("headline")
        value = fmt(c["values"].get(head)) if head else ""
        wall = "" if "wall_time" not in c else f"{c['wall_time']:.6f}"
        w.writerow([c["id"], c["op"], c["status"], _res(c["max_residual"]), f"{c['tolerance']:.3e}",
                    value, wall])
    return buf.getvalue()
