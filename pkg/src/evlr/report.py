"""Report emission: one JSON shape for machines, aligned text for humans.

Machine output is a single JSON object with at least "lr", "per_marker",
"verbal", and "engine" keys; additional keys carry provenance (θ, table,
scale). Serialization is deterministic (sorted keys, fixed separators), so
identical inputs produce byte-identical reports. An infinite LR is written
as the JSON literal Infinity (parsed fine by Python's json) and flagged in
"note" as "LR > 10^9 (denominator zero)" to avoid overclaiming.
"""

from __future__ import annotations

import json
import math

from .evaluation import LRValue, SCALES, verbal_category

INFINITY_NOTE = "LR > 10^9 (denominator zero)"


def lr_report(
    lr: LRValue,
    scale: str = "evett2000",
    engine: str = "analytic",
    theta: float | None = None,
    freq_table: str | None = None,
    extra: dict | None = None,
) -> dict:
    """Assemble the canonical report dict for an LR result."""
    scale_obj = SCALES[scale]
    report = {
        "lr": lr.value,
        "verbal": verbal_category(lr, scale_obj),
        "scale": scale_obj.edition,
        "engine": engine,
        "per_marker": [
            {
                "marker": c.marker,
                "genotype": c.genotype,
                "match_probability": c.match_probability,
                "lr": c.lr,
            }
            for c in lr.components
        ],
    }
    if math.isinf(lr.value):
        report["note"] = INFINITY_NOTE
    if theta is not None:
        report["theta"] = theta
    if freq_table is not None:
        report["frequency_table"] = freq_table
    if extra:
        report.update(extra)
    return report


def render_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def _format_value(v) -> str:
    if isinstance(v, float):
        if math.isinf(v):
            return "inf"
        return f"{v:.10g}"
    return str(v)


def render_text(report: dict) -> str:
    """Human-readable rendering of any report dict."""
    lines = []
    if "lr" in report:
        lr = report["lr"]
        if isinstance(lr, float) and math.isinf(lr):
            lines.append(f"LR = {INFINITY_NOTE}")
        else:
            lines.append(f"LR = {_format_value(lr)}")
    if "verbal" in report:
        lines.append(f"verbal ({report.get('scale', '?')}): {report['verbal']}")
    for key in ("theta", "engine", "frequency_table", "note"):
        if key in report:
            lines.append(f"{key} = {_format_value(report[key])}")
    markers = report.get("per_marker") or []
    if markers:
        lines.append("per-marker:")
        for c in markers:
            mp = c.get("match_probability")
            mp_txt = f"  match_prob={_format_value(mp)}" if mp is not None else ""
            lines.append(
                f"  {c['marker']:<10} {c.get('genotype', ''):<10}"
                f"{mp_txt}  LR={_format_value(c['lr'])}"
            )
    for key in sorted(report):
        if key in (
            "lr", "verbal", "scale", "theta", "engine",
            "frequency_table", "note", "per_marker",
        ):
            continue
        lines.extend(_render_entry(key, report[key], indent=0))
    return "\n".join(lines) + "\n"


def _render_entry(key, value, indent: int) -> list[str]:
    pad = "  " * indent
    if isinstance(value, dict):
        lines = [f"{pad}{key}:"]
        for k in sorted(value):
            lines.extend(_render_entry(k, value[k], indent + 1))
        return lines
    if isinstance(value, list):
        return [f"{pad}{key} = {json.dumps(value)}"]
    return [f"{pad}{key} = {_format_value(value)}"]


__all__ = ["lr_report", "render_json", "render_text", "INFINITY_NOTE"]
