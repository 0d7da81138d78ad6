"""Render aggregation results as delimited text or a pivoted markdown table."""
from __future__ import annotations

import csv
import io
import json

from .records import (
    PAYLOAD_BUCKET_ORDER,
    SCENARIOS,
    AggregateCell,
    Scenario,
    Sentinel,
    Technology,
    cell_to_json,
)

_SENTINEL_GLYPH = {Sentinel.UNSUPPORTED: "-", Sentinel.INSUFFICIENT: "/"}

_COLUMN_TECHS = (Technology.NBIOT, Technology.LORAWAN, Technology.SIGFOX)


def _fmt(value: float | Sentinel, digits: int = 2) -> str:
    if isinstance(value, Sentinel):
        return _SENTINEL_GLYPH[value]
    return f"{value:.{digits}f}"


def cells_to_csv(cells: list[AggregateCell]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["scenario", "technology", "bucket", "n_sent", "n_received", "pdr_pct", "eb_uwh_per_byte"]
    )
    for c in cells:
        writer.writerow(
            [
                c.scenario.key,
                c.technology.value,
                c.bucket.value,
                c.n_sent,
                c.n_received,
                _fmt(c.pdr_pct) if isinstance(c.pdr_pct, Sentinel) else f"{c.pdr_pct:.4f}",
                _fmt(c.eb_uwh_per_byte)
                if isinstance(c.eb_uwh_per_byte, Sentinel)
                else f"{c.eb_uwh_per_byte:.4f}",
            ]
        )
    return buf.getvalue()


def cells_to_json(cells: list[AggregateCell]) -> str:
    return json.dumps({"cells": [cell_to_json(c) for c in cells]}, indent=2) + "\n"


def cells_to_markdown(cells: list[AggregateCell]) -> str:
    """Pivot: one row pair (PDR, E_b) per payload bucket, one column per
    (scenario, technology); missing cells render as '/'."""
    by_key: dict[tuple[str, Technology, str], AggregateCell] = {
        (c.scenario.key, c.technology, c.bucket.value): c for c in cells
    }
    scenarios = [s for s in SCENARIOS if any(k[0] == s.key for k in by_key)]
    if not scenarios:
        scenarios = sorted(
            {c.scenario for c in cells}, key=lambda s: s.key
        )
    lines = []
    header = ["Payload (B)", "Metric"]
    for s in scenarios:
        for tech in _COLUMN_TECHS:
            header.append(f"{s.key} {tech.value}")
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + "---|" * len(header))
    for bucket in PAYLOAD_BUCKET_ORDER:
        if not any(k[2] == bucket.value for k in by_key):
            continue
        for metric, digits in (("PDR (%)", 2), ("E_b (uWh/B)", 2)):
            row = [bucket.value, metric]
            for s in scenarios:
                for tech in _COLUMN_TECHS:
                    cell = by_key.get((s.key, tech, bucket.value))
                    if cell is None:
                        row.append("/")
                    elif metric.startswith("PDR"):
                        row.append(_fmt(cell.pdr_pct))
                    else:
                        row.append(_fmt(cell.eb_uwh_per_byte))
            lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"


def render_cells(cells: list[AggregateCell], fmt: str) -> str:
    if fmt == "csv":
        return cells_to_csv(cells)
    if fmt == "json":
        return cells_to_json(cells)
    if fmt == "md":
        return cells_to_markdown(cells)
    raise ValueError(f"unknown report format {fmt!r}")
