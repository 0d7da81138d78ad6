"""Append-only measurement store with comparison-table aggregation.

Persistence is one JSON Lines file per dataset; the store rebuilds its
in-memory indexes on load and has no hidden state, so every query result is
derivable from the file alone. Appends are idempotent on record_id.
"""
from __future__ import annotations

import os
import threading
from dataclasses import dataclass, field

from .errors import UnknownField, ValidationError
from .records import (
    PAYLOAD_BUCKET_ORDER,
    SPEED_BUCKET_ORDER,
    AggregateCell,
    MeasurementRecord,
    PayloadBucket,
    Scenario,
    Sentinel,
    SpeedBucket,
    Technology,
    record_from_line,
    record_to_line,
    speed_bucket_of,
    validate_record,
)

DEFAULT_MIN_SAMPLES = 10


@dataclass(frozen=True)
class FilterExpr:
    """Conjunctive record filter; None fields do not constrain."""

    technology: Technology | None = None
    min_payload: int | None = None
    max_payload: int | None = None
    min_speed: float | None = None
    max_speed: float | None = None
    from_ms: int | None = None
    to_ms: int | None = None
    scenario: Scenario | None = None
    delivered: bool | None = None

    def __post_init__(self) -> None:
        for lo, hi, what in (
            (self.min_payload, self.max_payload, "payload"),
            (self.min_speed, self.max_speed, "speed"),
            (self.from_ms, self.to_ms, "time"),
        ):
            if lo is not None and hi is not None and lo > hi:
                raise ValidationError(f"{what} range is inverted ({lo} > {hi})")

    def matches(self, r: MeasurementRecord) -> bool:
        if self.technology is not None and r.technology is not self.technology:
            return False
        if self.min_payload is not None and r.payload_bytes < self.min_payload:
            return False
        if self.max_payload is not None and r.payload_bytes > self.max_payload:
            return False
        if self.min_speed is not None and r.speed_kmh < self.min_speed:
            return False
        if self.max_speed is not None and r.speed_kmh > self.max_speed:
            return False
        if self.from_ms is not None and r.timestamp_tx < self.from_ms:
            return False
        if self.to_ms is not None and r.timestamp_tx > self.to_ms:
            return False
        if self.scenario is not None and r.scenario != self.scenario:
            return False
        if self.delivered is not None and r.delivered != self.delivered:
            return False
        return True


class RecordStore:
    """Validated, append-only record collection keyed by record_id.

    Thread contract: appends serialise through one internal lock; reads take a
    snapshot of the record list under the same lock, so a reader never sees a
    torn record.
    """

    def __init__(self, path: str | os.PathLike | None = None):
        self._records: list[MeasurementRecord] = []
        self._by_id: dict[str, MeasurementRecord] = {}
        self._by_tech: dict[Technology, list[MeasurementRecord]] = {}
        self._lock = threading.Lock()
        self._path = os.fspath(path) if path is not None else None
        if self._path and os.path.exists(self._path):
            with open(self._path, "r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        self._append(record_from_line(line), persist=False)

    def __len__(self) -> int:
        return len(self._records)

    @property
    def path(self) -> str | None:
        return self._path

    def _append(self, record: MeasurementRecord, persist: bool) -> tuple[str, bool]:
        validate_record(record)
        with self._lock:
            existing = self._by_id.get(record.record_id)
            if existing is not None:
                return existing.record_id, False
            self._records.append(record)
            self._by_id[record.record_id] = record
            self._by_tech.setdefault(record.technology, []).append(record)
            if persist and self._path:
                with open(self._path, "a", encoding="utf-8") as fh:
                    fh.write(record_to_line(record))
                    fh.write("\n")
        return record.record_id, True

    def ingest_record(self, record: MeasurementRecord) -> tuple[str, bool]:
        """Validate and append; returns (record_id, created). The same
        record_id arriving again is a no-op returning created=False."""
        return self._append(record, persist=True)

    def ingest(self, line: str) -> str:
        """Parse one JSON Lines record, validate, append idempotently."""
        record = record_from_line(line)
        record_id, _ = self.ingest_record(record)
        return record_id

    def get(self, record_id: str) -> MeasurementRecord | None:
        with self._lock:
            return self._by_id.get(record_id)

    def records(self, flt: FilterExpr | None = None) -> list[MeasurementRecord]:
        with self._lock:
            if flt is not None and flt.technology is not None:
                snapshot = list(self._by_tech.get(flt.technology, ()))
            else:
                snapshot = list(self._records)
        if flt is None:
            return snapshot
        return [r for r in snapshot if flt.matches(r)]

    def dump(self, path: str | os.PathLike) -> None:
        with self._lock:
            snapshot = list(self._records)
        with open(path, "w", encoding="utf-8") as fh:
            for record in snapshot:
                fh.write(record_to_line(record))
                fh.write("\n")


# --- aggregation -------------------------------------------------------------

def aggregate_table(
    store: RecordStore,
    flt: FilterExpr | None = None,
    min_samples: int = DEFAULT_MIN_SAMPLES,
    delivered_only: bool = False,
) -> list[AggregateCell]:
    """PDR and energy-per-byte per (technology, payload bucket, scenario).

    E_b divides total energy by total payload bytes over all sent packets;
    with delivered_only both sums restrict to delivered packets. Cells with
    fewer than min_samples sent packets report the insufficient sentinel.
    """
    groups: dict[tuple[Technology, PayloadBucket, str], list[MeasurementRecord]] = {}
    scenarios: dict[str, Scenario] = {}
    for r in store.records(flt):
        scenario = r.scenario
        key = (r.technology, r.payload_bucket, scenario.key)
        groups.setdefault(key, []).append(r)
        scenarios[scenario.key] = scenario

    cells: list[AggregateCell] = []
    for (tech, bucket, scenario_key), rows in groups.items():
        n_sent = len(rows)
        n_received = sum(1 for r in rows if r.delivered)
        energy_rows = [r for r in rows if r.delivered] if delivered_only else rows
        total_bytes = sum(r.payload_bytes for r in energy_rows)
        total_energy = sum(r.energy_uwh for r in energy_rows)
        if n_sent < min_samples:
            pdr: float | Sentinel = Sentinel.INSUFFICIENT
            eb: float | Sentinel = Sentinel.INSUFFICIENT
        else:
            pdr = 100.0 * n_received / n_sent
            eb = total_energy / total_bytes if total_bytes else Sentinel.INSUFFICIENT
        cells.append(
            AggregateCell(
                technology=tech,
                bucket=bucket,
                scenario=scenarios[scenario_key],
                pdr_pct=pdr,
                eb_uwh_per_byte=eb,
                n_sent=n_sent,
                n_received=n_received,
            )
        )
    cells.sort(
        key=lambda c: (
            c.scenario.key,
            list(Technology).index(c.technology),
            PAYLOAD_BUCKET_ORDER.index(c.bucket),
        )
    )
    return cells


def speed_series(
    store: RecordStore,
    tech: Technology,
    flt: FilterExpr | None = None,
    min_samples: int = 1,
) -> list[tuple[SpeedBucket, float, int]]:
    """PDR per speed bucket for 1-12 B payloads, ordered static -> fastest.

    Returns (bucket, pdr_pct, n_sent) triples; buckets without enough samples
    are omitted."""
    base = FilterExpr(technology=tech, min_payload=1, max_payload=12)
    rows = [r for r in store.records(base) if flt is None or flt.matches(r)]
    grouped: dict[SpeedBucket, list[MeasurementRecord]] = {}
    for r in rows:
        grouped.setdefault(speed_bucket_of(r.speed_kmh), []).append(r)
    series = []
    for bucket in SPEED_BUCKET_ORDER:
        if bucket not in grouped:
            continue
        group = grouped[bucket]
        if len(group) < min_samples:
            continue
        pdr = 100.0 * sum(1 for r in group if r.delivered) / len(group)
        series.append((bucket, pdr, len(group)))
    return series


# --- raw series export -------------------------------------------------------

_FIELD_ACCESSORS = {
    "timestamp_tx": lambda r: r.timestamp_tx,
    "timestamp_rx": lambda r: r.timestamp_rx,
    "payload_bytes": lambda r: r.payload_bytes,
    "tx_power_dbm": lambda r: r.tx_power_dbm,
    "energy_uwh": lambda r: r.energy_uwh,
    "delivered": lambda r: int(r.delivered),
    "rssi_dbm": lambda r: r.rssi_dbm,
    "snr_db": lambda r: r.snr_db,
    "speed_kmh": lambda r: r.speed_kmh,
    "lat": lambda r: r.position[0] if r.position else None,
    "lon": lambda r: r.position[1] if r.position else None,
    "eb_uwh_per_byte": lambda r: r.energy_uwh / r.payload_bytes,
}

EXPORTABLE_FIELDS = tuple(sorted(_FIELD_ACCESSORS))


@dataclass(frozen=True)
class Series:
    x_field: str
    y_field: str
    points: tuple[tuple[float, float], ...]
    n_records: int = 0
    dropped_null: int = 0

    def as_json(self) -> dict:
        return {
            "x_field": self.x_field,
            "y_field": self.y_field,
            "points": [list(p) for p in self.points],
            "n_records": self.n_records,
            "dropped_null": self.dropped_null,
        }


def export_series(
    store: RecordStore, x_field: str, y_field: str, flt: FilterExpr | None = None
) -> Series:
    """Plot-ready (x, y) projection of the filtered records, stably sorted by x."""
    for name in (x_field, y_field):
        if name not in _FIELD_ACCESSORS:
            raise UnknownField(f"{name!r}; exportable fields: {', '.join(EXPORTABLE_FIELDS)}")
    fx = _FIELD_ACCESSORS[x_field]
    fy = _FIELD_ACCESSORS[y_field]
    rows = store.records(flt)
    points = []
    dropped = 0
    for r in rows:
        x, y = fx(r), fy(r)
        if x is None or y is None:
            dropped += 1
            continue
        points.append((float(x), float(y)))
    points.sort(key=lambda p: p[0])
    return Series(
        x_field=x_field,
        y_field=y_field,
        points=tuple(points),
        n_records=len(rows),
        dropped_null=dropped,
    )
