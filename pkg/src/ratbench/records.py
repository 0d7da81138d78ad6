"""Shared domain vocabulary: units, enumerations, the per-packet record schema,
validation, and the canonical JSON Lines / CSV serialisations.

Unit conventions used throughout the toolkit: energy in microwatt-hours (uWh),
durations in milliseconds, power in milliwatts, speed in km/h. Conversions are
explicit, never implicit.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, fields
from enum import Enum
from typing import Iterable, Iterator

from .errors import (
    BadCeLevel,
    BadSpreadingFactor,
    NegativeEnergy,
    NegativeSpeed,
    OutOfRange,
    ParseError,
    PayloadExceedsMax,
    RxWithoutDelivery,
    TagMismatch,
    ValidationError,
)


class Technology(str, Enum):
    LORAWAN = "LoRaWAN"
    SIGFOX = "Sigfox"
    NBIOT = "NBIoT"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


#: Maximum uplink payload per technology, in bytes.
MAX_PAYLOAD_BYTES: dict[Technology, int] = {
    Technology.SIGFOX: 12,
    Technology.LORAWAN: 256,
    Technology.NBIOT: 1547,
}

#: Canonical iteration / tie-break order.
TECHNOLOGY_ORDER: tuple[Technology, ...] = (
    Technology.LORAWAN,
    Technology.SIGFOX,
    Technology.NBIOT,
)


class Placement(str, Enum):
    INDOOR = "indoor"
    OUTDOOR = "outdoor"


class Mobility(str, Enum):
    STATIC = "static"
    MOBILE = "mobile"


@dataclass(frozen=True)
class Scenario:
    """Environment of a transmission: indoor/outdoor x static/mobile.

    The indoor+mobile combination is rejected: no such evaluation cell exists.
    """

    placement: Placement
    mobility: Mobility

    def __post_init__(self) -> None:
        if self.placement is Placement.INDOOR and self.mobility is Mobility.MOBILE:
            raise ValidationError("scenario indoor+mobile is not a valid cell")

    @property
    def key(self) -> str:
        return f"{self.mobility.value}-{self.placement.value}"

    @classmethod
    def parse(cls, key: str) -> "Scenario":
        try:
            mobility, placement = key.split("-", 1)
            return cls(Placement(placement), Mobility(mobility))
        except (ValueError, KeyError) as exc:
            raise ParseError(f"bad scenario key {key!r}") from exc

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.key


STATIC_INDOOR = Scenario(Placement.INDOOR, Mobility.STATIC)
STATIC_OUTDOOR = Scenario(Placement.OUTDOOR, Mobility.STATIC)
MOBILE_OUTDOOR = Scenario(Placement.OUTDOOR, Mobility.MOBILE)

SCENARIOS: tuple[Scenario, ...] = (STATIC_INDOOR, STATIC_OUTDOOR, MOBILE_OUTDOOR)


class SpeedBucket(str, Enum):
    STATIC = "static"
    LT10 = "lt10"
    B10TO30 = "10to30"
    GT30 = "gt30"

    @property
    def label(self) -> str:
        return _SPEED_LABELS[self]


_SPEED_LABELS = {
    SpeedBucket.STATIC: "Static",
    SpeedBucket.LT10: "<10 km/h",
    SpeedBucket.B10TO30: "10-30 km/h",
    SpeedBucket.GT30: ">30 km/h",
}

SPEED_BUCKET_ORDER: tuple[SpeedBucket, ...] = (
    SpeedBucket.STATIC,
    SpeedBucket.LT10,
    SpeedBucket.B10TO30,
    SpeedBucket.GT30,
)


def speed_bucket_of(speed_kmh: float) -> SpeedBucket:
    """Bucket a speed; static iff exactly 0 km/h, boundaries go to the middle bucket."""
    if speed_kmh < 0:
        raise NegativeSpeed(f"speed {speed_kmh} km/h is negative")
    if speed_kmh == 0:
        return SpeedBucket.STATIC
    if speed_kmh < 10:
        return SpeedBucket.LT10
    if speed_kmh <= 30:
        return SpeedBucket.B10TO30
    return SpeedBucket.GT30


class PayloadBucket(str, Enum):
    B1_12 = "1-12"
    B12_51 = "12-51"
    B51_255 = "51-255"
    B255_1547 = "255-1547"

    @property
    def bounds(self) -> tuple[int, int]:
        """(lo, hi) byte bounds; lo exclusive except the first bucket, hi inclusive."""
        return _BUCKET_BOUNDS[self]


_BUCKET_BOUNDS = {
    PayloadBucket.B1_12: (1, 12),
    PayloadBucket.B12_51: (12, 51),
    PayloadBucket.B51_255: (51, 255),
    PayloadBucket.B255_1547: (255, 1547),
}

PAYLOAD_BUCKET_ORDER: tuple[PayloadBucket, ...] = (
    PayloadBucket.B1_12,
    PayloadBucket.B12_51,
    PayloadBucket.B51_255,
    PayloadBucket.B255_1547,
)

MIN_PAYLOAD_BYTES = 1
MAX_BUCKETED_PAYLOAD_BYTES = 1547


def bucket_of(payload_bytes: int) -> PayloadBucket:
    """Map a payload size to its bucket. Boundary sizes belong to the lower bucket."""
    if not isinstance(payload_bytes, int) or isinstance(payload_bytes, bool):
        raise OutOfRange(f"payload must be an integer byte count, got {payload_bytes!r}")
    if payload_bytes < MIN_PAYLOAD_BYTES or payload_bytes > MAX_BUCKETED_PAYLOAD_BYTES:
        raise OutOfRange(f"payload {payload_bytes} B outside [1, 1547]")
    if payload_bytes <= 12:
        return PayloadBucket.B1_12
    if payload_bytes <= 51:
        return PayloadBucket.B12_51
    if payload_bytes <= 255:
        return PayloadBucket.B51_255
    return PayloadBucket.B255_1547


def bucket_payload_range(bucket: PayloadBucket, technology: Technology | None = None) -> range:
    """Integer payload sizes a bucket contains, optionally clipped to a technology max."""
    lo, hi = bucket.bounds
    start = lo if bucket is PayloadBucket.B1_12 else lo + 1
    stop = hi + 1
    if technology is not None:
        stop = min(stop, MAX_PAYLOAD_BYTES[technology] + 1)
    return range(start, stop)


class Sentinel(str, Enum):
    """Non-numeric cell markers: '-' (structurally unsupported) and '/' (no data)."""

    UNSUPPORTED = "unsupported"
    INSUFFICIENT = "insufficient"


# --- per-technology link parameters carried on a record -----------------

@dataclass(frozen=True)
class LoRaWanLink:
    sf: int
    adr_enabled: bool = True

    type_tag = Technology.LORAWAN

    def validate(self) -> None:
        if not 7 <= self.sf <= 12:
            raise BadSpreadingFactor(f"sf {self.sf} outside [7, 12]")


@dataclass(frozen=True)
class SigfoxLink:
    estimated_region: str | None = None

    type_tag = Technology.SIGFOX

    def validate(self) -> None:
        pass


@dataclass(frozen=True)
class NbiotLink:
    ce_level: int
    rsrp_dbm: float | None = None
    sinr_db: float | None = None
    rsrq_db: float | None = None
    edrx_s: float | None = None
    psm_tau_s: float | None = None

    type_tag = Technology.NBIOT

    def validate(self) -> None:
        if self.ce_level not in (0, 1, 2):
            raise BadCeLevel(f"CE level {self.ce_level} outside {{0, 1, 2}}")


_PARAMS_BY_TAG = {
    Technology.LORAWAN: LoRaWanLink,
    Technology.SIGFOX: SigfoxLink,
    Technology.NBIOT: NbiotLink,
}


@dataclass(frozen=True)
class MeasurementRecord:
    """One per-packet observation as uploaded to the back-end."""

    record_id: str
    technology: Technology
    timestamp_tx: int  # UTC ms
    payload_bytes: int
    tx_power_dbm: int
    energy_uwh: float
    delivered: bool
    tech_params: LoRaWanLink | SigfoxLink | NbiotLink
    timestamp_rx: int | None = None
    rssi_dbm: float | None = None
    snr_db: float | None = None
    position: tuple[float, float] | None = None  # (lat, lon) degrees
    speed_kmh: float = 0.0
    gateway_positions: tuple[tuple[float, float], ...] = ()
    placement: Placement | None = None  # experiment label; outdoor when absent

    @property
    def scenario(self) -> Scenario:
        mobility = Mobility.STATIC if self.speed_kmh == 0 else Mobility.MOBILE
        return Scenario(self.placement or Placement.OUTDOOR, mobility)

    @property
    def payload_bucket(self) -> PayloadBucket:
        return bucket_of(self.payload_bytes)


def validate_record(record: MeasurementRecord) -> None:
    """Raise the first violated constraint; return None when the record is valid."""
    max_bytes = MAX_PAYLOAD_BYTES[record.technology]
    if record.payload_bytes < MIN_PAYLOAD_BYTES:
        raise OutOfRange(f"payload {record.payload_bytes} B below 1 B")
    if record.payload_bytes > max_bytes:
        raise PayloadExceedsMax(record.technology, record.payload_bytes, max_bytes)
    if record.energy_uwh < 0:
        raise NegativeEnergy(f"energy {record.energy_uwh} uWh is negative")
    if not record.delivered and record.timestamp_rx is not None:
        raise RxWithoutDelivery("timestamp_rx present on an undelivered packet")
    if record.speed_kmh < 0:
        raise NegativeSpeed(f"speed {record.speed_kmh} km/h is negative")
    if record.tech_params.type_tag is not record.technology:
        raise TagMismatch(
            f"tech_params tagged {record.tech_params.type_tag}, record is {record.technology}"
        )
    record.tech_params.validate()
    record.scenario  # raises on indoor+mobile


# --- JSON Lines serialisation --------------------------------------------

def _params_to_json(params: LoRaWanLink | SigfoxLink | NbiotLink) -> dict:
    out: dict = {"type": params.type_tag.value}
    for f in fields(params):
        out[f.name] = getattr(params, f.name)
    return out


def _params_from_json(obj: dict) -> LoRaWanLink | SigfoxLink | NbiotLink:
    try:
        tag = Technology(obj["type"])
    except (KeyError, ValueError) as exc:
        raise ParseError(f"bad tech_params type tag in {obj!r}") from exc
    cls = _PARAMS_BY_TAG[tag]
    kwargs = {f.name: obj.get(f.name) for f in fields(cls) if f.name in obj}
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ParseError(f"bad tech_params payload: {exc}") from exc


def record_to_json(record: MeasurementRecord) -> dict:
    return {
        "record_id": record.record_id,
        "technology": record.technology.value,
        "timestamp_tx": record.timestamp_tx,
        "timestamp_rx": record.timestamp_rx,
        "payload_bytes": record.payload_bytes,
        "tx_power_dbm": record.tx_power_dbm,
        "energy_uwh": record.energy_uwh,
        "delivered": record.delivered,
        "rssi_dbm": record.rssi_dbm,
        "snr_db": record.snr_db,
        "position": list(record.position) if record.position else None,
        "speed_kmh": record.speed_kmh,
        "gateway_positions": [list(p) for p in record.gateway_positions],
        "placement": record.placement.value if record.placement else None,
        "tech_params": _params_to_json(record.tech_params),
    }


def record_from_json(obj: dict) -> MeasurementRecord:
    try:
        position = obj.get("position")
        gateways = obj.get("gateway_positions") or []
        placement = obj.get("placement")
        return MeasurementRecord(
            record_id=str(obj["record_id"]),
            technology=Technology(obj["technology"]),
            timestamp_tx=int(obj["timestamp_tx"]),
            timestamp_rx=None if obj.get("timestamp_rx") is None else int(obj["timestamp_rx"]),
            payload_bytes=int(obj["payload_bytes"]),
            tx_power_dbm=int(obj["tx_power_dbm"]),
            energy_uwh=float(obj["energy_uwh"]),
            delivered=bool(obj["delivered"]),
            rssi_dbm=None if obj.get("rssi_dbm") is None else float(obj["rssi_dbm"]),
            snr_db=None if obj.get("snr_db") is None else float(obj["snr_db"]),
            position=None if position is None else (float(position[0]), float(position[1])),
            speed_kmh=float(obj.get("speed_kmh", 0.0)),
            gateway_positions=tuple((float(p[0]), float(p[1])) for p in gateways),
            placement=None if placement is None else Placement(placement),
            tech_params=_params_from_json(obj["tech_params"]),
        )
    except ParseError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad record object: {exc}") from exc


def record_to_line(record: MeasurementRecord) -> str:
    return json.dumps(record_to_json(record), separators=(",", ":"))


def record_from_line(line: str) -> MeasurementRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"not a JSON object: {exc}") from exc
    if not isinstance(obj, dict):
        raise ParseError("record line must hold a JSON object")
    return record_from_json(obj)


def write_jsonl(records: Iterable[MeasurementRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(record_to_line(record))
            fh.write("\n")


def read_jsonl(path) -> Iterator[MeasurementRecord]:
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield record_from_line(line)


# --- CSV export -----------------------------------------------------------

CSV_COLUMNS = [
    "record_id", "technology", "timestamp_tx", "timestamp_rx", "payload_bytes",
    "tx_power_dbm", "energy_uwh", "delivered", "rssi_dbm", "snr_db",
    "lat", "lon", "speed_kmh", "placement", "gateway_positions",
    "tp_type", "tp_sf", "tp_adr_enabled", "tp_estimated_region", "tp_ce_level",
    "tp_rsrp_dbm", "tp_sinr_db", "tp_rsrq_db", "tp_edrx_s", "tp_psm_tau_s",
]


def records_to_csv(records: Iterable[MeasurementRecord]) -> str:
    """Flatten records for spreadsheet use; nested fields become tp_*/lat/lon columns."""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for record in records:
        obj = record_to_json(record)
        params = obj.pop("tech_params")
        position = obj.pop("position")
        gateways = obj.pop("gateway_positions")
        row = {k: v for k, v in obj.items() if k in CSV_COLUMNS}
        row["lat"] = position[0] if position else ""
        row["lon"] = position[1] if position else ""
        row["gateway_positions"] = "|".join(f"{p[0]}:{p[1]}" for p in gateways)
        row["tp_type"] = params.pop("type")
        for key, value in params.items():
            row[f"tp_{key}"] = "" if value is None else value
        writer.writerow({k: ("" if v is None else v) for k, v in row.items()})
    return buf.getvalue()


# --- aggregate cells -------------------------------------------------------

@dataclass(frozen=True)
class AggregateCell:
    """One cell of a comparison table: (technology, payload bucket, scenario)."""

    technology: Technology
    bucket: PayloadBucket
    scenario: Scenario
    pdr_pct: float | Sentinel
    eb_uwh_per_byte: float | Sentinel
    n_sent: int = 0
    n_received: int = 0

    def __post_init__(self) -> None:
        if self.n_received > self.n_sent:
            raise ValidationError("n_received exceeds n_sent")
        if isinstance(self.pdr_pct, float) and not 0.0 <= self.pdr_pct <= 100.0:
            raise ValidationError(f"pdr_pct {self.pdr_pct} outside [0, 100]")
        if isinstance(self.eb_uwh_per_byte, float) and self.eb_uwh_per_byte < 0:
            raise ValidationError("eb_uwh_per_byte negative")


def cell_to_json(cell: AggregateCell) -> dict:
    def enc(v):
        return v.value if isinstance(v, Sentinel) else v

    return {
        "technology": cell.technology.value,
        "bucket": cell.bucket.value,
        "scenario": cell.scenario.key,
        "pdr_pct": enc(cell.pdr_pct),
        "eb_uwh_per_byte": enc(cell.eb_uwh_per_byte),
        "n_sent": cell.n_sent,
        "n_received": cell.n_received,
    }


def cell_from_json(obj: dict) -> AggregateCell:
    def dec(v):
        if isinstance(v, str):
            return Sentinel(v)
        return float(v)

    return AggregateCell(
        technology=Technology(obj["technology"]),
        bucket=PayloadBucket(obj["bucket"]),
        scenario=Scenario.parse(obj["scenario"]),
        pdr_pct=dec(obj["pdr_pct"]),
        eb_uwh_per_byte=dec(obj["eb_uwh_per_byte"]),
        n_sent=int(obj.get("n_sent", 0)),
        n_received=int(obj.get("n_received", 0)),
    )
