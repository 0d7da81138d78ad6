"""Delivery-probability models anchored to the shipped field-campaign tables.

Two sources ship with the package and are overridable from JSON files:

* a (technology, payload bucket, scenario) table of delivery probabilities,
* a (technology, speed bucket) curve for 1-12 B payloads.

Within a bucket both behave as constant step functions; no interpolation is
applied because the underlying data is bucketed.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import BadProbability, OutOfRange, ParseError, Unsupported
from .records import (
    PAYLOAD_BUCKET_ORDER,
    PayloadBucket,
    Scenario,
    Sentinel,
    SpeedBucket,
    Technology,
    bucket_of,
    speed_bucket_of,
)

_MOBILE_BUCKETS = (SpeedBucket.LT10, SpeedBucket.B10TO30, SpeedBucket.GT30)


def _load_data(name: str) -> dict:
    with resources.files("ratbench.data").joinpath(name).open("r", encoding="utf-8") as fh:
        return json.load(fh)


@dataclass(frozen=True)
class PdrTable:
    """Map (technology, payload bucket, scenario) -> probability or sentinel."""

    cells: dict[tuple[Technology, PayloadBucket, str], float | Sentinel]

    def lookup(
        self, tech: Technology, bucket: PayloadBucket, scenario: Scenario
    ) -> float | Sentinel:
        try:
            return self.cells[(tech, bucket, scenario.key)]
        except KeyError:
            raise OutOfRange(
                f"no table cell for ({tech}, {bucket.value}, {scenario.key})"
            ) from None

    @classmethod
    def from_cells(cls, raw_cells: list[dict]) -> "PdrTable":
        cells: dict[tuple[Technology, PayloadBucket, str], float | Sentinel] = {}
        for cell in raw_cells:
            value = cell["pdr_pct"]
            if isinstance(value, str):
                parsed: float | Sentinel = Sentinel(value)
            else:
                parsed = float(value) / 100.0
                if not 0.0 <= parsed <= 1.0:
                    raise ParseError(f"pdr_pct {value} outside [0, 100]")
            key = (
                Technology(cell["technology"]),
                PayloadBucket(cell["bucket"]),
                Scenario.parse(cell["scenario"]).key,
            )
            cells[key] = parsed
        return cls(cells)

    @classmethod
    def from_aggregate_cells(cls, cells) -> "PdrTable":
        """Build from AggregateCell objects (e.g. a loaded comparison table)."""
        mapped: dict[tuple[Technology, PayloadBucket, str], float | Sentinel] = {}
        for cell in cells:
            value = cell.pdr_pct
            if not isinstance(value, Sentinel):
                value = float(value) / 100.0
            mapped[(cell.technology, cell.bucket, cell.scenario.key)] = value
        return cls(mapped)

    @classmethod
    def from_file(cls, path) -> "PdrTable":
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        return cls.from_cells(doc["cells"])

    @classmethod
    def shipped(cls) -> "PdrTable":
        return cls.from_cells(_load_data("table1.json")["cells"])


def pdr_lookup(
    table: PdrTable, tech: Technology, payload_bytes: int, scenario: Scenario
) -> float | Sentinel:
    """Exact table value for the payload's bucket; sentinels propagate."""
    return table.lookup(tech, bucket_of(payload_bytes), scenario)


@dataclass(frozen=True)
class SpeedPdrCurve:
    """Map (technology, speed bucket) -> probability, for 1-12 B payloads."""

    points: dict[tuple[Technology, SpeedBucket], float]

    def lookup(self, tech: Technology, bucket: SpeedBucket) -> float:
        return self.points[(tech, bucket)]

    def mobile_average(self, tech: Technology) -> float:
        return sum(self.lookup(tech, b) for b in _MOBILE_BUCKETS) / len(_MOBILE_BUCKETS)

    @classmethod
    def from_mapping(cls, curve: dict) -> "SpeedPdrCurve":
        points: dict[tuple[Technology, SpeedBucket], float] = {}
        for tech_name, by_bucket in curve.items():
            for bucket_name, pct in by_bucket.items():
                points[(Technology(tech_name), SpeedBucket(bucket_name))] = float(pct) / 100.0
        return cls(points)

    @classmethod
    def from_file(cls, path) -> "SpeedPdrCurve":
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        return cls.from_mapping(doc["curve"])

    @classmethod
    def shipped(cls) -> "SpeedPdrCurve":
        return cls.from_mapping(_load_data("speed_curve.json")["curve"])


def pdr_at_speed(curve: SpeedPdrCurve, tech: Technology, speed_kmh: float) -> float:
    """Curve value for the speed's bucket (payloads of 1-12 B)."""
    return curve.lookup(tech, speed_bucket_of(speed_kmh))


@dataclass(frozen=True)
class PdrEstimate:
    """A usable probability plus where it came from when the exact cell had
    no data and a lower bucket substituted."""

    value: float
    fallback_from: PayloadBucket | None = None


def effective_pdr(
    table: PdrTable,
    curve: SpeedPdrCurve,
    tech: Technology,
    payload_bytes: int,
    scenario: Scenario,
    speed_kmh: float | None = None,
    allow_unsupported_fallback: bool = False,
) -> PdrEstimate:
    """Delivery probability combining the scenario table with the speed curve.

    Static scenarios and mobile scenarios without a stated speed use the table
    as-is (the mobile column is the campaign's own speed mix). A mobile
    scenario with a known speed uses the speed curve directly for 1-12 B and
    scales the table's mobile anchor by curve(speed)/curve(mobile average) for
    larger buckets. 'insufficient' cells fall back to the nearest lower bucket
    with data, flagged in the result; 'unsupported' raises unless
    allow_unsupported_fallback is set (fragment pricing: the size is carryable,
    only the table has no bucket for it).
    """
    bucket = bucket_of(payload_bytes)
    anchor, fallback = _table_value_with_fallback(
        table, tech, bucket, scenario, allow_unsupported_fallback
    )
    speed_aware = (
        speed_kmh is not None
        and scenario.mobility.value == "mobile"
    )
    if not speed_aware:
        return PdrEstimate(anchor, fallback)
    if bucket is PayloadBucket.B1_12:
        return PdrEstimate(pdr_at_speed(curve, tech, speed_kmh), None)
    ratio = pdr_at_speed(curve, tech, speed_kmh) / curve.mobile_average(tech)
    return PdrEstimate(min(1.0, max(0.0, anchor * ratio)), fallback)


def _table_value_with_fallback(
    table: PdrTable,
    tech: Technology,
    bucket: PayloadBucket,
    scenario: Scenario,
    allow_unsupported_fallback: bool = False,
) -> tuple[float, PayloadBucket | None]:
    value = table.lookup(tech, bucket, scenario)
    if value is Sentinel.UNSUPPORTED and not allow_unsupported_fallback:
        raise Unsupported(tech, bucket.bounds[1], f"no delivery data above {bucket.value} B")
    if isinstance(value, float):
        return value, None
    # walk down to the nearest lower bucket with data
    idx = PAYLOAD_BUCKET_ORDER.index(bucket)
    for lower in reversed(PAYLOAD_BUCKET_ORDER[:idx]):
        lower_value = table.lookup(tech, lower, scenario)
        if isinstance(lower_value, float):
            return lower_value, lower
    raise Unsupported(tech, bucket.bounds[1], "no lower bucket with delivery data")


def sample_delivery(rng: np.random.Generator, p: float) -> bool:
    """One Bernoulli draw from the caller's deterministic generator."""
    if not 0.0 <= p <= 1.0:
        raise BadProbability(f"probability {p} outside [0, 1]")
    return bool(rng.random() < p)
