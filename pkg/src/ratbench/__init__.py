"""ratbench: multi-RAT LPWAN energy/PDR models, campaign simulation, and
measurement ingestion with a comparison-table report pipeline."""

__version__ = "0.1.0"

from .records import (  # noqa: F401
    AggregateCell,
    MeasurementRecord,
    PayloadBucket,
    Scenario,
    Sentinel,
    SpeedBucket,
    Technology,
    bucket_of,
    speed_bucket_of,
    validate_record,
)
