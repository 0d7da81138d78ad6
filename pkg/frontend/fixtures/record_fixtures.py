"""Record golden API fixtures from a live ratbench service.

Builds a sweep dataset with exact per-bucket delivery counts (100 packets per
technology and speed bucket, delivered counts equal to the shipped speed-curve
percentages), pushes it through the real HTTP API, and saves the raw responses
this dashboard is tested against.

Run from the repository root after installing the primary package:

    python frontend/fixtures/record_fixtures.py
"""
from __future__ import annotations

import json
import pathlib
import urllib.request

from ratbench.models import builtin_model
from ratbench.records import (
    LoRaWanLink,
    MeasurementRecord,
    NbiotLink,
    Placement,
    SigfoxLink,
    Technology,
    record_to_line,
)
from ratbench.service import IngestService

HERE = pathlib.Path(__file__).resolve().parent

SPEED_POINTS = {
    Technology.NBIOT: {0.0: 88, 5.0: 83, 20.0: 86, 50.0: 79},
    Technology.LORAWAN: {0.0: 51, 5.0: 51, 20.0: 56, 50.0: 43},
    Technology.SIGFOX: {0.0: 78, 5.0: 53, 20.0: 34, 50.0: 17},
}
EB_UWH_PER_BYTE = {Technology.NBIOT: 74.80, Technology.LORAWAN: 10.2, Technology.SIGFOX: 50.79}
PARAMS = {
    Technology.NBIOT: NbiotLink(ce_level=0),
    Technology.LORAWAN: LoRaWanLink(sf=7),
    Technology.SIGFOX: SigfoxLink(),
}

WHATIF_BODY = {
    "workload": {
        "duration_h": 24.0,
        "context": {"scenario": "static-indoor"},
        "messages": [{"payload_bytes": 8, "rate_per_hour": 1.0, "weight": 1.0}],
    },
    "policy_a": {"name": "multi-rat", "objective": "min_energy_per_byte"},
    "policy_b": {"name": "nbiot-only", "objective": "min_energy_per_byte", "allowed": ["NBIoT"]},
    "seed": 17,
}


def sweep_records() -> list[MeasurementRecord]:
    records = []
    t = 0
    for tech, points in SPEED_POINTS.items():
        for speed, delivered_pct in points.items():
            for i in range(100):
                delivered = i < delivered_pct
                records.append(
                    MeasurementRecord(
                        record_id=f"sweep-{tech.value}-{speed:g}-{i:03d}",
                        technology=tech,
                        timestamp_tx=t,
                        timestamp_rx=t + 600 if delivered else None,
                        payload_bytes=8,
                        tx_power_dbm=14 if tech is not Technology.NBIOT else 23,
                        energy_uwh=8 * EB_UWH_PER_BYTE[tech],
                        delivered=delivered,
                        speed_kmh=speed,
                        position=(51.05, 3.72),
                        gateway_positions=((51.0, 3.7),),
                        placement=Placement.OUTDOOR,
                        tech_params=PARAMS[tech],
                    )
                )
                t += 1000
    return records


def http(method: str, url: str, body: str | None = None) -> str:
    request = urllib.request.Request(url, method=method)
    data = body.encode() if body is not None else None
    if data is not None:
        request.add_header("Content-Type", "application/json")
    with urllib.request.urlopen(request, data=data, timeout=30) as response:
        return response.read().decode()


def main() -> None:
    import tempfile

    with tempfile.TemporaryDirectory() as data_dir:
        service = IngestService(data_dir, addr="127.0.0.1", port=0, models=builtin_model())
        service.start_background()
        try:
            host, port = service.address
            base = f"http://{host}:{port}"
            batch = "\n".join(record_to_line(r) for r in sweep_records())
            http("POST", f"{base}/v1/records", batch)

            fixtures = {
                "speed_series.json": http("GET", f"{base}/v1/aggregate?group=speed"),
                "table_cells.json": http("GET", f"{base}/v1/aggregate?group=table"),
                "records_gt30.json": json.dumps(
                    [
                        json.loads(line)
                        for line in http(
                            "GET", f"{base}/v1/records?min_speed=30"
                        ).strip().splitlines()
                    ]
                ),
                "whatif_default.json": http(
                    "POST", f"{base}/v1/whatif", json.dumps(WHATIF_BODY)
                ),
            }
            for name, body in fixtures.items():
                path = HERE / name
                path.write_text(json.dumps(json.loads(body), indent=2) + "\n")
                print(f"wrote {path}")
        finally:
            service.shutdown()


if __name__ == "__main__":
    main()
