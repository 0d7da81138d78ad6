"""Fit per-technology power profiles to energy-per-byte targets.

The fit has two layers:

* an affine phase model (fixed overhead + power x duration, tx priced by
  payload-dependent airtime), least-squares fitted on log(E_b) so cells tens
  of times apart weigh comparably, and
* per-bucket calibration anchors: the exact target E_b of every fitted cell.

The affine layer explains the broad payload-amortisation trend and prices
payloads in buckets without targets; the anchors reproduce each measured cell
exactly. Within a target bucket, energy is priced flat per byte at the
anchor, mirroring the step-function treatment of the delivery tables (the
source data is bucketed; a smooth in-bucket shape would be invented
structure).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import least_squares

from .airtime import AirtimeProfile, RadioState
from .energy import PowerProfile, transaction_energy
from .errors import ValidationError
from .records import (
    PAYLOAD_BUCKET_ORDER,
    AggregateCell,
    PayloadBucket,
    Sentinel,
    Technology,
    bucket_payload_range,
)

AirtimeFn = Callable[[Technology, int], AirtimeProfile]

#: Transmit power levels assumed when records/configs do not state one.
DEFAULT_TX_POWER_DBM: dict[Technology, int] = {
    Technology.LORAWAN: 14,
    Technology.SIGFOX: 14,
    Technology.NBIOT: 23,
}

#: Fixed secondary power-draw parameters (mW): these are not fitted unless
#: the target set is rich enough; the fit adjusts p_tx and the overhead.
DEFAULT_BASE_POWERS: dict[Technology, dict[str, float]] = {
    Technology.LORAWAN: {"p_rx_mw": 40.0, "p_idle_mw": 5.0, "p_sleep_mw": 0.01, "p_tx_mw": 120.0},
    Technology.SIGFOX: {"p_rx_mw": 40.0, "p_idle_mw": 5.0, "p_sleep_mw": 0.01, "p_tx_mw": 150.0},
    Technology.NBIOT: {"p_rx_mw": 80.0, "p_idle_mw": 20.0, "p_sleep_mw": 0.01, "p_tx_mw": 550.0},
}


@dataclass(frozen=True)
class BucketShape:
    """Payload-averaged quantities of one bucket under a given airtime model."""

    mean_payload_bytes: float
    mean_tx_ms: float
    fixed_mw_ms: float  # non-tx phase power x duration, payload-independent


def bucket_shape(
    tech: Technology,
    bucket: PayloadBucket,
    airtime_for: AirtimeFn,
    base_powers: dict[str, float],
) -> BucketShape:
    """Average tx time and fixed phase energy over the bucket's payload range,
    uniform over the integer sizes the technology can carry."""
    sizes = bucket_payload_range(bucket, tech)
    if len(sizes) == 0:
        raise ValidationError(f"{tech} has no payloads in bucket {bucket.value}")
    tx_total = 0.0
    fixed_mw_ms = None
    state_power = {
        RadioState.RX: base_powers["p_rx_mw"],
        RadioState.IDLE: base_powers["p_idle_mw"],
        RadioState.SLEEP: base_powers["p_sleep_mw"],
    }
    for n in sizes:
        profile = airtime_for(tech, n)
        tx_total += sum(p.duration_ms for p in profile.phases if p.state == RadioState.TX)
        if fixed_mw_ms is None:
            fixed_mw_ms = sum(
                state_power[p.state] * p.duration_ms
                for p in profile.phases
                if p.state != RadioState.TX
            )
    return BucketShape(
        mean_payload_bytes=sum(sizes) / len(sizes),
        mean_tx_ms=tx_total / len(sizes),
        fixed_mw_ms=fixed_mw_ms or 0.0,
    )


@dataclass(frozen=True)
class FittedTechEnergy:
    """Fit output for one technology in one scenario."""

    technology: Technology
    profile: PowerProfile
    tx_power_dbm: int
    eb_anchor: dict[PayloadBucket, float]
    model_eb: dict[PayloadBucket, float]
    residual_rms_log: float

    def packet_energy_uwh(self, payload_bytes: int, airtime_for: AirtimeFn) -> float:
        """Anchored flat per-byte price where a target exists, affine model otherwise."""
        from .records import bucket_of

        bucket = bucket_of(payload_bytes)
        anchor = self.eb_anchor.get(bucket)
        if anchor is not None:
            return anchor * payload_bytes
        profile = airtime_for(self.technology, payload_bytes)
        return transaction_energy(profile, self.profile, self.tx_power_dbm)


def _model_eb(theta: np.ndarray, shapes: list[BucketShape]) -> np.ndarray:
    overhead, p_tx = theta
    return np.array(
        [
            (overhead + (s.fixed_mw_ms + p_tx * s.mean_tx_ms) / 3600.0) / s.mean_payload_bytes
            for s in shapes
        ]
    )


def fit_power_profiles(
    targets: list[AggregateCell],
    airtime_for: AirtimeFn,
    tx_power_dbm: dict[Technology, int] | None = None,
    base_powers: dict[Technology, dict[str, float]] | None = None,
) -> dict[Technology, FittedTechEnergy]:
    """Fit one power profile per technology present in the targets.

    Targets must be energy cells of a single scenario (one cell per technology
    and bucket); sentinel cells are skipped. With a single usable cell the fit
    is underdetermined, so p_tx stays at its default and only the overhead is
    solved (exactly).
    """
    tx_power_dbm = tx_power_dbm or DEFAULT_TX_POWER_DBM
    base_powers = base_powers or DEFAULT_BASE_POWERS

    grouped: dict[Technology, dict[PayloadBucket, float]] = {}
    for cell in targets:
        if isinstance(cell.eb_uwh_per_byte, Sentinel):
            continue
        per_tech = grouped.setdefault(cell.technology, {})
        if cell.bucket in per_tech:
            raise ValidationError(
                f"duplicate target for ({cell.technology}, {cell.bucket.value})"
            )
        per_tech[cell.bucket] = float(cell.eb_uwh_per_byte)

    fitted: dict[Technology, FittedTechEnergy] = {}
    for tech, eb_targets in grouped.items():
        base = base_powers[tech]
        dbm = tx_power_dbm[tech]
        buckets = [b for b in PAYLOAD_BUCKET_ORDER if b in eb_targets]
        shapes = [bucket_shape(tech, b, airtime_for, base) for b in buckets]
        y = np.array([eb_targets[b] for b in buckets])

        if len(buckets) == 1:
            p_tx = base["p_tx_mw"]
            s = shapes[0]
            overhead = y[0] * s.mean_payload_bytes - (s.fixed_mw_ms + p_tx * s.mean_tx_ms) / 3600.0
            overhead = max(0.0, overhead)
            theta = np.array([overhead, p_tx])
        else:
            def log_residuals(theta: np.ndarray) -> np.ndarray:
                eb = np.maximum(_model_eb(theta, shapes), 1e-12)
                return np.log(eb) - np.log(y)

            x0 = np.array([max(float(y[0] * shapes[0].mean_payload_bytes) / 2.0, 1.0),
                           base["p_tx_mw"]])
            result = least_squares(log_residuals, x0, bounds=(0.0, np.inf))
            theta = result.x

        model_eb_values = _model_eb(theta, shapes)
        residual_rms = float(
            math.sqrt(np.mean((np.log(np.maximum(model_eb_values, 1e-12)) - np.log(y)) ** 2))
        )
        profile = PowerProfile(
            p_tx_mw={dbm: float(theta[1])},
            p_rx_mw=base["p_rx_mw"],
            p_idle_mw=base["p_idle_mw"],
            p_sleep_mw=base["p_sleep_mw"],
            fixed_overhead_uwh=float(theta[0]),
        )
        fitted[tech] = FittedTechEnergy(
            technology=tech,
            profile=profile,
            tx_power_dbm=dbm,
            eb_anchor=dict(eb_targets),
            model_eb={b: float(v) for b, v in zip(buckets, model_eb_values)},
            residual_rms_log=residual_rms,
        )
    return fitted


def forward_eb_targets(
    tech: Technology,
    profile: PowerProfile,
    tx_power_dbm: int,
    airtime_for: AirtimeFn,
    buckets: list[PayloadBucket],
) -> dict[PayloadBucket, float]:
    """Bucket-average E_b a known profile produces; used to build synthetic
    fit targets and to cross-check recovered profiles."""
    out: dict[PayloadBucket, float] = {}
    for bucket in buckets:
        sizes = bucket_payload_range(bucket, tech)
        energy = 0.0
        for n in sizes:
            energy += transaction_energy(airtime_for(tech, n), profile, tx_power_dbm)
        out[bucket] = (energy / len(sizes)) / (sum(sizes) / len(sizes))
    return out
