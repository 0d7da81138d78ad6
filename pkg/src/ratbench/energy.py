"""Per-packet energy accounting and measurement-calibration operations.

Energy model: affine in the radio phases — a fixed per-transaction overhead
plus power x duration per phase, with tx phases priced at the power matching
the transmit level. All energies in uWh; mW * ms / 3600 = uWh.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .airtime import AirtimeProfile, RadioState
from .errors import TooFewSamples, NonPositiveEnergy, UnknownTxPower, ValidationError
from .records import Technology

MWH_MS_TO_UWH = 1.0 / 3600.0


@dataclass(frozen=True)
class PowerProfile:
    """Power draw per radio state (mW) plus a fixed per-transaction overhead (uWh).

    p_tx_mw maps integer transmit levels in dBm to drawn power; levels outside
    the lookup raise UnknownTxPower.
    """

    p_tx_mw: dict[int, float]
    p_rx_mw: float
    p_idle_mw: float
    p_sleep_mw: float
    fixed_overhead_uwh: float = 0.0

    def __post_init__(self) -> None:
        if not self.p_tx_mw:
            raise ValidationError("p_tx_mw lookup is empty")
        levels = sorted(self.p_tx_mw)
        draws = [self.p_tx_mw[l] for l in levels]
        if any(d < 0 for d in draws) or min(
            self.p_rx_mw, self.p_idle_mw, self.p_sleep_mw
        ) < 0:
            raise ValidationError("power draws must be non-negative")
        if any(b < a for a, b in zip(draws, draws[1:])):
            raise ValidationError("p_tx_mw must be non-decreasing in dBm")
        if not self.p_sleep_mw <= self.p_idle_mw <= self.p_rx_mw:
            raise ValidationError("expected p_sleep <= p_idle <= p_rx")
        if self.fixed_overhead_uwh < 0:
            raise ValidationError("fixed_overhead_uwh negative")

    def tx_power_at(self, tx_power_dbm: int) -> float:
        try:
            return self.p_tx_mw[tx_power_dbm]
        except KeyError:
            raise UnknownTxPower(
                f"{tx_power_dbm} dBm outside lookup domain {sorted(self.p_tx_mw)}"
            ) from None

    def state_power(self, state: str, tx_power_dbm: int) -> float:
        if state == RadioState.TX:
            return self.tx_power_at(tx_power_dbm)
        if state == RadioState.RX:
            return self.p_rx_mw
        if state == RadioState.IDLE:
            return self.p_idle_mw
        return self.p_sleep_mw


def transaction_energy(
    profile: AirtimeProfile, power: PowerProfile, tx_power_dbm: int
) -> float:
    """uWh for one transaction: overhead + sum of phase power x duration."""
    total_mw_ms = 0.0
    for phase in profile.phases:
        total_mw_ms += power.state_power(phase.state, tx_power_dbm) * phase.duration_ms
    return power.fixed_overhead_uwh + total_mw_ms * MWH_MS_TO_UWH


# --- coulomb-counter calibration ------------------------------------------

@dataclass(frozen=True)
class CalibrationFactor:
    """Multiplicative correction for a coulomb counter's sense-resistor error."""

    scale: float
    n_samples: int
    technology: Technology | None = None

    def __post_init__(self) -> None:
        if self.scale <= 0:
            raise ValidationError("scale must be positive")
        if self.n_samples < 2:
            raise TooFewSamples("calibration needs at least 2 reference pairs")

    def apply(self, device_uwh: float) -> float:
        return self.scale * device_uwh


def calibrate_scale(
    pairs: list[tuple[float, float]], technology: Technology | None = None
) -> CalibrationFactor:
    """Least-squares scale through the origin: argmin sum (scale*device - reference)^2.

    pairs: (device_uwh, reference_uwh) from simultaneous coulomb-counter and
    reference-instrument readings of the same packets.
    """
    if len(pairs) < 2:
        raise TooFewSamples(f"{len(pairs)} pairs; need at least 2")
    if any(d <= 0 or r <= 0 for d, r in pairs):
        raise NonPositiveEnergy("all calibration energies must be positive")
    num = sum(d * r for d, r in pairs)
    den = sum(d * d for d, r in pairs)
    return CalibrationFactor(scale=num / den, n_samples=len(pairs), technology=technology)


# --- residual box statistics (error-margin figure) --------------------------

@dataclass(frozen=True)
class BoxStats:
    """Tukey box-plot statistics of a residual set, in percent."""

    median: float
    lower_quartile: float
    upper_quartile: float
    lower_whisker: float
    upper_whisker: float
    outliers: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        ordered = (
            self.lower_whisker <= self.lower_quartile <= self.median
            <= self.upper_quartile <= self.upper_whisker
        )
        if not ordered:
            raise ValidationError("box statistics out of order")
        for o in self.outliers:
            if self.lower_whisker <= o <= self.upper_whisker:
                raise ValidationError(f"outlier {o} inside the whisker span")


def residual_box_stats(residuals_pct: list[float]) -> BoxStats:
    """Median/quartiles by linear interpolation, whiskers at the most extreme
    points within 1.5 IQR of the quartiles, the rest listed as outliers."""
    if len(residuals_pct) < 5:
        raise TooFewSamples(f"{len(residuals_pct)} samples; need at least 5")
    xs = np.asarray(sorted(residuals_pct), dtype=float)
    q1, med, q3 = np.percentile(xs, [25.0, 50.0, 75.0])
    iqr = q3 - q1
    lo_fence = q1 - 1.5 * iqr
    hi_fence = q3 + 1.5 * iqr
    inside = xs[(xs >= lo_fence) & (xs <= hi_fence)]
    if inside.size == 0:
        raise ValidationError("no samples inside the whisker fences")
    lo_whisker = float(inside.min())
    hi_whisker = float(inside.max())
    outliers = tuple(float(x) for x in xs[(xs < lo_whisker) | (xs > hi_whisker)])
    return BoxStats(
        median=float(med),
        lower_quartile=float(q1),
        upper_quartile=float(q3),
        lower_whisker=lo_whisker,
        upper_whisker=hi_whisker,
        outliers=outliers,
    )
