"""Per-packet on-air time models for LoRa, Sigfox, and NB-IoT.

Each operation returns an :class:`AirtimeProfile`: an ordered list of radio
phases with durations in milliseconds. Only ``tx`` phases count as on-air
time for duty-cycle purposes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import BadCeLevel, BadSpreadingFactor, LdroRequired, PayloadExceedsMax, ValidationError
from .records import MAX_PAYLOAD_BYTES, Technology


class RadioState:
    TX = "tx"
    RX = "rx"
    IDLE = "idle"
    SLEEP = "sleep"

    ALL = (TX, RX, IDLE, SLEEP)


@dataclass(frozen=True)
class Phase:
    name: str
    duration_ms: float
    state: str

    def __post_init__(self) -> None:
        if self.duration_ms < 0:
            raise ValidationError(f"phase {self.name} has negative duration")
        if self.state not in RadioState.ALL:
            raise ValidationError(f"unknown radio state {self.state!r}")


@dataclass(frozen=True)
class AirtimeProfile:
    """Ordered radio phases of one transaction."""

    phases: tuple[Phase, ...]

    @property
    def total_on_air_ms(self) -> float:
        return sum(p.duration_ms for p in self.phases if p.state == RadioState.TX)

    @property
    def busy_ms(self) -> float:
        """Wall-clock span of the transaction, tx start to last phase end."""
        return sum(p.duration_ms for p in self.phases)

    def tx_segments(self, start_ms: float = 0.0) -> list[tuple[float, float]]:
        """(start, duration) of each tx phase when the transaction starts at start_ms."""
        out = []
        t = start_ms
        for p in self.phases:
            if p.state == RadioState.TX:
                out.append((t, p.duration_ms))
            t += p.duration_ms
        return out


# --- LoRa ------------------------------------------------------------------

@dataclass(frozen=True)
class LoRaParams:
    """LoRa PHY configuration. Defaults are the common LoRaWAN EU868 uplink
    settings: CR 4/5, 8 preamble symbols, explicit header, CRC on."""

    sf: int
    bandwidth_hz: int = 125_000
    coding_rate_index: int = 1  # 1..4 for CR 4/5..4/8
    preamble_symbols: int = 8
    explicit_header: bool = True
    crc_on: bool = True
    low_data_rate_optimize: bool = False

    def __post_init__(self) -> None:
        if not 7 <= self.sf <= 12:
            raise BadSpreadingFactor(f"sf {self.sf} outside [7, 12]")
        if self.bandwidth_hz not in (125_000, 250_000, 500_000):
            raise ValidationError(f"bandwidth {self.bandwidth_hz} Hz not one of 125/250/500 kHz")
        if not 1 <= self.coding_rate_index <= 4:
            raise ValidationError(f"coding rate index {self.coding_rate_index} outside [1, 4]")
        if self.preamble_symbols < 6:
            raise ValidationError("preamble must be at least 6 symbols")

    @property
    def symbol_time_ms(self) -> float:
        return (2 ** self.sf) / self.bandwidth_hz * 1000.0


def lora_payload_symbols(params: LoRaParams, payload_bytes: int) -> int:
    """Symbol count of the payload part, per the SX127x symbol-count model."""
    crc = 1 if params.crc_on else 0
    ih = 0 if params.explicit_header else 1
    de = 1 if params.low_data_rate_optimize else 0
    numerator = 8 * payload_bytes - 4 * params.sf + 28 + 16 * crc - 20 * ih
    denominator = 4 * (params.sf - 2 * de)
    return 8 + max(math.ceil(numerator / denominator) * (params.coding_rate_index + 4), 0)


def lora_time_on_air(params: LoRaParams, payload_bytes: int) -> AirtimeProfile:
    """Single tx phase of (preamble + 4.25 + payload symbols) symbol times."""
    max_bytes = MAX_PAYLOAD_BYTES[Technology.LORAWAN]
    if not 1 <= payload_bytes <= max_bytes:
        raise PayloadExceedsMax(Technology.LORAWAN, payload_bytes, max_bytes)
    if params.symbol_time_ms > 16.0 and not params.low_data_rate_optimize:
        raise LdroRequired(
            f"symbol time {params.symbol_time_ms:.3f} ms > 16 ms requires low_data_rate_optimize"
        )
    symbols = params.preamble_symbols + 4.25 + lora_payload_symbols(params, payload_bytes)
    toa_ms = symbols * params.symbol_time_ms
    return AirtimeProfile((Phase("lora_tx", toa_ms, RadioState.TX),))


# --- Sigfox ----------------------------------------------------------------

@dataclass(frozen=True)
class SigfoxParams:
    """Sigfox uplink configuration (EU, 100 bps DBPSK).

    frame_overhead_bytes and interframe_gap_ms are assumptions, not measured
    values; both are configurable.
    """

    bitrate_bps: int = 100
    repetitions: int = 3
    frame_overhead_bytes: int = 14
    interframe_gap_ms: float = 500.0

    def __post_init__(self) -> None:
        if self.bitrate_bps <= 0:
            raise ValidationError("bitrate must be positive")
        if self.repetitions < 1:
            raise ValidationError("repetitions must be at least 1")

    def frame_ms(self, payload_bytes: int) -> float:
        return (payload_bytes + self.frame_overhead_bytes) * 8 * 1000.0 / self.bitrate_bps


def sigfox_airtime(params: SigfoxParams, payload_bytes: int) -> AirtimeProfile:
    """Three identical frames at distinct carrier frequencies, idle gaps between."""
    max_bytes = MAX_PAYLOAD_BYTES[Technology.SIGFOX]
    if not 1 <= payload_bytes <= max_bytes:
        raise PayloadExceedsMax(Technology.SIGFOX, payload_bytes, max_bytes)
    frame = params.frame_ms(payload_bytes)
    phases: list[Phase] = []
    for i in range(params.repetitions):
        if i:
            phases.append(Phase(f"gap_{i}", params.interframe_gap_ms, RadioState.IDLE))
        phases.append(Phase(f"frame_{i + 1}", frame, RadioState.TX))
    return AirtimeProfile(tuple(phases))


# --- NB-IoT ----------------------------------------------------------------

@dataclass(frozen=True)
class NbiotTimingConfig:
    """NB-IoT transaction timing. None of these durations is a measured truth;
    they are fit targets with conservative defaults, overridable from the model
    file."""

    attach_ms: float = 2500.0
    tx_ms_per_128b: float = 400.0
    inactivity_timer_ms: float = 10_000.0
    edrx_cycle_ms: float | None = None
    psm_entry_ms: float = 100.0
    ce_multiplier: tuple[float, float, float] = (1.0, 2.0, 4.0)

    def __post_init__(self) -> None:
        c0, c1, c2 = self.ce_multiplier
        if not (c0 == 1.0 and c0 <= c1 <= c2):
            raise ValidationError(f"ce_multiplier {self.ce_multiplier} must be 1.0 <= c1 <= c2")
        for name in ("attach_ms", "tx_ms_per_128b", "inactivity_timer_ms", "psm_entry_ms"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} negative")


def nbiot_transaction_profile(
    cfg: NbiotTimingConfig,
    payload_bytes: int,
    ce_level: int,
    rrc_resume: bool = True,
) -> AirtimeProfile:
    """Full radio transaction: attach (unless resumed), uplink tx scaled by the
    CE-level multiplier, inactivity window, optional eDRX listen, PSM entry."""
    max_bytes = MAX_PAYLOAD_BYTES[Technology.NBIOT]
    if not 1 <= payload_bytes <= max_bytes:
        raise PayloadExceedsMax(Technology.NBIOT, payload_bytes, max_bytes)
    if ce_level not in (0, 1, 2):
        raise BadCeLevel(f"CE level {ce_level} outside {{0, 1, 2}}")

    phases: list[Phase] = []
    if not rrc_resume:
        phases.append(Phase("attach", cfg.attach_ms, RadioState.RX))
    blocks = math.ceil(payload_bytes / 128)
    tx_ms = blocks * cfg.tx_ms_per_128b * cfg.ce_multiplier[ce_level]
    phases.append(Phase("uplink_tx", tx_ms, RadioState.TX))
    phases.append(Phase("inactivity", cfg.inactivity_timer_ms, RadioState.IDLE))
    if cfg.edrx_cycle_ms is not None:
        phases.append(Phase("edrx_listen", cfg.edrx_cycle_ms, RadioState.RX))
    phases.append(Phase("psm_entry", cfg.psm_entry_ms, RadioState.SLEEP))
    return AirtimeProfile(tuple(phases))
