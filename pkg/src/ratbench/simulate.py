"""Deterministic discrete-event simulation.

Two engines share the same deterministic substream scheme (see rng):

* run_campaign replays the monitoring loop: per cycle, one packet per enabled
  technology with a random payload, then one report packet over the cellular
  channel whose energy is tracked separately as overhead.
* run_workload schedules application messages at fixed rates and routes each
  through the policy layer, maintaining duty-cycle ledgers per license-exempt
  technology.

Event time is integer milliseconds since the simulation epoch.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from . import rng
from .dutycycle import DutyCycleLedger, duty_next_allowed
from .errors import ConfigInvalid, Unsupported
from .models import ModelSet, scenario_context
from .pdr import sample_delivery
from .policy import (
    Context,
    MessageSpec,
    Policy,
    confirmed_ladder_plan,
    expected_cost,
    select_rat,
)
from .records import (
    MAX_PAYLOAD_BYTES,
    TECHNOLOGY_ORDER,
    LoRaWanLink,
    MeasurementRecord,
    Mobility,
    NbiotLink,
    PayloadBucket,
    Scenario,
    SigfoxLink,
    Technology,
    bucket_of,
    record_to_line,
)

#: Fixed backhaul latency credited on delivered packets (reception timestamp).
BACKHAUL_MS = 120

_TECH_INDEX = {tech: i for i, tech in enumerate(TECHNOLOGY_ORDER)}
_TECH_CODE = {Technology.LORAWAN: "L", Technology.SIGFOX: "S", Technology.NBIOT: "N"}

#: Campaign payload sampling ranges. LoRaWAN stops at 255 B: the delivery
#: table has no data above that, matching the field campaign's own coverage.
DEFAULT_PAYLOAD_RANGES: dict[Technology, tuple[int, int]] = {
    Technology.LORAWAN: (1, 255),
    Technology.SIGFOX: (1, 12),
    Technology.NBIOT: (1, 1547),
}

PDR_ANCHORS = ("scenario", "speed")


@dataclass(frozen=True)
class CampaignConfig:
    """Monitoring-campaign parameters."""

    scenario: Scenario
    cycles: int
    seed: int = 0
    technologies: tuple[Technology, ...] = TECHNOLOGY_ORDER
    payload_ranges: dict[Technology, tuple[int, int]] = field(default_factory=dict)
    sigfox_tx_power_dbm: int = 14
    conformance: bool = True
    speed_kmh: float | None = None
    pdr_anchor: str = "scenario"
    report_channel: Technology = Technology.NBIOT
    duty_band_limit: float = 0.01

    def __post_init__(self) -> None:
        if self.cycles < 1:
            raise ConfigInvalid("cycles must be at least 1")
        if not self.technologies:
            raise ConfigInvalid("at least one technology must be enabled")
        if self.conformance and self.sigfox_tx_power_dbm != 14:
            raise ConfigInvalid("conformance mode fixes Sigfox transmit power at 14 dBm")
        if self.pdr_anchor not in PDR_ANCHORS:
            raise ConfigInvalid(f"pdr_anchor must be one of {PDR_ANCHORS}")
        if self.report_channel is not Technology.NBIOT:
            raise ConfigInvalid("the report channel is the cellular uplink (NBIoT)")
        if self.scenario.mobility is Mobility.STATIC and self.speed_kmh not in (None, 0, 0.0):
            raise ConfigInvalid("static scenarios cannot carry a nonzero speed")
        if self.speed_kmh is not None and self.speed_kmh < 0:
            raise ConfigInvalid("speed_kmh negative")
        for tech, (lo, hi) in self.payload_ranges.items():
            if not 1 <= lo <= hi <= MAX_PAYLOAD_BYTES[tech]:
                raise ConfigInvalid(
                    f"payload range [{lo}, {hi}] invalid for {tech}"
                )

    def payload_range(self, tech: Technology) -> tuple[int, int]:
        return self.payload_ranges.get(tech, DEFAULT_PAYLOAD_RANGES[tech])


def campaign_config_from_json(obj: dict) -> CampaignConfig:
    try:
        ranges = {
            Technology(name): (int(pair[0]), int(pair[1]))
            for name, pair in (obj.get("payload_ranges") or {}).items()
        }
        technologies = tuple(
            Technology(t) for t in obj.get("technologies", [t.value for t in TECHNOLOGY_ORDER])
        )
        return CampaignConfig(
            scenario=Scenario.parse(obj["scenario"]),
            cycles=int(obj["cycles"]),
            seed=int(obj.get("seed", 0)),
            technologies=technologies,
            payload_ranges=ranges,
            sigfox_tx_power_dbm=int(obj.get("sigfox_tx_power_dbm", 14)),
            conformance=bool(obj.get("conformance", True)),
            speed_kmh=None if obj.get("speed_kmh") is None else float(obj["speed_kmh"]),
            pdr_anchor=str(obj.get("pdr_anchor", "scenario")),
            duty_band_limit=float(obj.get("duty_band_limit", 0.01)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigInvalid(f"bad campaign config: {exc}") from exc


def load_campaign_config(path) -> CampaignConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return campaign_config_from_json(json.load(fh))


@dataclass
class CampaignResult:
    records: list[MeasurementRecord]
    events: list[dict]
    seed: int
    overhead_energy_uwh: float


def _cycle_speed(cfg: CampaignConfig, seed: int, cycle: int) -> float:
    if cfg.scenario.mobility is Mobility.STATIC:
        return 0.0
    if cfg.speed_kmh is not None:
        return cfg.speed_kmh
    # mobile campaign without a stated speed: the delivery anchor is the
    # table's mobile mix; draw a plausible speed as record metadata only
    gen = rng.substream(seed, rng.CAMPAIGN_SPEED, cycle)
    return round(float(gen.uniform(1.0, 60.0)), 1)


def _delivery_probability(
    cfg: CampaignConfig, models: ModelSet, tech: Technology, payload: int, speed: float
) -> float:
    if cfg.pdr_anchor == "speed":
        if bucket_of(payload) is PayloadBucket.B1_12:
            return models.pdr_speed_anchored(tech, speed)
        return models.pdr(tech, payload, cfg.scenario, speed).value
    # scenario anchor: table column as-is; a stated speed refines mobile cells
    speed_arg = cfg.speed_kmh if cfg.scenario.mobility is Mobility.MOBILE else None
    return models.pdr(tech, payload, cfg.scenario, speed_arg).value


def _tech_params(tech: Technology, scenario: Scenario, models: ModelSet):
    ctx = scenario_context(scenario)
    if tech is Technology.LORAWAN:
        return LoRaWanLink(sf=ctx.lorawan_sf, adr_enabled=True)
    if tech is Technology.SIGFOX:
        return SigfoxLink()
    timing = models.airtime_config.nbiot
    return NbiotLink(
        ce_level=ctx.nbiot_ce,
        psm_tau_s=timing.psm_entry_ms / 1000.0,
        edrx_s=None if timing.edrx_cycle_ms is None else timing.edrx_cycle_ms / 1000.0,
    )


def run_campaign(
    cfg: CampaignConfig, models: ModelSet, seed: int | None = None
) -> CampaignResult:
    """Generate one record per (cycle, technology) plus one report event per
    cycle; fully deterministic for a given (config, models, seed)."""
    seed = cfg.seed if seed is None else seed
    records: list[MeasurementRecord] = []
    events: list[dict] = []
    ledgers = {
        tech: DutyCycleLedger(band_limit=cfg.duty_band_limit)
        for tech in (Technology.LORAWAN, Technology.SIGFOX)
    }
    overhead_energy = 0.0
    now_ms = 0
    for cycle in range(cfg.cycles):
        speed = _cycle_speed(cfg, seed, cycle)
        cycle_lines: list[str] = []
        for tech in cfg.technologies:
            gen = rng.substream(seed, rng.CAMPAIGN_TX, cycle, _TECH_INDEX[tech])
            lo, hi = cfg.payload_range(tech)
            payload = int(gen.integers(lo, hi + 1))
            profile = models.airtime(tech, payload, cfg.scenario)
            busy = math.ceil(profile.busy_ms)
            if tech in ledgers:
                start = duty_next_allowed(
                    ledgers[tech], now_ms, profile.total_on_air_ms, profile.busy_ms
                )
                ledgers[tech].record(start, profile.total_on_air_ms, profile.busy_ms)
            else:
                start = now_ms
            energy = models.packet_energy_uwh(tech, payload, cfg.scenario)
            p = _delivery_probability(cfg, models, tech, payload, speed)
            delivered = sample_delivery(gen, p)
            if tech is Technology.SIGFOX:
                tx_dbm = cfg.sigfox_tx_power_dbm
            else:
                tx_dbm = models.tx_power_dbm(tech, cfg.scenario)
            record = MeasurementRecord(
                record_id=f"{seed:016x}-{cycle:06d}-{_TECH_CODE[tech]}",
                technology=tech,
                timestamp_tx=start,
                timestamp_rx=start + busy + BACKHAUL_MS if delivered else None,
                payload_bytes=payload,
                tx_power_dbm=tx_dbm,
                energy_uwh=energy,
                delivered=delivered,
                speed_kmh=speed,
                placement=cfg.scenario.placement,
                tech_params=_tech_params(tech, cfg.scenario, models),
            )
            records.append(record)
            cycle_lines.append(record_to_line(record))
            events.append(
                {
                    "t_ms": start,
                    "event_type": "tx",
                    "technology": tech.value,
                    "cycle": cycle,
                    "payload_bytes": payload,
                    "on_air_ms": profile.total_on_air_ms,
                    "busy_ms": profile.busy_ms,
                    "energy_uwh": energy,
                    "delivered": delivered,
                }
            )
            now_ms = max(now_ms, start + busy)
        # report uplink carrying the captured results; overhead, not a record
        report_bytes = min(
            MAX_PAYLOAD_BYTES[Technology.NBIOT], sum(len(line) for line in cycle_lines)
        )
        report_profile = models.airtime(cfg.report_channel, report_bytes, cfg.scenario)
        report_energy = models.packet_energy_uwh(
            cfg.report_channel, report_bytes, cfg.scenario
        )
        overhead_energy += report_energy
        events.append(
            {
                "t_ms": now_ms,
                "event_type": "report_tx",
                "technology": cfg.report_channel.value,
                "cycle": cycle,
                "payload_bytes": report_bytes,
                "on_air_ms": report_profile.total_on_air_ms,
                "busy_ms": report_profile.busy_ms,
                "energy_uwh": report_energy,
                "accounting": "overhead",
            }
        )
        now_ms += math.ceil(report_profile.busy_ms)
    return CampaignResult(
        records=records, events=events, seed=seed, overhead_energy_uwh=overhead_energy
    )


# --- application workloads ---------------------------------------------------

@dataclass(frozen=True)
class WorkloadItem:
    message: MessageSpec
    rate_per_hour: float
    weight: float | None = None

    def __post_init__(self) -> None:
        if self.rate_per_hour <= 0:
            raise ConfigInvalid("rate_per_hour must be positive")


@dataclass(frozen=True)
class WorkloadSpec:
    items: tuple[WorkloadItem, ...]
    duration_h: float
    context: Context

    def __post_init__(self) -> None:
        if self.duration_h < 0:
            raise ConfigInvalid("duration_h negative")
        if not self.items:
            raise ConfigInvalid("workload needs at least one message template")
        weights = [i.weight for i in self.items if i.weight is not None]
        if weights and abs(sum(weights) - 1.0) > 1e-9:
            raise ConfigInvalid("workload weights must sum to 1")


def workload_from_json(obj: dict) -> WorkloadSpec:
    try:
        ctx_obj = obj.get("context", {})
        context = Context(
            scenario=Scenario.parse(ctx_obj.get("scenario", "static-outdoor")),
            speed_kmh=None if ctx_obj.get("speed_kmh") is None else float(ctx_obj["speed_kmh"]),
            lorawan_sf=ctx_obj.get("lorawan_sf"),
            nbiot_ce=ctx_obj.get("nbiot_ce"),
        )
        items = tuple(
            WorkloadItem(
                message=MessageSpec(
                    payload_bytes=int(m["payload_bytes"]),
                    critical=bool(m.get("critical", False)),
                    deadline_ms=None if m.get("deadline_ms") is None else int(m["deadline_ms"]),
                ),
                rate_per_hour=float(m["rate_per_hour"]),
                weight=None if m.get("weight") is None else float(m["weight"]),
            )
            for m in obj["messages"]
        )
        return WorkloadSpec(items=items, duration_h=float(obj["duration_h"]), context=context)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigInvalid(f"bad workload: {exc}") from exc


def load_workload(path) -> WorkloadSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return workload_from_json(json.load(fh))


@dataclass
class TechTotals:
    """Transmission-level tallies; totals are exact sums of the per-technology parts."""

    energy_uwh: float = 0.0
    n_sent: int = 0
    n_delivered: int = 0
    bytes_sent: int = 0
    bytes_delivered: int = 0

    @property
    def eb_uwh_per_byte(self) -> float | None:
        return self.energy_uwh / self.bytes_sent if self.bytes_sent else None

    @property
    def pdr(self) -> float | None:
        return self.n_delivered / self.n_sent if self.n_sent else None

    def add(self, energy_uwh: float, payload_bytes: int, delivered: bool) -> None:
        self.energy_uwh += energy_uwh
        self.n_sent += 1
        self.bytes_sent += payload_bytes
        if delivered:
            self.n_delivered += 1
            self.bytes_delivered += payload_bytes

    def as_json(self) -> dict:
        return {
            "energy_uwh": self.energy_uwh,
            "n_sent": self.n_sent,
            "n_delivered": self.n_delivered,
            "bytes_sent": self.bytes_sent,
            "bytes_delivered": self.bytes_delivered,
            "eb_uwh_per_byte": self.eb_uwh_per_byte,
            "pdr": self.pdr,
        }


@dataclass
class SimSummary:
    per_technology: dict[Technology, TechTotals]
    total: TechTotals
    n_messages: int = 0
    n_messages_delivered: int = 0
    events: list[dict] = field(default_factory=list)
    notes: tuple[str, ...] = ()

    def as_json(self) -> dict:
        return {
            "per_technology": {
                t.value: totals.as_json() for t, totals in sorted(self.per_technology.items())
            },
            "total": self.total.as_json(),
            "n_messages": self.n_messages,
            "n_messages_delivered": self.n_messages_delivered,
            "notes": list(self.notes),
        }


def _arrivals(w: WorkloadSpec) -> list[tuple[int, int]]:
    """(time_ms, template_index) of every message, policy-independent."""
    out: list[tuple[int, int]] = []
    for idx, item in enumerate(w.items):
        count = int(item.rate_per_hour * w.duration_h)
        for k in range(count):
            t_ms = int(round((k + 0.5) / item.rate_per_hour * 3_600_000))
            out.append((t_ms, idx))
    out.sort()
    return out


def run_workload(
    w: WorkloadSpec, policy: Policy, models: ModelSet, seed: int = 0
) -> SimSummary:
    """Route every scheduled message through the policy and tally outcomes.

    Delivery draws come from one substream per message event consumed one draw
    per attempt, so two policies evaluated under the same seed face identical
    channel luck (common random numbers).
    """
    per_tech: dict[Technology, TechTotals] = {t: TechTotals() for t in TECHNOLOGY_ORDER}
    total = TechTotals()
    events: list[dict] = []
    notes: list[str] = []
    n_messages = 0
    n_messages_delivered = 0
    ctx = Context(
        scenario=w.context.scenario,
        speed_kmh=w.context.speed_kmh,
        lorawan_sf=w.context.lorawan_sf,
        nbiot_ce=w.context.nbiot_ce,
    )
    ledgers = ctx.duty_ledgers

    for event_idx, (t_sched, item_idx) in enumerate(_arrivals(w)):
        item = w.items[item_idx]
        msg = item.message
        gen = rng.substream(seed, rng.WORKLOAD, event_idx)
        ctx.now_ms = max(ctx.now_ms, t_sched)

        if msg.critical:
            attempts = _ladder_attempts(policy, msg)
        else:
            tech = select_rat(policy, msg, ctx, models)
            est = expected_cost(tech, msg, ctx, models, policy.allow_fragmentation)
            if est.pdr_fallback_from is not None:
                notes.append(
                    f"{tech.value}: pdr fallback from bucket {est.pdr_fallback_from.value}"
                )
            attempts = [
                (tech, size, False, False)
                for size in _fragment_sizes_for(tech, msg, policy)
            ]

        delivered = _execute_attempts(
            attempts, ctx, models, ledgers, gen, per_tech, total, events, t_sched
        )
        n_messages += 1
        if delivered:
            n_messages_delivered += 1
    return SimSummary(
        per_technology=per_tech,
        total=total,
        n_messages=n_messages,
        n_messages_delivered=n_messages_delivered,
        events=events,
        notes=tuple(dict.fromkeys(notes)),
    )


def _fragment_sizes_for(tech: Technology, msg: MessageSpec, policy: Policy) -> list[int]:
    from .policy import _fragment_sizes

    return _fragment_sizes(msg.payload_bytes, tech, policy.allow_fragmentation)


def _ladder_attempts(policy: Policy, msg: MessageSpec) -> list[tuple[Technology, int, bool, bool]]:
    """(tech, payload, confirmed, stop_on_success) per potential ladder attempt."""
    attempts = []
    for rung in policy.ladder:
        if msg.payload_bytes > MAX_PAYLOAD_BYTES[rung.technology]:
            continue
        retries = min(rung.retries, policy.max_ladder_retries_per_rung)
        attempts.extend(
            (rung.technology, msg.payload_bytes, rung.confirmed, True) for _ in range(retries)
        )
    if not attempts:
        from .errors import NoFeasibleTechnology

        raise NoFeasibleTechnology(f"no ladder rung supports {msg.payload_bytes} B")
    return attempts


def _execute_attempts(
    attempts, ctx, models, ledgers, gen, per_tech, total, events, t_sched
) -> bool:
    """Run attempts in order; returns message delivery. Fragmented sends need
    every fragment through; ladder attempts stop at the first success."""
    ladder_mode = attempts[0][3]
    all_fragments_ok = True
    any_success = False
    for tech, size, confirmed, _stop in attempts:
        profile = models.airtime(tech, size, ctx.scenario)
        ledger = ledgers.get(tech)
        if ledger is not None:
            start = duty_next_allowed(
                ledger, ctx.now_ms, profile.total_on_air_ms, profile.busy_ms
            )
            ledger.record(start, profile.total_on_air_ms, profile.busy_ms)
        else:
            start = ctx.now_ms
        ctx.now_ms = max(ctx.now_ms, start + math.ceil(profile.busy_ms))
        energy = models.packet_energy_uwh(tech, size, ctx.scenario)
        if confirmed:
            energy += models.ack_rx_energy_uwh(tech, ctx.scenario)
        try:
            p = models.pdr(
                tech, size, ctx.scenario, ctx.speed_kmh,
                allow_unsupported_fallback=not ladder_mode and len(attempts) > 1,
            ).value
        except Unsupported:
            p = 0.0
        ok = sample_delivery(gen, p)
        per_tech[tech].add(energy, size, ok)
        total.add(energy, size, ok)
        events.append(
            {
                "t_ms": start,
                "event_type": "attempt",
                "technology": tech.value,
                "payload_bytes": size,
                "confirmed": confirmed,
                "energy_uwh": energy,
                "delivered": ok,
                "scheduled_ms": t_sched,
            }
        )
        if ladder_mode:
            if ok:
                any_success = True
                break
        else:
            all_fragments_ok = all_fragments_ok and ok
    return any_success if ladder_mode else all_fragments_ok


@dataclass(frozen=True)
class PolicyComparison:
    summary_a: SimSummary
    summary_b: SimSummary
    savings_factor: float

    def as_json(self) -> dict:
        return {
            "summary_a": self.summary_a.as_json(),
            "summary_b": self.summary_b.as_json(),
            "savings_factor": self.savings_factor,
        }


def compare_policies(
    w: WorkloadSpec, a: Policy, b: Policy, models: ModelSet, seed: int = 0
) -> PolicyComparison:
    """energy(b)/energy(a) under common random numbers; identical policies
    compare to exactly 1.0."""
    summary_a = run_workload(w, a, models, seed)
    summary_b = run_workload(w, b, models, seed)
    energy_a = summary_a.total.energy_uwh
    energy_b = summary_b.total.energy_uwh
    if energy_a == 0 and energy_b == 0:
        factor = 1.0
    elif energy_a == 0:
        factor = math.inf
    else:
        factor = energy_b / energy_a
    return PolicyComparison(summary_a, summary_b, factor)
