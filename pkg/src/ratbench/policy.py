"""Multi-RAT selection strategies.

Three decision surfaces, one per field conclusion: payload-dependent
technology switching (cheapest feasible technology per message), mobility-
aware exclusion (a PDR floor combined with speed-aware delivery estimates),
and a confirmed-delivery ladder for critical messages that tries cheap
license-exempt uplinks before falling back to the high-PDR cellular path.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum

from .dutycycle import DutyCycleLedger, duty_next_allowed
from .errors import (
    ConfigInvalid,
    NoFeasibleTechnology,
    TechnologyUnavailable,
    Unsupported,
    ValidationError,
)
from .models import ModelSet, scenario_context
from .records import (
    MAX_PAYLOAD_BYTES,
    TECHNOLOGY_ORDER,
    PayloadBucket,
    Scenario,
    Technology,
)


@dataclass(frozen=True)
class MessageSpec:
    """One application message to route."""

    payload_bytes: int
    critical: bool = False
    deadline_ms: int | None = None

    def __post_init__(self) -> None:
        if not 1 <= self.payload_bytes <= 1547:
            raise ValidationError(f"payload {self.payload_bytes} B outside [1, 1547]")


@dataclass
class Context:
    """Transmission environment a policy decides in."""

    scenario: Scenario
    speed_kmh: float | None = None
    lorawan_sf: int | None = None
    nbiot_ce: int | None = None
    duty_ledgers: dict[Technology, DutyCycleLedger] = field(default_factory=dict)
    now_ms: int = 0

    def __post_init__(self) -> None:
        defaults = scenario_context(self.scenario)
        if self.lorawan_sf is None:
            self.lorawan_sf = defaults.lorawan_sf
        if self.nbiot_ce is None:
            self.nbiot_ce = defaults.nbiot_ce
        if not 7 <= self.lorawan_sf <= 12:
            raise ValidationError(f"sf {self.lorawan_sf} outside [7, 12]")
        if self.nbiot_ce not in (0, 1, 2):
            raise ValidationError(f"CE level {self.nbiot_ce} outside {{0, 1, 2}}")
        if self.speed_kmh is not None and self.speed_kmh < 0:
            raise ValidationError("speed_kmh negative")
        for tech in (Technology.LORAWAN, Technology.SIGFOX):
            self.duty_ledgers.setdefault(tech, DutyCycleLedger())


class Objective(str, Enum):
    MIN_ENERGY_PER_DELIVERED_BYTE = "min_energy_per_delivered_byte"
    MIN_ENERGY_PER_BYTE = "min_energy_per_byte"


@dataclass(frozen=True)
class LadderRung:
    technology: Technology
    retries: int = 1
    confirmed: bool = True

    def __post_init__(self) -> None:
        if self.retries < 1:
            raise ValidationError("rung retries must be at least 1")


@dataclass(frozen=True)
class Policy:
    objective: Objective = Objective.MIN_ENERGY_PER_BYTE
    pdr_floor: float = 0.0
    allow_fragmentation: bool = False
    ladder: tuple[LadderRung, ...] = ()
    max_ladder_retries_per_rung: int = 2
    allowed: tuple[Technology, ...] | None = None  # None = all technologies
    name: str = ""

    def __post_init__(self) -> None:
        if not 0.0 <= self.pdr_floor <= 1.0:
            raise ValidationError("pdr_floor outside [0, 1]")
        if self.max_ladder_retries_per_rung < 1:
            raise ValidationError("max_ladder_retries_per_rung must be at least 1")

    def candidate_technologies(self) -> tuple[Technology, ...]:
        if self.allowed is None:
            return TECHNOLOGY_ORDER
        return tuple(t for t in TECHNOLOGY_ORDER if t in self.allowed)


def policy_to_json(policy: Policy) -> dict:
    return {
        "name": policy.name,
        "objective": policy.objective.value,
        "pdr_floor": policy.pdr_floor,
        "allow_fragmentation": policy.allow_fragmentation,
        "max_ladder_retries_per_rung": policy.max_ladder_retries_per_rung,
        "allowed": None if policy.allowed is None else [t.value for t in policy.allowed],
        "ladder": [
            {"technology": r.technology.value, "retries": r.retries, "confirmed": r.confirmed}
            for r in policy.ladder
        ],
    }


def policy_from_json(obj: dict) -> Policy:
    try:
        ladder = tuple(
            LadderRung(
                technology=Technology(r["technology"]),
                retries=int(r.get("retries", 1)),
                confirmed=bool(r.get("confirmed", True)),
            )
            for r in obj.get("ladder", [])
        )
        allowed = obj.get("allowed")
        return Policy(
            objective=Objective(obj.get("objective", Objective.MIN_ENERGY_PER_BYTE.value)),
            pdr_floor=float(obj.get("pdr_floor", 0.0)),
            allow_fragmentation=bool(obj.get("allow_fragmentation", False)),
            ladder=ladder,
            max_ladder_retries_per_rung=int(obj.get("max_ladder_retries_per_rung", 2)),
            allowed=None if allowed is None else tuple(Technology(t) for t in allowed),
            name=str(obj.get("name", "")),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigInvalid(f"bad policy object: {exc}") from exc


def load_policy(path) -> Policy:
    with open(path, "r", encoding="utf-8") as fh:
        return policy_from_json(json.load(fh))


# --- cost estimation --------------------------------------------------------

@dataclass(frozen=True)
class CostEstimate:
    technology: Technology
    energy_uwh: float
    pdr: float
    uwh_per_delivered_byte: float
    fragments: int = 1
    pdr_fallback_from: PayloadBucket | None = None


def expected_cost(
    tech: Technology,
    msg: MessageSpec,
    ctx: Context,
    models: ModelSet,
    allow_fragmentation: bool = False,
) -> CostEstimate:
    """Energy, delivery probability, and uWh per delivered byte for sending the
    message over one technology (fragmented if allowed and required)."""
    sizes = _fragment_sizes(msg.payload_bytes, tech, allow_fragmentation)
    fragmented = len(sizes) > 1
    energy = 0.0
    pdr = 1.0
    fallback = None
    for size in sizes:
        energy += models.packet_energy_uwh(tech, size, ctx.scenario)
        try:
            # a fragment is always carryable; tolerate table holes for it
            est = models.pdr(
                tech, size, ctx.scenario, ctx.speed_kmh,
                allow_unsupported_fallback=fragmented,
            )
        except Unsupported as exc:
            raise TechnologyUnavailable(str(exc)) from exc
        pdr *= est.value
        fallback = fallback or est.fallback_from
    cost = energy / (pdr * msg.payload_bytes) if pdr > 0 else math.inf
    return CostEstimate(
        technology=tech,
        energy_uwh=energy,
        pdr=pdr,
        uwh_per_delivered_byte=cost,
        fragments=len(sizes),
        pdr_fallback_from=fallback,
    )


def _fragment_sizes(payload_bytes: int, tech: Technology, allow_fragmentation: bool) -> list[int]:
    max_bytes = MAX_PAYLOAD_BYTES[tech]
    if payload_bytes <= max_bytes:
        return [payload_bytes]
    if not allow_fragmentation:
        raise Unsupported(tech, payload_bytes, f"maximum is {max_bytes} B")
    n_frag = math.ceil(payload_bytes / max_bytes)
    sizes = [max_bytes] * (n_frag - 1)
    sizes.append(payload_bytes - max_bytes * (n_frag - 1))
    return sizes


def select_rat(
    policy: Policy, msg: MessageSpec, ctx: Context, models: ModelSet
) -> Technology:
    """Cheapest feasible technology under the policy objective; ties go to the
    earlier entry of the fixed order LoRaWAN < Sigfox < NB-IoT."""
    best: tuple[float, Technology] | None = None
    for tech in policy.candidate_technologies():
        try:
            est = expected_cost(tech, msg, ctx, models, policy.allow_fragmentation)
        except (Unsupported, TechnologyUnavailable):
            continue
        if est.pdr < policy.pdr_floor:
            continue
        if policy.objective is Objective.MIN_ENERGY_PER_BYTE:
            score = est.energy_uwh / msg.payload_bytes
        else:
            score = est.uwh_per_delivered_byte
        if best is None or score < best[0]:
            best = (score, tech)
    if best is None:
        raise NoFeasibleTechnology(
            f"no technology can carry {msg.payload_bytes} B at pdr_floor {policy.pdr_floor}"
        )
    return best[1]


# --- transmission plans ------------------------------------------------------

@dataclass(frozen=True)
class TxStep:
    technology: Technology
    payload_bytes: int
    confirmed: bool
    planned_start_ms: int = 0


@dataclass(frozen=True)
class TxPlan:
    steps: tuple[TxStep, ...]
    expected_energy_uwh: float
    expected_delivery_probability: float
    total_duration_ms: int = 0
    notes: tuple[str, ...] = ()


def fragmentation_plan(
    payload_bytes: int,
    tech: Technology,
    ctx: Context | None = None,
    models: ModelSet | None = None,
) -> TxPlan:
    """Split a payload into maximum-size fragments; with a context and models,
    plan timing includes the duty-cycle wait before each fragment."""
    sizes = _fragment_sizes(payload_bytes, tech, allow_fragmentation=True)
    if ctx is None or models is None:
        steps = tuple(TxStep(tech, s, confirmed=False) for s in sizes)
        return TxPlan(steps, 0.0, 0.0, 0, ("untimed",))

    ledger = _scratch_ledger(ctx, tech)
    t = ctx.now_ms
    steps = []
    energy = 0.0
    pdr = 1.0
    notes: list[str] = []
    fragmented = len(sizes) > 1
    for size in sizes:
        profile = models.airtime(tech, size, ctx.scenario)
        start = _next_start(ledger, t, profile)
        steps.append(TxStep(tech, size, confirmed=False, planned_start_ms=start))
        t = start + math.ceil(profile.busy_ms)
        energy += models.packet_energy_uwh(tech, size, ctx.scenario)
        est = models.pdr(
            tech, size, ctx.scenario, ctx.speed_kmh, allow_unsupported_fallback=fragmented
        )
        pdr *= est.value
        if est.fallback_from is not None:
            notes.append(f"pdr fallback from bucket {est.fallback_from.value}")
    return TxPlan(
        steps=tuple(steps),
        expected_energy_uwh=energy,
        expected_delivery_probability=pdr,
        total_duration_ms=t - ctx.now_ms,
        notes=tuple(dict.fromkeys(notes)),
    )


def confirmed_ladder_plan(
    policy: Policy, msg: MessageSpec, ctx: Context, models: ModelSet
) -> TxPlan:
    """Walk the policy ladder for a critical message.

    Expected energy is the closed-form expectation over the attempt tree:
    each rung is reached with the probability that all earlier rungs failed
    every retry, and contributes its per-attempt energy times the expected
    number of attempts (geometric, capped at the rung's retries).
    """
    if not msg.critical:
        raise ConfigInvalid("confirmed_ladder_plan requires a critical message")
    if not policy.ladder:
        raise NoFeasibleTechnology("policy ladder is empty")

    steps: list[TxStep] = []
    notes: list[str] = []
    expected_energy = 0.0
    reach_probability = 1.0
    scratch = {t: _scratch_ledger(ctx, t) for t in set(r.technology for r in policy.ladder)}
    t = ctx.now_ms
    usable_rungs = 0
    for rung in policy.ladder:
        if msg.payload_bytes > MAX_PAYLOAD_BYTES[rung.technology]:
            notes.append(f"rung {rung.technology.value} skipped: payload too large")
            continue
        try:
            est = models.pdr(rung.technology, msg.payload_bytes, ctx.scenario, ctx.speed_kmh)
        except Unsupported:
            notes.append(f"rung {rung.technology.value} skipped: no delivery data")
            continue
        usable_rungs += 1
        retries = min(rung.retries, policy.max_ladder_retries_per_rung)
        p = est.value
        if est.fallback_from is not None:
            notes.append(f"pdr fallback from bucket {est.fallback_from.value}")
        attempt_energy = models.packet_energy_uwh(
            rung.technology, msg.payload_bytes, ctx.scenario
        )
        if rung.confirmed:
            attempt_energy += models.ack_rx_energy_uwh(rung.technology, ctx.scenario)
        q = 1.0 - p
        expected_attempts = retries if p == 0.0 else (1.0 - q**retries) / p
        expected_energy += reach_probability * attempt_energy * expected_attempts
        reach_probability *= q**retries

        profile = models.airtime(rung.technology, msg.payload_bytes, ctx.scenario)
        for _ in range(retries):
            start = _next_start(scratch[rung.technology], t, profile)
            steps.append(
                TxStep(rung.technology, msg.payload_bytes, rung.confirmed, start)
            )
            t = start + math.ceil(profile.busy_ms)
    if usable_rungs == 0:
        raise NoFeasibleTechnology(f"no ladder rung supports {msg.payload_bytes} B")

    plan = TxPlan(
        steps=tuple(steps),
        expected_energy_uwh=expected_energy,
        expected_delivery_probability=1.0 - reach_probability,
        total_duration_ms=t - ctx.now_ms,
        notes=tuple(dict.fromkeys(notes)),
    )
    if msg.deadline_ms is not None and plan.total_duration_ms > msg.deadline_ms:
        plan = replace(
            plan, notes=plan.notes + (f"worst-case duration exceeds deadline {msg.deadline_ms} ms",)
        )
    return plan


def _scratch_ledger(ctx: Context, tech: Technology) -> DutyCycleLedger | None:
    if tech is Technology.NBIOT:
        return None
    base = ctx.duty_ledgers.get(tech)
    if base is None:
        return DutyCycleLedger()
    return DutyCycleLedger(band_limit=base.band_limit, history=list(base.history))


def _next_start(ledger: DutyCycleLedger | None, now_ms: int, profile) -> int:
    if ledger is None:
        return now_ms
    start = duty_next_allowed(
        ledger, now_ms, profile.total_on_air_ms, profile.busy_ms
    )
    ledger.record(start, profile.total_on_air_ms, profile.busy_ms)
    return start
