"""Model facade: one object bundling airtime configuration, fitted energy
profiles per scenario, and the delivery-probability tables.

This is what the simulator, the policy layer, and the what-if service consume.
A ModelSet is immutable after construction and safe to share.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from importlib import resources

from .airtime import (
    AirtimeProfile,
    LoRaParams,
    NbiotTimingConfig,
    SigfoxParams,
    lora_time_on_air,
    nbiot_transaction_profile,
    sigfox_airtime,
)
from .errors import ConfigInvalid, ParseError
from .fitting import (
    DEFAULT_BASE_POWERS,
    DEFAULT_TX_POWER_DBM,
    FittedTechEnergy,
    fit_power_profiles,
)
from .energy import PowerProfile
from .pdr import PdrEstimate, PdrTable, SpeedPdrCurve, effective_pdr, pdr_at_speed
from .records import (
    AggregateCell,
    PayloadBucket,
    Scenario,
    Sentinel,
    Technology,
    cell_from_json,
)


@dataclass(frozen=True)
class ScenarioContext:
    """Per-scenario radio context assumed by the models: LoRaWAN spreading
    factor (ADR outcome) and NB-IoT coverage-enhancement level."""

    lorawan_sf: int = 7
    nbiot_ce: int = 0


#: Coverage assumptions per scenario; indoor operation costs more link budget.
DEFAULT_CONTEXTS: dict[str, ScenarioContext] = {
    "static-indoor": ScenarioContext(lorawan_sf=9, nbiot_ce=1),
    "static-outdoor": ScenarioContext(lorawan_sf=7, nbiot_ce=0),
    "mobile-outdoor": ScenarioContext(lorawan_sf=7, nbiot_ce=0),
}


def scenario_context(scenario: Scenario) -> ScenarioContext:
    return DEFAULT_CONTEXTS.get(scenario.key, ScenarioContext())


@dataclass(frozen=True)
class AirtimeConfig:
    """Technology timing parameters shared by fitting and simulation."""

    lora: LoRaParams = LoRaParams(sf=7)
    sigfox: SigfoxParams = SigfoxParams()
    nbiot: NbiotTimingConfig = NbiotTimingConfig()

    def profile_for(
        self,
        tech: Technology,
        payload_bytes: int,
        *,
        lorawan_sf: int | None = None,
        nbiot_ce: int = 0,
        rrc_resume: bool = True,
    ) -> AirtimeProfile:
        if tech is Technology.LORAWAN:
            params = self.lora if lorawan_sf is None else replace(self.lora, sf=lorawan_sf)
            if params.symbol_time_ms > 16.0 and not params.low_data_rate_optimize:
                params = replace(params, low_data_rate_optimize=True)
            return lora_time_on_air(params, payload_bytes)
        if tech is Technology.SIGFOX:
            return sigfox_airtime(self.sigfox, payload_bytes)
        return nbiot_transaction_profile(
            self.nbiot, payload_bytes, ce_level=nbiot_ce, rrc_resume=rrc_resume
        )


@dataclass(frozen=True)
class ModelSet:
    """Everything needed to price and deliver a packet in a given scenario."""

    airtime_config: AirtimeConfig
    energy_by_scenario: dict[str, dict[Technology, FittedTechEnergy]]
    pdr_table: PdrTable
    speed_curve: SpeedPdrCurve
    metadata: dict = field(default_factory=dict)

    # -- airtime ----------------------------------------------------------
    def airtime(
        self, tech: Technology, payload_bytes: int, scenario: Scenario,
        *, rrc_resume: bool = True,
    ) -> AirtimeProfile:
        ctx = scenario_context(scenario)
        return self.airtime_config.profile_for(
            tech,
            payload_bytes,
            lorawan_sf=ctx.lorawan_sf,
            nbiot_ce=ctx.nbiot_ce,
            rrc_resume=rrc_resume,
        )

    # -- energy -----------------------------------------------------------
    def energy_model(self, tech: Technology, scenario: Scenario) -> FittedTechEnergy:
        try:
            return self.energy_by_scenario[scenario.key][tech]
        except KeyError:
            raise ConfigInvalid(
                f"no fitted energy model for ({tech}, {scenario.key})"
            ) from None

    def packet_energy_uwh(
        self, tech: Technology, payload_bytes: int, scenario: Scenario
    ) -> float:
        model = self.energy_model(tech, scenario)
        ctx = scenario_context(scenario)

        def airtime_for(t: Technology, n: int) -> AirtimeProfile:
            return self.airtime_config.profile_for(
                t, n, lorawan_sf=ctx.lorawan_sf, nbiot_ce=ctx.nbiot_ce
            )

        return model.packet_energy_uwh(payload_bytes, airtime_for)

    def ack_rx_energy_uwh(self, tech: Technology, scenario: Scenario) -> float:
        """Energy to listen for a confirmation downlink after one uplink."""
        model = self.energy_model(tech, scenario)
        listen_ms = ACK_LISTEN_MS[tech]
        return model.profile.p_rx_mw * listen_ms / 3600.0

    # -- delivery ---------------------------------------------------------
    def pdr(
        self,
        tech: Technology,
        payload_bytes: int,
        scenario: Scenario,
        speed_kmh: float | None = None,
        allow_unsupported_fallback: bool = False,
    ) -> PdrEstimate:
        return effective_pdr(
            self.pdr_table,
            self.speed_curve,
            tech,
            payload_bytes,
            scenario,
            speed_kmh,
            allow_unsupported_fallback,
        )

    def pdr_speed_anchored(self, tech: Technology, speed_kmh: float) -> float:
        return pdr_at_speed(self.speed_curve, tech, speed_kmh)

    def tx_power_dbm(self, tech: Technology, scenario: Scenario) -> int:
        try:
            return self.energy_model(tech, scenario).tx_power_dbm
        except ConfigInvalid:
            return DEFAULT_TX_POWER_DBM[tech]


#: Downlink listen window priced for confirmed traffic (ms at p_rx). The
#: long Sigfox window reflects its slow downlink procedure; NB-IoT feedback
#: rides inside the transaction it already models.
ACK_LISTEN_MS: dict[Technology, float] = {
    Technology.LORAWAN: 1000.0,
    Technology.SIGFOX: 25_000.0,
    Technology.NBIOT: 0.0,
}


# --- building -------------------------------------------------------------

def load_table_cells(path=None) -> list[AggregateCell]:
    """Table cells from a JSON file, or the shipped table when path is None."""
    if path is None:
        with resources.files("ratbench.data").joinpath("table1.json").open(
            "r", encoding="utf-8"
        ) as fh:
            doc = json.load(fh)
    else:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    try:
        return [cell_from_json(obj) for obj in doc["cells"]]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"bad targets file: {exc}") from exc


def fit_model(
    cells: list[AggregateCell],
    airtime_config: AirtimeConfig | None = None,
    pdr_table: PdrTable | None = None,
    speed_curve: SpeedPdrCurve | None = None,
) -> ModelSet:
    """Fit energy profiles per scenario from table cells and assemble a ModelSet."""
    airtime_config = airtime_config or AirtimeConfig()
    by_scenario: dict[str, list[AggregateCell]] = {}
    for cell in cells:
        by_scenario.setdefault(cell.scenario.key, []).append(cell)

    energy_by_scenario: dict[str, dict[Technology, FittedTechEnergy]] = {}
    for key, scenario_cells in by_scenario.items():
        ctx = DEFAULT_CONTEXTS.get(key, ScenarioContext())

        def airtime_for(tech: Technology, n: int) -> AirtimeProfile:
            return airtime_config.profile_for(
                tech, n, lorawan_sf=ctx.lorawan_sf, nbiot_ce=ctx.nbiot_ce
            )

        energy_by_scenario[key] = fit_power_profiles(scenario_cells, airtime_for)

    if pdr_table is None:
        has_pdr = any(not isinstance(c.pdr_pct, Sentinel) for c in cells)
        pdr_table = PdrTable.from_aggregate_cells(cells) if has_pdr else PdrTable.shipped()
    return ModelSet(
        airtime_config=airtime_config,
        energy_by_scenario=energy_by_scenario,
        pdr_table=pdr_table,
        speed_curve=speed_curve or SpeedPdrCurve.shipped(),
        metadata={
            "fitted_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "n_target_cells": len(cells),
        },
    )


def builtin_model() -> ModelSet:
    """ModelSet fitted from the shipped comparison table."""
    return fit_model(load_table_cells())


# --- model file serde -------------------------------------------------------

def _profile_to_json(profile: PowerProfile) -> dict:
    return {
        "p_tx_mw": {str(k): v for k, v in profile.p_tx_mw.items()},
        "p_rx_mw": profile.p_rx_mw,
        "p_idle_mw": profile.p_idle_mw,
        "p_sleep_mw": profile.p_sleep_mw,
        "fixed_overhead_uwh": profile.fixed_overhead_uwh,
    }


def _profile_from_json(obj: dict) -> PowerProfile:
    return PowerProfile(
        p_tx_mw={int(k): float(v) for k, v in obj["p_tx_mw"].items()},
        p_rx_mw=float(obj["p_rx_mw"]),
        p_idle_mw=float(obj["p_idle_mw"]),
        p_sleep_mw=float(obj["p_sleep_mw"]),
        fixed_overhead_uwh=float(obj["fixed_overhead_uwh"]),
    )


def save_model(model: ModelSet, path) -> None:
    doc = {
        "version": 1,
        "metadata": model.metadata,
        "airtime": {
            "lora": {
                "sf": model.airtime_config.lora.sf,
                "bandwidth_hz": model.airtime_config.lora.bandwidth_hz,
                "coding_rate_index": model.airtime_config.lora.coding_rate_index,
                "preamble_symbols": model.airtime_config.lora.preamble_symbols,
            },
            "sigfox": {
                "bitrate_bps": model.airtime_config.sigfox.bitrate_bps,
                "repetitions": model.airtime_config.sigfox.repetitions,
                "frame_overhead_bytes": model.airtime_config.sigfox.frame_overhead_bytes,
                "interframe_gap_ms": model.airtime_config.sigfox.interframe_gap_ms,
            },
            "nbiot": {
                "attach_ms": model.airtime_config.nbiot.attach_ms,
                "tx_ms_per_128b": model.airtime_config.nbiot.tx_ms_per_128b,
                "inactivity_timer_ms": model.airtime_config.nbiot.inactivity_timer_ms,
                "edrx_cycle_ms": model.airtime_config.nbiot.edrx_cycle_ms,
                "psm_entry_ms": model.airtime_config.nbiot.psm_entry_ms,
                "ce_multiplier": list(model.airtime_config.nbiot.ce_multiplier),
            },
        },
        "scenarios": {
            key: {
                tech.value: {
                    "profile": _profile_to_json(fitted.profile),
                    "tx_power_dbm": fitted.tx_power_dbm,
                    "eb_anchor": {b.value: v for b, v in fitted.eb_anchor.items()},
                    "model_eb": {b.value: v for b, v in fitted.model_eb.items()},
                    "residual_rms_log": fitted.residual_rms_log,
                }
                for tech, fitted in by_tech.items()
            }
            for key, by_tech in model.energy_by_scenario.items()
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(
    path,
    pdr_table: PdrTable | None = None,
    speed_curve: SpeedPdrCurve | None = None,
) -> ModelSet:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    try:
        at = doc["airtime"]
        airtime_config = AirtimeConfig(
            lora=LoRaParams(
                sf=at["lora"]["sf"],
                bandwidth_hz=at["lora"]["bandwidth_hz"],
                coding_rate_index=at["lora"]["coding_rate_index"],
                preamble_symbols=at["lora"]["preamble_symbols"],
            ),
            sigfox=SigfoxParams(
                bitrate_bps=at["sigfox"]["bitrate_bps"],
                repetitions=at["sigfox"]["repetitions"],
                frame_overhead_bytes=at["sigfox"]["frame_overhead_bytes"],
                interframe_gap_ms=at["sigfox"]["interframe_gap_ms"],
            ),
            nbiot=NbiotTimingConfig(
                attach_ms=at["nbiot"]["attach_ms"],
                tx_ms_per_128b=at["nbiot"]["tx_ms_per_128b"],
                inactivity_timer_ms=at["nbiot"]["inactivity_timer_ms"],
                edrx_cycle_ms=at["nbiot"]["edrx_cycle_ms"],
                psm_entry_ms=at["nbiot"]["psm_entry_ms"],
                ce_multiplier=tuple(at["nbiot"]["ce_multiplier"]),
            ),
        )
        energy_by_scenario: dict[str, dict[Technology, FittedTechEnergy]] = {}
        for key, by_tech in doc["scenarios"].items():
            Scenario.parse(key)
            energy_by_scenario[key] = {
                Technology(tech_name): FittedTechEnergy(
                    technology=Technology(tech_name),
                    profile=_profile_from_json(block["profile"]),
                    tx_power_dbm=int(block["tx_power_dbm"]),
                    eb_anchor={
                        PayloadBucket(b): float(v) for b, v in block["eb_anchor"].items()
                    },
                    model_eb={
                        PayloadBucket(b): float(v) for b, v in block["model_eb"].items()
                    },
                    residual_rms_log=float(block["residual_rms_log"]),
                )
                for tech_name, block in by_tech.items()
            }
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad model file {path}: {exc}") from exc

    return ModelSet(
        airtime_config=airtime_config,
        energy_by_scenario=energy_by_scenario,
        pdr_table=pdr_table or PdrTable.shipped(),
        speed_curve=speed_curve or SpeedPdrCurve.shipped(),
        metadata=doc.get("metadata", {}),
    )
