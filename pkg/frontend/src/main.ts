// Browser entry point: wires the URL-backed view state to the controls, the
// explorer, and the what-if panel. All data math happens in the service.

import { ApiClient } from "./api.js";
import { exploreView } from "./explore.js";
import { TECHNOLOGIES } from "./types.js";
import {
  CHART_KINDS,
  POLICY_CHOICES,
  decodeViewState,
  defaultViewState,
  encodeViewState,
  validateFilters,
  type ViewState,
} from "./viewstate.js";
import { WhatifRunner, renderWhatifPanel } from "./whatif.js";

declare global {
  interface Window {
    RATBENCH_API?: string;
  }
}

const EXPORT_FIELDS = [
  "timestamp_tx", "payload_bytes", "tx_power_dbm", "energy_uwh", "delivered",
  "rssi_dbm", "snr_db", "speed_kmh",
];

function baseUrl(): string {
  return window.RATBENCH_API ?? "http://127.0.0.1:8080";
}

function option(value: string, selected: boolean): string {
  return `<option value="${value}"${selected ? " selected" : ""}>${value}</option>`;
}

function controlsHtml(state: ViewState): string {
  const f = state.filters;
  const w = state.whatif;
  const num = (name: string, value: number | undefined, placeholder: string) =>
    `<input type="number" name="${name}" value="${value ?? ""}" placeholder="${placeholder}">`;
  return `
  <fieldset class="explore-controls">
    <legend>explore</legend>
    <select name="chart">${CHART_KINDS.map((k) => option(k, k === state.chart)).join("")}</select>
    <select name="tech"><option value="">all technologies</option>
      ${TECHNOLOGIES.map((t) => option(t, t === f.tech)).join("")}</select>
    ${num("min_payload", f.minPayload, "min B")} ${num("max_payload", f.maxPayload, "max B")}
    ${num("min_speed", f.minSpeed, "min km/h")} ${num("max_speed", f.maxSpeed, "max km/h")}
    <select name="x">${EXPORT_FIELDS.map((k) => option(k, k === state.xField)).join("")}</select>
    <select name="y">${EXPORT_FIELDS.map((k) => option(k, k === state.yField)).join("")}</select>
    <button id="refresh">refresh</button>
  </fieldset>
  <fieldset class="whatif-controls">
    <legend>what-if</legend>
    <label>payload <input type="range" name="w_payload" min="1" max="1547" value="${w.payloadBytes}">
      <span id="w_payload_value">${w.payloadBytes}</span> B</label>
    <label>rate <input type="number" name="w_rate" value="${w.ratePerHour}" step="0.5"> msg/h</label>
    <label>duration <input type="number" name="w_hours" value="${w.durationH}"> h</label>
    <select name="w_scenario">${["static-indoor", "static-outdoor", "mobile-outdoor"]
      .map((s) => option(s, s === w.scenario)).join("")}</select>
    <label>speed ${num("w_speed", w.speedKmh, "km/h")}</label>
    <label><input type="checkbox" name="w_critical"${w.critical ? " checked" : ""}> critical</label>
    <select name="w_policy_a">${POLICY_CHOICES.map((p) => option(p, p === w.policyA)).join("")}</select>
    <span>vs</span>
    <select name="w_policy_b">${POLICY_CHOICES.map((p) => option(p, p === w.policyB)).join("")}</select>
    <button id="run-whatif">run</button>
  </fieldset>`;
}

function readState(root: HTMLElement, previous: ViewState): ViewState {
  const get = (name: string) =>
    root.querySelector<HTMLInputElement | HTMLSelectElement>(`[name="${name}"]`);
  const numberOf = (name: string) => {
    const raw = get(name)?.value ?? "";
    if (raw === "") return undefined;
    const value = Number(raw);
    return Number.isFinite(value) ? value : undefined;
  };
  const state = structuredClone(previous);
  state.chart = (get("chart")?.value as ViewState["chart"]) ?? previous.chart;
  const tech = get("tech")?.value ?? "";
  state.filters = {
    ...(tech ? { tech: tech as ViewState["filters"]["tech"] } : {}),
    minPayload: numberOf("min_payload"),
    maxPayload: numberOf("max_payload"),
    minSpeed: numberOf("min_speed"),
    maxSpeed: numberOf("max_speed"),
  };
  state.xField = get("x")?.value ?? previous.xField;
  state.yField = get("y")?.value ?? previous.yField;
  state.whatif.payloadBytes = numberOf("w_payload") ?? previous.whatif.payloadBytes;
  state.whatif.ratePerHour = numberOf("w_rate") ?? previous.whatif.ratePerHour;
  state.whatif.durationH = numberOf("w_hours") ?? previous.whatif.durationH;
  state.whatif.scenario =
    (get("w_scenario")?.value as ViewState["whatif"]["scenario"]) ?? previous.whatif.scenario;
  state.whatif.speedKmh = numberOf("w_speed");
  state.whatif.critical = (get("w_critical") as HTMLInputElement | null)?.checked ?? false;
  state.whatif.policyA =
    (get("w_policy_a")?.value as ViewState["whatif"]["policyA"]) ?? previous.whatif.policyA;
  state.whatif.policyB =
    (get("w_policy_b")?.value as ViewState["whatif"]["policyB"]) ?? previous.whatif.policyB;
  return state;
}

export function boot(): void {
  const controls = document.getElementById("controls");
  const chartHost = document.getElementById("chart");
  const whatifHost = document.getElementById("whatif");
  if (!controls || !chartHost || !whatifHost) return;

  const client = new ApiClient(baseUrl());
  const runner = new WhatifRunner(client);
  let state = location.search.length > 1 ? decodeViewState(location.search.slice(1)) : defaultViewState();

  const syncUrl = () => history.replaceState(null, "", `?${encodeViewState(state)}`);

  const refresh = async () => {
    syncUrl();
    const outcome = await exploreView(client, state);
    chartHost.innerHTML = outcome.html;
  };

  const runWhatif = async () => {
    syncUrl();
    const errors = validateFilters(state.filters);
    if (errors.length > 0) return;
    whatifHost.innerHTML = `<div class="banner pending">running comparison...</div>`;
    const panel = await runner.run(state.whatif);
    if (panel !== null) {
      whatifHost.innerHTML = renderWhatifPanel(panel, state.whatif.policyA, state.whatif.policyB);
    }
  };

  controls.innerHTML = controlsHtml(state);
  controls.addEventListener("change", () => {
    state = readState(controls, state);
    const payloadLabel = document.getElementById("w_payload_value");
    if (payloadLabel) payloadLabel.textContent = String(state.whatif.payloadBytes);
    syncUrl();
  });
  controls.querySelector("#refresh")?.addEventListener("click", (event) => {
    event.preventDefault();
    void refresh();
  });
  controls.querySelector("#run-whatif")?.addEventListener("click", (event) => {
    event.preventDefault();
    void runWhatif();
  });

  void refresh();
  void runWhatif();
}

if (typeof document !== "undefined" && document.readyState !== "loading") {
  boot();
} else if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", boot);
}
