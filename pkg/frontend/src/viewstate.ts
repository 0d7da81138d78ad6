// The full UI state, losslessly round-trippable through the URL query string
// so every view is a shareable link.

import type { ScenarioKey, TechnologyName } from "./types.js";
import { SCENARIOS, TECHNOLOGIES } from "./types.js";

export type ChartKind = "scatter" | "box" | "speed-line" | "map" | "table";
export const CHART_KINDS: ChartKind[] = ["scatter", "box", "speed-line", "map", "table"];

export interface Filters {
  tech?: TechnologyName;
  minPayload?: number;
  maxPayload?: number;
  minSpeed?: number;
  maxSpeed?: number;
  fromMs?: number;
  toMs?: number;
  delivered?: boolean;
}

export type PolicyChoice = "multi-rat" | "nbiot-only" | "sigfox-only" | "lorawan-first-ladder";
export const POLICY_CHOICES: PolicyChoice[] = [
  "multi-rat",
  "nbiot-only",
  "sigfox-only",
  "lorawan-first-ladder",
];

export interface WhatifForm {
  payloadBytes: number;
  ratePerHour: number;
  durationH: number;
  scenario: ScenarioKey;
  speedKmh?: number;
  critical: boolean;
  policyA: PolicyChoice;
  policyB: PolicyChoice;
  seed: number;
}

export interface ViewState {
  chart: ChartKind;
  filters: Filters;
  xField: string;
  yField: string;
  whatif: WhatifForm;
}

export function defaultViewState(): ViewState {
  return {
    chart: "table",
    filters: {},
    xField: "payload_bytes",
    yField: "energy_uwh",
    whatif: {
      payloadBytes: 8,
      ratePerHour: 1,
      durationH: 24,
      scenario: "static-indoor",
      critical: false,
      policyA: "multi-rat",
      policyB: "nbiot-only",
      seed: 17,
    },
  };
}

/** Client-side filter validation, mirroring the service's range rules. */
export function validateFilters(filters: Filters): string[] {
  const errors: string[] = [];
  const ranges: [string, number | undefined, number | undefined][] = [
    ["payload", filters.minPayload, filters.maxPayload],
    ["speed", filters.minSpeed, filters.maxSpeed],
    ["time", filters.fromMs, filters.toMs],
  ];
  for (const [what, lo, hi] of ranges) {
    if (lo !== undefined && hi !== undefined && lo > hi) {
      errors.push(`${what} range is inverted (${lo} > ${hi})`);
    }
  }
  if (filters.minPayload !== undefined && filters.minPayload < 1) {
    errors.push("payload must be at least 1 byte");
  }
  if (filters.maxPayload !== undefined && filters.maxPayload > 1547) {
    errors.push("payload cannot exceed 1547 bytes");
  }
  for (const [name, value] of [
    ["minSpeed", filters.minSpeed],
    ["maxSpeed", filters.maxSpeed],
  ] as const) {
    if (value !== undefined && value < 0) errors.push(`${name} cannot be negative`);
  }
  return errors;
}

const numberKeys = [
  ["minPayload", "min_payload"],
  ["maxPayload", "max_payload"],
  ["minSpeed", "min_speed"],
  ["maxSpeed", "max_speed"],
  ["fromMs", "from"],
  ["toMs", "to"],
] as const;

export function encodeViewState(state: ViewState): string {
  const params = new URLSearchParams();
  params.set("chart", state.chart);
  if (state.filters.tech) params.set("tech", state.filters.tech);
  for (const [key, param] of numberKeys) {
    const value = state.filters[key];
    if (value !== undefined) params.set(param, String(value));
  }
  if (state.filters.delivered !== undefined) {
    params.set("delivered", state.filters.delivered ? "true" : "false");
  }
  params.set("x", state.xField);
  params.set("y", state.yField);
  const w = state.whatif;
  params.set("w_payload", String(w.payloadBytes));
  params.set("w_rate", String(w.ratePerHour));
  params.set("w_hours", String(w.durationH));
  params.set("w_scenario", w.scenario);
  if (w.speedKmh !== undefined) params.set("w_speed", String(w.speedKmh));
  params.set("w_critical", w.critical ? "true" : "false");
  params.set("w_policy_a", w.policyA);
  params.set("w_policy_b", w.policyB);
  params.set("w_seed", String(w.seed));
  return params.toString();
}

function asNumber(text: string | null): number | undefined {
  if (text === null || text === "") return undefined;
  const value = Number(text);
  return Number.isFinite(value) ? value : undefined;
}

function oneOf<T extends string>(value: string | null, allowed: readonly T[], fallback: T): T {
  return allowed.includes(value as T) ? (value as T) : fallback;
}

export function decodeViewState(query: string): ViewState {
  const params = new URLSearchParams(query);
  const base = defaultViewState();
  const filters: Filters = {};
  const tech = params.get("tech");
  if (tech && TECHNOLOGIES.includes(tech as TechnologyName)) {
    filters.tech = tech as TechnologyName;
  }
  for (const [key, param] of numberKeys) {
    const value = asNumber(params.get(param));
    if (value !== undefined) filters[key] = value;
  }
  const delivered = params.get("delivered");
  if (delivered === "true") filters.delivered = true;
  else if (delivered === "false") filters.delivered = false;

  const whatif = { ...base.whatif };
  whatif.payloadBytes = asNumber(params.get("w_payload")) ?? whatif.payloadBytes;
  whatif.ratePerHour = asNumber(params.get("w_rate")) ?? whatif.ratePerHour;
  whatif.durationH = asNumber(params.get("w_hours")) ?? whatif.durationH;
  whatif.scenario = oneOf(params.get("w_scenario"), SCENARIOS, whatif.scenario);
  const speed = asNumber(params.get("w_speed"));
  if (speed !== undefined) whatif.speedKmh = speed;
  whatif.critical = params.get("w_critical") === "true";
  whatif.policyA = oneOf(params.get("w_policy_a"), POLICY_CHOICES, whatif.policyA);
  whatif.policyB = oneOf(params.get("w_policy_b"), POLICY_CHOICES, whatif.policyB);
  whatif.seed = asNumber(params.get("w_seed")) ?? whatif.seed;

  return {
    chart: oneOf(params.get("chart"), CHART_KINDS, base.chart),
    filters,
    xField: params.get("x") ?? base.xField,
    yField: params.get("y") ?? base.yField,
    whatif,
  };
}
