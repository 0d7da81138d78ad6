// What-if panel: translate the form into the service's comparison request,
// run it (at most one request in flight), and shape the response for display.

import { ApiClient, ApiError, OfflineError } from "./api.js";
import type { SimSummaryDto, WhatifResponseDto } from "./types.js";
import type { PolicyChoice, WhatifForm } from "./viewstate.js";

interface PolicyDto {
  name: string;
  objective: string;
  allowed?: string[];
  ladder?: { technology: string; retries: number; confirmed: boolean }[];
}

export function policyFromChoice(choice: PolicyChoice): PolicyDto {
  switch (choice) {
    case "multi-rat":
      return { name: "multi-rat", objective: "min_energy_per_byte" };
    case "nbiot-only":
      return { name: "nbiot-only", objective: "min_energy_per_byte", allowed: ["NBIoT"] };
    case "sigfox-only":
      return { name: "sigfox-only", objective: "min_energy_per_byte", allowed: ["Sigfox"] };
    case "lorawan-first-ladder":
      return {
        name: "lorawan-first-ladder",
        objective: "min_energy_per_delivered_byte",
        ladder: [
          { technology: "LoRaWAN", retries: 2, confirmed: true },
          { technology: "NBIoT", retries: 1, confirmed: true },
        ],
      };
  }
}

export function buildWhatifRequest(form: WhatifForm): unknown {
  return {
    workload: {
      duration_h: form.durationH,
      context: {
        scenario: form.scenario,
        ...(form.speedKmh !== undefined ? { speed_kmh: form.speedKmh } : {}),
      },
      messages: [
        {
          payload_bytes: form.payloadBytes,
          rate_per_hour: form.ratePerHour,
          critical: form.critical,
          weight: 1.0,
        },
      ],
    },
    policy_a: policyFromChoice(form.policyA),
    policy_b: policyFromChoice(form.policyB),
    seed: form.seed,
  };
}

export interface PolicyOutcome {
  energyUwh: number;
  ebUwhPerByte: number | null;
  messages: number;
  messagesDelivered: number;
  notes: string[];
}

export type WhatifPanel =
  | { kind: "result"; a: PolicyOutcome; b: PolicyOutcome; savingsFactor: number }
  | { kind: "infeasible"; code: string; message: string }
  | { kind: "error"; code: string; message: string }
  | { kind: "offline" };

function outcome(summary: SimSummaryDto): PolicyOutcome {
  return {
    energyUwh: summary.total.energy_uwh,
    ebUwhPerByte: summary.total.eb_uwh_per_byte,
    messages: summary.n_messages,
    messagesDelivered: summary.n_messages_delivered,
    notes: summary.notes,
  };
}

export function panelFromResponse(response: WhatifResponseDto): WhatifPanel {
  return {
    kind: "result",
    a: outcome(response.summary_a),
    b: outcome(response.summary_b),
    savingsFactor: response.savings_factor,
  };
}

/** Runs what-if comparisons with at most one request in flight; a new
 * submission aborts the pending one. */
export class WhatifRunner {
  private controller: AbortController | null = null;

  constructor(private readonly client: ApiClient) {}

  async run(form: WhatifForm): Promise<WhatifPanel | null> {
    this.controller?.abort();
    const controller = new AbortController();
    this.controller = controller;
    try {
      const response = await this.client.whatif(buildWhatifRequest(form), controller.signal);
      return panelFromResponse(response);
    } catch (err) {
      if ((err as Error | null)?.name === "AbortError") return null; // superseded
      if (err instanceof OfflineError) return { kind: "offline" };
      if (err instanceof ApiError) {
        if (err.code === "no_feasible_technology") {
          return { kind: "infeasible", code: err.code, message: err.message };
        }
        return { kind: "error", code: err.code, message: err.message };
      }
      throw err;
    } finally {
      if (this.controller === controller) this.controller = null;
    }
  }
}

function fmtNumber(value: number | null): string {
  return value === null ? "-" : String(value);
}

/** HTML for the comparison panel; numbers are service values verbatim. */
export function renderWhatifPanel(panel: WhatifPanel, aName: string, bName: string): string {
  if (panel.kind === "offline") {
    return `<div class="banner offline">service unreachable</div>`;
  }
  if (panel.kind === "infeasible") {
    return (
      `<div class="banner infeasible" data-code="${panel.code}">` +
      `no feasible technology for this workload: <strong>${panel.message}</strong></div>`
    );
  }
  if (panel.kind === "error") {
    return `<div class="banner error" data-code="${panel.code}">${panel.code}: ${panel.message}</div>`;
  }
  const row = (label: string, a: string, b: string) =>
    `<tr><th>${label}</th><td>${a}</td><td>${b}</td></tr>`;
  return (
    `<div class="whatif-result" data-savings-factor="${panel.savingsFactor}">` +
    `<p class="headline">policy <strong>${bName}</strong> uses ` +
    `<span class="factor">${panel.savingsFactor}</span>x the energy of <strong>${aName}</strong></p>` +
    `<table><thead><tr><th></th><th>${aName}</th><th>${bName}</th></tr></thead><tbody>` +
    row("energy (uWh)", String(panel.a.energyUwh), String(panel.b.energyUwh)) +
    row("energy per byte (uWh/B)", fmtNumber(panel.a.ebUwhPerByte), fmtNumber(panel.b.ebUwhPerByte)) +
    row(
      "messages delivered",
      `${panel.a.messagesDelivered}/${panel.a.messages}`,
      `${panel.b.messagesDelivered}/${panel.b.messages}`,
    ) +
    `</tbody></table></div>`
  );
}
