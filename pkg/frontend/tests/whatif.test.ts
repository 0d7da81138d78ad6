import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import type { WhatifResponseDto } from "../src/types.js";
import { defaultViewState } from "../src/viewstate.js";
import {
  WhatifRunner,
  buildWhatifRequest,
  panelFromResponse,
  policyFromChoice,
  renderWhatifPanel,
} from "../src/whatif.js";

const whatifFixture = JSON.parse(
  readFileSync(new URL("../fixtures/whatif_default.json", import.meta.url), "utf-8"),
) as WhatifResponseDto;

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

describe("default what-if panel (golden against the recorded API fixture)", () => {
  it("shows a savings factor of at least 4, verbatim from the service", () => {
    const panel = panelFromResponse(whatifFixture);
    expect(panel.kind).toBe("result");
    if (panel.kind !== "result") return;
    expect(panel.savingsFactor).toBe(whatifFixture.savings_factor);
    expect(panel.savingsFactor).toBeGreaterThanOrEqual(4);
    const html = renderWhatifPanel(panel, "multi-rat", "nbiot-only");
    expect(html).toContain(`data-savings-factor="${whatifFixture.savings_factor}"`);
    expect(html).toContain(String(whatifFixture.summary_a.total.energy_uwh));
    expect(html).toContain(String(whatifFixture.summary_b.total.energy_uwh));
  });

  it("identical policies produce factor 1 end-to-end", async () => {
    const fake = async () =>
      jsonResponse({
        summary_a: whatifFixture.summary_a,
        summary_b: whatifFixture.summary_a,
        savings_factor: 1.0,
      });
    const runner = new WhatifRunner(new ApiClient("http://svc", fake));
    const panel = await runner.run(defaultViewState().whatif);
    expect(panel).not.toBeNull();
    if (panel?.kind === "result") expect(panel.savingsFactor).toBe(1.0);
  });
});

describe("what-if request building", () => {
  it("maps the default form to the documented workload/policies", () => {
    const body = buildWhatifRequest(defaultViewState().whatif) as Record<string, any>;
    expect(body.workload.messages[0].payload_bytes).toBe(8);
    expect(body.workload.duration_h).toBe(24);
    expect(body.policy_a.name).toBe("multi-rat");
    expect(body.policy_b.allowed).toEqual(["NBIoT"]);
  });

  it("policy choices cover restriction and ladder presets", () => {
    expect(policyFromChoice("sigfox-only").allowed).toEqual(["Sigfox"]);
    const ladder = policyFromChoice("lorawan-first-ladder").ladder;
    expect(ladder?.[0]).toEqual({ technology: "LoRaWAN", retries: 2, confirmed: true });
  });
});

describe("feasibility and failure surfacing", () => {
  it("propagates no_feasible_technology with the service message", async () => {
    const fake = async () =>
      jsonResponse(
        { code: "no_feasible_technology", message: "no technology can carry 1000 B" },
        422,
      );
    const runner = new WhatifRunner(new ApiClient("http://svc", fake));
    const form = { ...defaultViewState().whatif, payloadBytes: 1000, policyA: "sigfox-only" as const };
    const panel = await runner.run(form);
    expect(panel).toEqual({
      kind: "infeasible",
      code: "no_feasible_technology",
      message: "no technology can carry 1000 B",
    });
    const html = renderWhatifPanel(panel!, "sigfox-only", "nbiot-only");
    expect(html).toContain("no technology can carry 1000 B");
  });

  it("reports offline when the service is unreachable", async () => {
    const fake = async () => {
      throw new TypeError("fetch failed");
    };
    const runner = new WhatifRunner(new ApiClient("http://svc", fake));
    const panel = await runner.run(defaultViewState().whatif);
    expect(panel).toEqual({ kind: "offline" });
  });
});

describe("single-flight requests", () => {
  it("a new submission aborts the pending one", async () => {
    const seen: AbortSignal[] = [];
    let resolveFirst: ((r: Response) => void) | null = null;
    const fake = (_url: string, init?: RequestInit) => {
      const signal = init?.signal as AbortSignal;
      seen.push(signal);
      return new Promise<Response>((resolve, reject) => {
        signal.addEventListener("abort", () => {
          const err = new Error("aborted");
          err.name = "AbortError";
          reject(err);
        });
        if (seen.length === 1) {
          resolveFirst = resolve;
        } else {
          resolve(jsonResponse(whatifFixture));
        }
      });
    };
    const runner = new WhatifRunner(new ApiClient("http://svc", fake));
    const form = defaultViewState().whatif;
    const first = runner.run(form);
    const second = runner.run(form);
    const [resultFirst, resultSecond] = await Promise.all([first, second]);
    expect(seen.length).toBe(2);
    expect(seen[0]?.aborted).toBe(true);
    expect(seen[1]?.aborted).toBe(false);
    expect(resultFirst).toBeNull(); // superseded request reports nothing
    expect(resultSecond?.kind).toBe("result");
    expect(resolveFirst).not.toBeNull();
  });
});
