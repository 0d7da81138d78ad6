// Thin client for the measurement service. The dashboard displays service
// numbers verbatim; this layer only moves bytes and surfaces errors.

import type {
  AggregateCellDto,
  ApiErrorDto,
  MeasurementRecordDto,
  SpeedSeriesByTech,
  TechnologyName,
  WhatifResponseDto,
} from "./types.js";
import type { Filters } from "./viewstate.js";

/** Service-reported failure; code/message are surfaced verbatim. */
export class ApiError extends Error {
  constructor(
    public readonly code: string,
    message: string,
    public readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** Network-level failure: the service is unreachable. */
export class OfflineError extends Error {
  constructor() {
    super("service unreachable");
    this.name = "OfflineError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export function filtersToQuery(filters: Filters): URLSearchParams {
  const params = new URLSearchParams();
  if (filters.tech) params.set("tech", filters.tech);
  if (filters.minPayload !== undefined) params.set("min_payload", String(filters.minPayload));
  if (filters.maxPayload !== undefined) params.set("max_payload", String(filters.maxPayload));
  if (filters.minSpeed !== undefined) params.set("min_speed", String(filters.minSpeed));
  if (filters.maxSpeed !== undefined) params.set("max_speed", String(filters.maxSpeed));
  if (filters.fromMs !== undefined) params.set("from", String(filters.fromMs));
  if (filters.toMs !== undefined) params.set("to", String(filters.toMs));
  if (filters.delivered !== undefined) params.set("delivered", String(filters.delivered));
  return params;
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    } catch (err) {
      if ((err as Error | null)?.name === "AbortError") throw err;
      throw new OfflineError();
    }
    if (!response.ok) {
      let body: ApiErrorDto = { code: "http_error", message: `status ${response.status}` };
      try {
        body = (await response.json()) as ApiErrorDto;
      } catch {
        // non-JSON error body; keep the fallback
      }
      throw new ApiError(body.code, body.message, response.status);
    }
    return response;
  }

  async aggregateTable(filters: Filters): Promise<AggregateCellDto[]> {
    const params = filtersToQuery(filters);
    params.set("group", "table");
    const response = await this.request(`/v1/aggregate?${params.toString()}`);
    const body = (await response.json()) as { cells: AggregateCellDto[] };
    return body.cells;
  }

  async aggregateSpeed(tech?: TechnologyName): Promise<SpeedSeriesByTech> {
    const params = new URLSearchParams({ group: "speed" });
    if (tech) params.set("tech", tech);
    const response = await this.request(`/v1/aggregate?${params.toString()}`);
    const body = (await response.json()) as { series: SpeedSeriesByTech };
    return body.series;
  }

  async records(filters: Filters): Promise<MeasurementRecordDto[]> {
    const params = filtersToQuery(filters);
    const response = await this.request(`/v1/records?${params.toString()}`);
    const text = await response.text();
    return text
      .split("\n")
      .filter((line) => line.trim().length > 0)
      .map((line) => JSON.parse(line) as MeasurementRecordDto);
  }

  async whatif(body: unknown, signal?: AbortSignal): Promise<WhatifResponseDto> {
    const response = await this.request("/v1/whatif", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
      signal,
    });
    return (await response.json()) as WhatifResponseDto;
  }
}
