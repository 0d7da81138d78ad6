// Orchestrates one data view: validate the state client-side, fetch from the
// service, hand the payload to the matching chart builder.

import { ApiClient, ApiError, OfflineError } from "./api.js";
import {
  renderBox,
  renderErrorBanner,
  renderMap,
  renderNoData,
  renderOfflineBanner,
  renderScatter,
  renderSpeedLine,
  renderTable,
  renderValidationErrors,
} from "./charts.js";
import type { MeasurementRecordDto } from "./types.js";
import type { ViewState } from "./viewstate.js";
import { validateFilters } from "./viewstate.js";

export interface ExploreOutcome {
  kind: "chart" | "validation-error" | "service-error" | "offline";
  html: string;
}

export async function exploreView(client: ApiClient, state: ViewState): Promise<ExploreOutcome> {
  const errors = validateFilters(state.filters);
  if (errors.length > 0) {
    // invalid filters never reach the network
    return { kind: "validation-error", html: renderValidationErrors(errors) };
  }
  try {
    switch (state.chart) {
      case "table": {
        const cells = await client.aggregateTable(state.filters);
        return { kind: "chart", html: renderTable(cells) };
      }
      case "speed-line": {
        const series = await client.aggregateSpeed(state.filters.tech);
        return { kind: "chart", html: renderSpeedLine(series) };
      }
      case "scatter": {
        const records = await client.records(state.filters);
        return {
          kind: "chart",
          html: renderScatter(
            records,
            state.xField as keyof MeasurementRecordDto,
            state.yField as keyof MeasurementRecordDto,
          ),
        };
      }
      case "box": {
        const records = await client.records(state.filters);
        return {
          kind: "chart",
          html: renderBox(records, state.yField as keyof MeasurementRecordDto),
        };
      }
      case "map": {
        const records = await client.records(state.filters);
        return { kind: "chart", html: renderMap(records) };
      }
      default:
        return { kind: "chart", html: renderNoData() };
    }
  } catch (err) {
    if (err instanceof OfflineError) return { kind: "offline", html: renderOfflineBanner() };
    if (err instanceof ApiError) {
      return { kind: "service-error", html: renderErrorBanner(err.code, err.message) };
    }
    throw err;
  }
}
