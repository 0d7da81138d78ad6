// Chart builders: pure functions from API-shaped data to SVG/HTML strings.
// Every displayed number is the API value verbatim (carried in data-*
// attributes and cell text); geometry is presentation only.

import type {
  AggregateCellDto,
  MeasurementRecordDto,
  SpeedSeriesByTech,
} from "./types.js";

export const TECH_COLORS: Record<string, string> = {
  NBIoT: "#1f77b4",
  LoRaWAN: "#2ca02c",
  Sigfox: "#d62728",
};

const SPEED_BUCKET_ORDER = ["static", "lt10", "10to30", "gt30"];
const SPEED_BUCKET_LABELS: Record<string, string> = {
  static: "Static",
  lt10: "<10 km/h",
  "10to30": "10-30 km/h",
  gt30: ">30 km/h",
};

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderNoData(): string {
  return `<div class="no-data">no data</div>`;
}

export function renderOfflineBanner(): string {
  return `<div class="banner offline">service unreachable - showing nothing rather than stale numbers</div>`;
}

export function renderErrorBanner(code: string, message: string): string {
  return `<div class="banner error" data-code="${esc(code)}">${esc(code)}: ${esc(message)}</div>`;
}

export function renderValidationErrors(errors: string[]): string {
  const items = errors.map((e) => `<li>${esc(e)}</li>`).join("");
  return `<div class="banner validation"><ul>${items}</ul></div>`;
}

/** PDR-versus-speed lines, one polyline per technology. */
export function renderSpeedLine(series: SpeedSeriesByTech, width = 640, height = 320): string {
  const techs = Object.keys(series).filter((t) => (series[t] ?? []).length > 0);
  if (techs.length === 0) return renderNoData();
  const margin = { left: 48, right: 16, top: 16, bottom: 40 };
  const plotW = width - margin.left - margin.right;
  const plotH = height - margin.top - margin.bottom;
  const xFor = (bucket: string) => {
    const idx = Math.max(0, SPEED_BUCKET_ORDER.indexOf(bucket));
    return margin.left + (plotW * idx) / (SPEED_BUCKET_ORDER.length - 1);
  };
  const yFor = (pdrPct: number) => margin.top + plotH * (1 - pdrPct / 100);

  const parts: string[] = [];
  for (const bucket of SPEED_BUCKET_ORDER) {
    const x = xFor(bucket);
    parts.push(
      `<text class="tick" x="${x}" y="${height - 12}" text-anchor="middle">` +
        `${esc(SPEED_BUCKET_LABELS[bucket] ?? bucket)}</text>`,
    );
  }
  for (const pct of [0, 25, 50, 75, 100]) {
    parts.push(
      `<text class="tick" x="${margin.left - 8}" y="${yFor(pct) + 4}" text-anchor="end">${pct}</text>`,
      `<line class="grid" x1="${margin.left}" y1="${yFor(pct)}" x2="${width - margin.right}" y2="${yFor(pct)}"/>`,
    );
  }
  for (const tech of techs) {
    const points = [...(series[tech] ?? [])].sort(
      (a, b) => SPEED_BUCKET_ORDER.indexOf(a.speed_bucket) - SPEED_BUCKET_ORDER.indexOf(b.speed_bucket),
    );
    const color = TECH_COLORS[tech] ?? "#555";
    const path = points.map((p) => `${xFor(p.speed_bucket)},${yFor(p.pdr_pct)}`).join(" ");
    parts.push(`<polyline class="series" data-tech="${esc(tech)}" points="${path}" fill="none" stroke="${color}" stroke-width="2"/>`);
    for (const p of points) {
      parts.push(
        `<circle class="point" data-tech="${esc(tech)}" data-bucket="${esc(p.speed_bucket)}" ` +
          `data-pdr="${p.pdr_pct}" data-n="${p.n_sent}" ` +
          `cx="${xFor(p.speed_bucket)}" cy="${yFor(p.pdr_pct)}" r="4" fill="${color}"/>`,
      );
    }
  }
  return (
    `<svg class="chart speed-line" viewBox="0 0 ${width} ${height}" xmlns="http://www.w3.org/2000/svg">` +
    `<text class="axis" x="14" y="${margin.top + plotH / 2}" transform="rotate(-90 14 ${margin.top + plotH / 2})" text-anchor="middle">PDR [%]</text>` +
    parts.join("") +
    `</svg>`
  );
}

/** Comparison table; sentinel cells render as the familiar "-" and "/". */
export function renderTable(cells: AggregateCellDto[]): string {
  if (cells.length === 0) return renderNoData();
  const fmt = (value: number | string) =>
    value === "unsupported" ? "-" : value === "insufficient" ? "/" : String(value);
  const rows = cells
    .map(
      (c) =>
        `<tr data-tech="${esc(c.technology)}" data-bucket="${esc(c.bucket)}" data-scenario="${esc(c.scenario)}">` +
        `<td>${esc(c.scenario)}</td><td>${esc(c.technology)}</td><td>${esc(c.bucket)}</td>` +
        `<td class="pdr">${esc(fmt(c.pdr_pct))}</td>` +
        `<td class="eb">${esc(fmt(c.eb_uwh_per_byte))}</td>` +
        `<td>${c.n_sent}</td><td>${c.n_received}</td></tr>`,
    )
    .join("");
  return (
    `<table class="chart cells"><thead><tr>` +
    `<th>Scenario</th><th>Technology</th><th>Payload (B)</th>` +
    `<th>PDR (%)</th><th>E_b (uWh/B)</th><th>sent</th><th>received</th>` +
    `</tr></thead><tbody>${rows}</tbody></table>`
  );
}

/** Raw (x, y) scatter over records; fields picked by the view state. */
export function renderScatter(
  records: MeasurementRecordDto[],
  xField: keyof MeasurementRecordDto,
  yField: keyof MeasurementRecordDto,
  width = 640,
  height = 320,
): string {
  const points: [number, number][] = [];
  for (const record of records) {
    const x = record[xField];
    const y = record[yField];
    const xNum = typeof x === "boolean" ? Number(x) : (x as number | null);
    const yNum = typeof y === "boolean" ? Number(y) : (y as number | null);
    if (typeof xNum === "number" && typeof yNum === "number") points.push([xNum, yNum]);
  }
  if (points.length === 0) return renderNoData();
  const xs = points.map((p) => p[0]);
  const ys = points.map((p) => p[1]);
  const [xMin, xMax] = [Math.min(...xs), Math.max(...xs)];
  const [yMin, yMax] = [Math.min(...ys), Math.max(...ys)];
  const sx = (x: number) => 40 + ((width - 56) * (x - xMin)) / Math.max(xMax - xMin, 1e-9);
  const sy = (y: number) => height - 32 - ((height - 48) * (y - yMin)) / Math.max(yMax - yMin, 1e-9);
  const dots = points
    .map(([x, y]) => `<circle class="point" data-x="${x}" data-y="${y}" cx="${sx(x)}" cy="${sy(y)}" r="3" fill="#1f77b4" fill-opacity="0.6"/>`)
    .join("");
  return (
    `<svg class="chart scatter" viewBox="0 0 ${width} ${height}" xmlns="http://www.w3.org/2000/svg">` +
    `<text class="axis" x="${width / 2}" y="${height - 6}" text-anchor="middle">${esc(String(xField))}</text>` +
    `<text class="axis" x="14" y="${height / 2}" transform="rotate(-90 14 ${height / 2})" text-anchor="middle">${esc(String(yField))}</text>` +
    dots +
    `</svg>`
  );
}

export interface BoxStats {
  median: number;
  lowerQuartile: number;
  upperQuartile: number;
  lowerWhisker: number;
  upperWhisker: number;
  outliers: number[];
}

/** Tukey box statistics (linear-interpolation quartiles, 1.5 IQR whiskers).
 * Presentation-side order statistics for the distribution view; metric values
 * (PDR, E_b) always come from the service. */
export function computeBoxStats(values: number[]): BoxStats | null {
  if (values.length < 5) return null;
  const xs = [...values].sort((a, b) => a - b);
  const at = (q: number) => {
    const pos = (xs.length - 1) * q;
    const lo = Math.floor(pos);
    const hi = Math.ceil(pos);
    const frac = pos - lo;
    return (xs[lo] as number) * (1 - frac) + (xs[hi] as number) * frac;
  };
  const q1 = at(0.25);
  const q3 = at(0.75);
  const iqr = q3 - q1;
  const inside = xs.filter((x) => x >= q1 - 1.5 * iqr && x <= q3 + 1.5 * iqr);
  const lowerWhisker = inside[0] as number;
  const upperWhisker = inside[inside.length - 1] as number;
  return {
    median: at(0.5),
    lowerQuartile: q1,
    upperQuartile: q3,
    lowerWhisker,
    upperWhisker,
    outliers: xs.filter((x) => x < lowerWhisker || x > upperWhisker),
  };
}

/** Distribution of one numeric field per technology as box-and-whisker. */
export function renderBox(
  records: MeasurementRecordDto[],
  field: keyof MeasurementRecordDto,
  width = 640,
  height = 240,
): string {
  const byTech = new Map<string, number[]>();
  for (const record of records) {
    const value = record[field];
    if (typeof value !== "number") continue;
    const bucket = byTech.get(record.technology) ?? [];
    bucket.push(value);
    byTech.set(record.technology, bucket);
  }
  const groups = [...byTech.entries()]
    .map(([tech, values]) => ({ tech, stats: computeBoxStats(values) }))
    .filter((g) => g.stats !== null);
  if (groups.length === 0) return renderNoData();
  const all = groups.flatMap((g) => [
    g.stats!.lowerWhisker,
    g.stats!.upperWhisker,
    ...g.stats!.outliers,
  ]);
  const [lo, hi] = [Math.min(...all), Math.max(...all)];
  const sx = (x: number) => 90 + ((width - 110) * (x - lo)) / Math.max(hi - lo, 1e-9);
  const rows = groups.map((g, i) => {
    const y = 36 + i * 56;
    const s = g.stats!;
    const color = TECH_COLORS[g.tech] ?? "#555";
    const outliers = s.outliers
      .map((o) => `<circle class="outlier" data-value="${o}" cx="${sx(o)}" cy="${y}" r="3" fill="none" stroke="${color}"/>`)
      .join("");
    return (
      `<g class="box" data-tech="${esc(g.tech)}" data-median="${s.median}">` +
      `<text x="8" y="${y + 4}">${esc(g.tech)}</text>` +
      `<line x1="${sx(s.lowerWhisker)}" y1="${y}" x2="${sx(s.lowerQuartile)}" y2="${y}" stroke="${color}"/>` +
      `<line x1="${sx(s.upperQuartile)}" y1="${y}" x2="${sx(s.upperWhisker)}" y2="${y}" stroke="${color}"/>` +
      `<rect x="${sx(s.lowerQuartile)}" y="${y - 14}" width="${Math.max(sx(s.upperQuartile) - sx(s.lowerQuartile), 1)}" height="28" fill="${color}" fill-opacity="0.25" stroke="${color}"/>` +
      `<line x1="${sx(s.median)}" y1="${y - 14}" x2="${sx(s.median)}" y2="${y + 14}" stroke="${color}" stroke-width="2"/>` +
      outliers +
      `</g>`
    );
  });
  return (
    `<svg class="chart box" viewBox="0 0 ${width} ${height}" xmlns="http://www.w3.org/2000/svg">` +
    rows.join("") +
    `</svg>`
  );
}

/** Node positions and gateway positions as two marker layers; the optional
 * tile URL is a plain background image, no tile-server dependency. */
export function renderMap(
  records: MeasurementRecordDto[],
  tileUrl?: string,
  width = 640,
  height = 400,
): string {
  const nodes: [number, number][] = [];
  const gateways: [number, number][] = [];
  for (const record of records) {
    if (record.position) nodes.push(record.position);
    for (const gw of record.gateway_positions ?? []) gateways.push(gw);
  }
  if (nodes.length === 0 && gateways.length === 0) return renderNoData();
  const lats = [...nodes, ...gateways].map((p) => p[0]);
  const lons = [...nodes, ...gateways].map((p) => p[1]);
  const [latMin, latMax] = [Math.min(...lats), Math.max(...lats)];
  const [lonMin, lonMax] = [Math.min(...lons), Math.max(...lons)];
  const sx = (lon: number) => 20 + ((width - 40) * (lon - lonMin)) / Math.max(lonMax - lonMin, 1e-9);
  const sy = (lat: number) => height - 20 - ((height - 40) * (lat - latMin)) / Math.max(latMax - latMin, 1e-9);
  const background = tileUrl
    ? `<image href="${esc(tileUrl)}" x="0" y="0" width="${width}" height="${height}" preserveAspectRatio="xMidYMid slice"/>`
    : "";
  const nodeLayer = nodes
    .map(([lat, lon]) => `<circle class="node" data-lat="${lat}" data-lon="${lon}" cx="${sx(lon)}" cy="${sy(lat)}" r="4" fill="#1f77b4" fill-opacity="0.7"/>`)
    .join("");
  const gatewayLayer = gateways
    .map(([lat, lon]) => `<rect class="gateway" data-lat="${lat}" data-lon="${lon}" x="${sx(lon) - 4}" y="${sy(lat) - 4}" width="8" height="8" fill="#d62728"/>`)
    .join("");
  return (
    `<svg class="chart map" viewBox="0 0 ${width} ${height}" xmlns="http://www.w3.org/2000/svg">` +
    background +
    `<g class="layer nodes">${nodeLayer}</g>` +
    `<g class="layer gateways">${gatewayLayer}</g>` +
    `</svg>`
  );
}
