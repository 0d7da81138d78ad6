// Wire types of the measurement service API, mirrored one-to-one.

export type TechnologyName = "LoRaWAN" | "Sigfox" | "NBIoT";
export const TECHNOLOGIES: TechnologyName[] = ["LoRaWAN", "Sigfox", "NBIoT"];

export type ScenarioKey = "static-indoor" | "static-outdoor" | "mobile-outdoor";
export const SCENARIOS: ScenarioKey[] = ["static-indoor", "static-outdoor", "mobile-outdoor"];

export type SentinelValue = "unsupported" | "insufficient";
export type CellValue = number | SentinelValue;

export interface AggregateCellDto {
  technology: TechnologyName;
  bucket: string;
  scenario: ScenarioKey;
  pdr_pct: CellValue;
  eb_uwh_per_byte: CellValue;
  n_sent: number;
  n_received: number;
}

export interface SpeedPointDto {
  speed_bucket: string;
  pdr_pct: number;
  n_sent: number;
}

export type SpeedSeriesByTech = Record<string, SpeedPointDto[]>;

export interface MeasurementRecordDto {
  record_id: string;
  technology: TechnologyName;
  timestamp_tx: number;
  timestamp_rx: number | null;
  payload_bytes: number;
  tx_power_dbm: number;
  energy_uwh: number;
  delivered: boolean;
  rssi_dbm: number | null;
  snr_db: number | null;
  position: [number, number] | null;
  speed_kmh: number;
  gateway_positions: [number, number][];
  placement: string | null;
  tech_params: { type: TechnologyName } & Record<string, unknown>;
}

export interface TechTotalsDto {
  energy_uwh: number;
  n_sent: number;
  n_delivered: number;
  bytes_sent: number;
  bytes_delivered: number;
  eb_uwh_per_byte: number | null;
  pdr: number | null;
}

export interface SimSummaryDto {
  per_technology: Record<string, TechTotalsDto>;
  total: TechTotalsDto;
  n_messages: number;
  n_messages_delivered: number;
  notes: string[];
}

export interface WhatifResponseDto {
  summary_a: SimSummaryDto;
  summary_b: SimSummaryDto;
  savings_factor: number;
}

export interface ApiErrorDto {
  code: string;
  message: string;
}
