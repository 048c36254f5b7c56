// Response shapes of the five server endpoints. These mirror the JSON
// Schemas packaged with the Python server; the UI treats every field as
// read-only data and renders it without recomputation.

export interface GridDoc {
  /** [west, south, east, north] in decimal degrees */
  bbox: [number, number, number, number];
  resolution: number;
  nx: number;
  ny: number;
  /** row-major, row 0 is the southernmost latitude band */
  values: number[];
}

export interface Condition {
  year: number;
  ports: string[];
  h: number;
}

export interface DensityResponse extends GridDoc {
  condition: Condition;
  sample_count: number;
}

export interface PortInfo {
  id: string;
  name: string;
  class: "coastal" | "off-map";
}

export interface MetaResponse {
  version: string;
  years: number[];
  skipped_years: number[];
  ports: PortInfo[];
  grid: {
    lon_min: number;
    lat_min: number;
    lon_max: number;
    lat_max: number;
    resolution: number;
    nx: number;
    ny: number;
  };
  bandwidth: { min: number; max: number; default: number };
}

export interface ConflictPoint {
  name: string;
  lon: number;
  lat: number;
  start_year: number;
  end_year: number;
  intensity: number;
  affiliation: string;
}

export interface ConflictResponse {
  year: number;
  points: ConflictPoint[];
  surface: GridDoc;
}

export interface NetworkNode {
  id: string;
  name: string;
  lon: number;
  lat: number;
  absorbing: boolean;
}

export interface NetworkResponse {
  nodes: NetworkNode[];
  edges: [string, string][];
}

export interface SankeyResponse {
  ports: string[];
  years: number[] | null;
  rows: [string, string, number][];
}
