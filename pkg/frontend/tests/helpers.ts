// Shared fakes for the controller tests: a recording view, a scriptable
// API, and a microtask flusher.

import type { Api } from "../src/api";
import type { View, ViewState } from "../src/state";
import type {
  ConflictResponse,
  DensityResponse,
  MetaResponse,
  NetworkResponse,
} from "../src/types";
import metaRaw from "./fixtures/meta.json";
import networkRaw from "./fixtures/network.json";
import conflictRaw from "./fixtures/conflict_1824.json";

export const META = metaRaw as unknown as MetaResponse;
export const NETWORK = networkRaw as unknown as NetworkResponse;
export const CONFLICT_1824 = conflictRaw as unknown as ConflictResponse;

export function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}

export function makeDensity(year: number, ports: string[], h: number): DensityResponse {
  return {
    bbox: [0, 0, 2, 1],
    resolution: 1,
    nx: 2,
    ny: 1,
    values: [0.25, 0.75],
    condition: { year, ports, h },
    sample_count: 10,
  };
}

export function makeConflict(year: number): ConflictResponse {
  return { ...CONFLICT_1824, year };
}

export class RecordingView implements View {
  states: ViewState[] = [];
  densities: DensityResponse[] = [];
  /** the single heatmap layer slot; renders replace it */
  layer: DensityResponse | null = null;
  unavailable: string[] = [];
  prompts: string[] = [];
  banners: string[] = [];
  bannersCleared = 0;
  conflicts: ConflictResponse[] = [];
  conflictsCleared = 0;
  networks: NetworkResponse[] = [];
  networksCleared = 0;

  stateChanged(state: ViewState): void {
    this.states.push(state);
  }
  renderDensity(d: DensityResponse): void {
    this.densities.push(d);
    this.layer = d;
  }
  renderDensityUnavailable(notice: string): void {
    this.unavailable.push(notice);
    this.layer = null;
  }
  renderPrompt(message: string): void {
    this.prompts.push(message);
    this.layer = null;
  }
  renderBanner(message: string): void {
    this.banners.push(message);
  }
  clearBanner(): void {
    this.bannersCleared++;
  }
  renderConflict(c: ConflictResponse): void {
    this.conflicts.push(c);
  }
  clearConflict(): void {
    this.conflictsCleared++;
  }
  renderNetwork(n: NetworkResponse): void {
    this.networks.push(n);
  }
  clearNetwork(): void {
    this.networksCleared++;
  }
}

export interface CallCounts {
  density: number;
  conflict: number;
  network: number;
}

/** API whose every call succeeds immediately with synthetic documents. */
export function immediateApi(counts: CallCounts): Api {
  return {
    meta: async () => META,
    density: async (year, ports, h) => {
      counts.density++;
      return makeDensity(year, ports, h);
    },
    conflict: async (year) => {
      counts.conflict++;
      return makeConflict(year);
    },
    network: async () => {
      counts.network++;
      return NETWORK;
    },
    sankey: async () => {
      throw new Error("sankey is not used by these tests");
    },
  };
}

export interface Deferred<T> {
  promise: Promise<T>;
  resolve: (value: T) => void;
  reject: (err: unknown) => void;
}

export function deferred<T>(): Deferred<T> {
  let resolve!: (value: T) => void;
  let reject!: (err: unknown) => void;
  const promise = new Promise<T>((res, rej) => {
    resolve = res;
    reject = rej;
  });
  return { promise, resolve, reject };
}

/** API whose density calls hang until the test resolves them by hand. */
export function manualApi(counts: CallCounts) {
  const densityCalls: Array<{ year: number; ports: string[]; h: number } & Deferred<DensityResponse>> = [];
  const conflictCalls: Array<{ year: number } & Deferred<ConflictResponse>> = [];
  const api: Api = {
    meta: async () => META,
    density: (year, ports, h) => {
      counts.density++;
      const d = deferred<DensityResponse>();
      densityCalls.push({ year, ports, h, ...d });
      return d.promise;
    },
    conflict: (year) => {
      counts.conflict++;
      const d = deferred<ConflictResponse>();
      conflictCalls.push({ year, ...d });
      return d.promise;
    },
    network: async () => {
      counts.network++;
      return NETWORK;
    },
    sankey: async () => {
      throw new Error("sankey is not used by these tests");
    },
  };
  return { api, densityCalls, conflictCalls };
}
