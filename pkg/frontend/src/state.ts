// View state and the controller that turns state changes into (at most)
// one density request each, dropping out-of-order responses by sequence
// number. The controller is DOM-free: rendering goes through the View
// interface, so tests drive it with fakes and main.ts with the canvas.

import { ApiError, type Api } from "./api";
import type { Scale } from "./raster";
import type { ConflictResponse, DensityResponse, MetaResponse, NetworkResponse } from "./types";

export interface OverlayToggles {
  conflictPoints: boolean;
  conflictContours: boolean;
  network: boolean;
}

export interface ViewState {
  year: number;
  /** selected point-of-sale ids, in the server's enumeration order */
  ports: string[];
  bandwidth: number;
  overlays: OverlayToggles;
  scale: Scale;
  playing: boolean;
}

export type Action =
  | { kind: "set-year"; year: number }
  | { kind: "step-year"; delta: 1 | -1 }
  | { kind: "toggle-port"; port: string }
  | { kind: "set-ports"; ports: string[] }
  | { kind: "set-bandwidth"; h: number }
  | { kind: "toggle-overlay"; overlay: keyof OverlayToggles }
  | { kind: "set-scale"; scale: Scale }
  | { kind: "set-playing"; playing: boolean };

export const PROMPT_SELECT_PORTS = "Select at least one point of sale to draw an origin map.";

export function defaultState(meta: MetaResponse): ViewState {
  return {
    year: meta.years[0],
    ports: meta.ports.filter((p) => p.class === "coastal").map((p) => p.id),
    bandwidth: meta.bandwidth.default,
    overlays: { conflictPoints: false, conflictContours: false, network: false },
    scale: "linear",
    playing: false,
  };
}

export function clampBandwidth(h: number, meta: MetaResponse): number {
  if (!Number.isFinite(h)) return meta.bandwidth.default;
  return Math.min(meta.bandwidth.max, Math.max(meta.bandwidth.min, h));
}

export function snapYear(year: number, meta: MetaResponse): number {
  if (!Number.isFinite(year)) return meta.years[0];
  let best = meta.years[0];
  for (const y of meta.years) {
    if (Math.abs(y - year) < Math.abs(best - year)) best = y;
  }
  return best;
}

/** Keep only known port ids, in the server's enumeration order. */
export function canonicalPorts(ports: Iterable<string>, meta: MetaResponse): string[] {
  const wanted = new Set(ports);
  return meta.ports.filter((p) => wanted.has(p.id)).map((p) => p.id);
}

function sameList(a: string[], b: string[]): boolean {
  return a.length === b.length && a.every((v, i) => v === b[i]);
}

/** Pure transition; returns the previous object untouched for no-ops. */
export function reduce(state: ViewState, action: Action, meta: MetaResponse): ViewState {
  switch (action.kind) {
    case "set-year": {
      const year = snapYear(action.year, meta);
      return year === state.year ? state : { ...state, year };
    }
    case "step-year": {
      const i = meta.years.indexOf(state.year);
      const n = meta.years.length;
      const year = meta.years[(i + action.delta + n) % n];
      return year === state.year ? state : { ...state, year };
    }
    case "toggle-port": {
      const has = state.ports.includes(action.port);
      const next = has
        ? state.ports.filter((p) => p !== action.port)
        : [...state.ports, action.port];
      const ports = canonicalPorts(next, meta);
      return sameList(ports, state.ports) ? state : { ...state, ports };
    }
    case "set-ports": {
      const ports = canonicalPorts(action.ports, meta);
      return sameList(ports, state.ports) ? state : { ...state, ports };
    }
    case "set-bandwidth": {
      const h = clampBandwidth(action.h, meta);
      return h === state.bandwidth ? state : { ...state, bandwidth: h };
    }
    case "toggle-overlay": {
      const overlays = { ...state.overlays, [action.overlay]: !state.overlays[action.overlay] };
      return { ...state, overlays };
    }
    case "set-scale":
      return action.scale === state.scale ? state : { ...state, scale: action.scale };
    case "set-playing":
      return action.playing === state.playing ? state : { ...state, playing: action.playing };
  }
}

function densityKey(s: ViewState): string {
  return `${s.year}|${s.ports.join(",")}|${s.bandwidth}`;
}

function conflictNeeded(s: ViewState): boolean {
  return s.overlays.conflictPoints || s.overlays.conflictContours;
}

export interface View {
  /** controls/URL sync on every actual state change */
  stateChanged(state: ViewState): void;
  /** replaces the heatmap layer and legend */
  renderDensity(d: DensityResponse, state: ViewState): void;
  /** 422: the condition is valid but matches no simulated individuals */
  renderDensityUnavailable(notice: string): void;
  /** empty port set: request suppressed */
  renderPrompt(message: string): void;
  /** network/HTTP failures, never silent */
  renderBanner(message: string): void;
  clearBanner(): void;
  renderConflict(c: ConflictResponse, state: ViewState): void;
  clearConflict(): void;
  renderNetwork(n: NetworkResponse, state: ViewState): void;
  clearNetwork(): void;
}

export class Controller {
  state: ViewState;

  private densitySeq = 0;
  private conflictSeq = 0;
  private lastDensity: DensityResponse | null = null;
  private lastConflict: ConflictResponse | null = null;
  private networkCache: NetworkResponse | null = null;
  private networkPending = false;

  constructor(
    private readonly api: Api,
    private readonly view: View,
    readonly meta: MetaResponse,
    initial?: ViewState,
  ) {
    this.state = initial ?? defaultState(meta);
  }

  /** Issue the requests the initial state needs. */
  start(): void {
    this.view.stateChanged(this.state);
    this.fetchDensity();
    this.syncConflict(true);
    this.syncNetwork(true);
  }

  dispatch(action: Action): void {
    this.transition(reduce(this.state, action, this.meta));
  }

  /** Swap in a whole state (URL navigation); same effects as dispatch. */
  replaceState(next: ViewState): void {
    this.transition(next);
  }

  private transition(next: ViewState): void {
    const prev = this.state;
    if (next === prev) return;
    this.state = next;
    this.view.stateChanged(next);

    if (densityKey(next) !== densityKey(prev)) {
      this.fetchDensity();
    } else if (next.scale !== prev.scale && this.lastDensity) {
      // recoloring is presentation only; no new request
      this.view.renderDensity(this.lastDensity, next);
    }

    const needPrev = conflictNeeded(prev) ? prev.year : null;
    const needNext = conflictNeeded(next) ? next.year : null;
    if (needNext !== needPrev) {
      this.syncConflict(false);
    } else if (needNext !== null && next.overlays !== prev.overlays && this.lastConflict) {
      // e.g. contours toggled while points stay on: redraw, no request
      this.view.renderConflict(this.lastConflict, next);
    }

    if (next.overlays.network !== prev.overlays.network) this.syncNetwork(false);
  }

  private fetchDensity(): void {
    const seq = ++this.densitySeq; // invalidates any in-flight response
    const s = this.state;
    if (s.ports.length === 0) {
      this.lastDensity = null;
      this.view.renderPrompt(PROMPT_SELECT_PORTS);
      return;
    }
    this.api.density(s.year, s.ports, s.bandwidth).then(
      (d) => {
        if (seq !== this.densitySeq) return; // stale
        this.lastDensity = d;
        this.view.clearBanner();
        this.view.renderDensity(d, this.state);
      },
      (err) => {
        if (seq !== this.densitySeq) return; // stale failure
        this.lastDensity = null;
        if (err instanceof ApiError && err.status === 422) {
          this.view.renderDensityUnavailable(
            "No simulated individuals match this condition. " + err.message,
          );
        } else {
          this.view.renderBanner(`Origin map request failed: ${describe(err)}`);
        }
      },
    );
  }

  private syncConflict(initial: boolean): void {
    const seq = ++this.conflictSeq;
    const s = this.state;
    if (!conflictNeeded(s)) {
      if (!initial) this.view.clearConflict();
      return;
    }
    if (this.lastConflict && this.lastConflict.year === s.year) {
      this.view.renderConflict(this.lastConflict, s);
      return;
    }
    this.api.conflict(s.year).then(
      (c) => {
        if (seq !== this.conflictSeq) return;
        this.lastConflict = c;
        this.view.renderConflict(c, this.state);
      },
      (err) => {
        if (seq !== this.conflictSeq) return;
        if (err instanceof ApiError && err.status === 404) {
          // no conflict records for this year: an empty layer, not an error
          this.view.clearConflict();
        } else {
          this.view.renderBanner(`Conflict layer request failed: ${describe(err)}`);
        }
      },
    );
  }

  private syncNetwork(initial: boolean): void {
    const s = this.state;
    if (!s.overlays.network) {
      if (!initial) this.view.clearNetwork();
      return;
    }
    if (this.networkCache) {
      this.view.renderNetwork(this.networkCache, s);
      return;
    }
    if (this.networkPending) return;
    this.networkPending = true;
    this.api.network().then(
      (n) => {
        this.networkPending = false;
        this.networkCache = n; // static data: cache forever
        if (this.state.overlays.network) this.view.renderNetwork(n, this.state);
      },
      (err) => {
        this.networkPending = false;
        if (this.state.overlays.network) {
          this.view.renderBanner(`Trade network request failed: ${describe(err)}`);
        }
      },
    );
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return err.status ? `${err.status}: ${err.message}` : err.message;
  return String(err);
}
