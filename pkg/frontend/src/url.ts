// View state <-> URL query round-trip so map views are sharable. Decoding
// is forgiving: unknown parameters are ignored, malformed values fall back
// to defaults, and an out-of-bounds bandwidth is clamped with a notice.

import {
  canonicalPorts,
  clampBandwidth,
  defaultState,
  snapYear,
  type OverlayToggles,
  type ViewState,
} from "./state";
import type { MetaResponse } from "./types";

const OVERLAY_TOKENS: ReadonlyArray<[string, keyof OverlayToggles]> = [
  ["points", "conflictPoints"],
  ["contours", "conflictContours"],
  ["network", "network"],
];

export function encodeState(state: ViewState): string {
  const q = new URLSearchParams();
  q.set("year", String(state.year));
  q.set("ports", state.ports.join(","));
  q.set("h", String(state.bandwidth));
  const on = OVERLAY_TOKENS.filter(([, key]) => state.overlays[key]).map(([tok]) => tok);
  if (on.length) q.set("overlays", on.join(","));
  if (state.scale !== "linear") q.set("scale", state.scale);
  return q.toString();
}

export interface DecodedState {
  state: ViewState;
  /** user-visible adjustments made while decoding (e.g. clamping) */
  notices: string[];
}

export function decodeState(search: string, meta: MetaResponse): DecodedState {
  const q = new URLSearchParams(search.startsWith("?") ? search.slice(1) : search);
  const state = defaultState(meta);
  const notices: string[] = [];

  const yearRaw = q.get("year");
  if (yearRaw !== null && yearRaw.trim() !== "") {
    const y = Number(yearRaw);
    state.year = snapYear(y, meta);
  }

  const portsRaw = q.get("ports");
  if (portsRaw !== null) {
    const ports = canonicalPorts(
      portsRaw.split(",").map((p) => p.trim()).filter(Boolean),
      meta,
    );
    // an all-unknown (or empty) list falls back to the default selection
    if (ports.length || portsRaw.trim() === "") state.ports = ports;
  }

  const hRaw = q.get("h");
  if (hRaw !== null && hRaw.trim() !== "") {
    const h = Number(hRaw);
    if (Number.isFinite(h)) {
      const clamped = clampBandwidth(h, meta);
      if (clamped !== h) {
        notices.push(
          `Bandwidth ${h} is outside [${meta.bandwidth.min}, ${meta.bandwidth.max}]; using ${clamped}.`,
        );
      }
      state.bandwidth = clamped;
    }
  }

  const overlaysRaw = q.get("overlays");
  if (overlaysRaw !== null) {
    const tokens = new Set(overlaysRaw.split(",").map((t) => t.trim()));
    for (const [tok, key] of OVERLAY_TOKENS) state.overlays[key] = tokens.has(tok);
  }

  const scaleRaw = q.get("scale");
  if (scaleRaw === "log" || scaleRaw === "linear") state.scale = scaleRaw;

  return { state, notices };
}
