// The request-economy invariants: every port/year/bandwidth change issues
// exactly one density request, overlay and presentation changes issue
// none, an empty port selection suppresses the request behind a prompt,
// and failures always surface (notice for 422, banner otherwise).

import { beforeEach, describe, expect, it } from "vitest";
import { ApiError } from "../src/api";
import { Controller, PROMPT_SELECT_PORTS, defaultState } from "../src/state";
import {
  META,
  RecordingView,
  flush,
  immediateApi,
  makeDensity,
  type CallCounts,
} from "./helpers";

let counts: CallCounts;
let view: RecordingView;
let controller: Controller;

beforeEach(async () => {
  counts = { density: 0, conflict: 0, network: 0 };
  view = new RecordingView();
  controller = new Controller(immediateApi(counts), view, META);
  controller.start();
  await flush();
});

describe("one density request per state change", () => {
  it("start issues exactly one request and renders once", () => {
    expect(counts.density).toBe(1);
    expect(view.densities).toHaveLength(1);
    expect(view.layer?.condition.year).toBe(META.years[0]);
  });

  it("year change: one request", async () => {
    controller.dispatch({ kind: "set-year", year: META.years[1] });
    await flush();
    expect(counts.density).toBe(2);
    expect(view.layer?.condition.year).toBe(META.years[1]);
  });

  it("no-op year change: no request", async () => {
    controller.dispatch({ kind: "set-year", year: META.years[0] });
    await flush();
    expect(counts.density).toBe(1);
  });

  it("toggling a second port: exactly one request, layer replaced", async () => {
    const before = view.layer;
    expect(before).not.toBeNull();
    controller.dispatch({ kind: "toggle-port", port: "offmap_ne" });
    await flush();
    expect(counts.density).toBe(2);
    expect(view.densities).toHaveLength(2);
    expect(view.layer).not.toBe(before);
    expect(view.layer?.condition.ports).toContain("offmap_ne");
  });

  it("bandwidth change: one request", async () => {
    controller.dispatch({ kind: "set-bandwidth", h: 1.25 });
    await flush();
    expect(counts.density).toBe(2);
    expect(view.layer?.condition.h).toBe(1.25);
  });

  it("bandwidth is clamped to the served bounds before requesting", async () => {
    controller.dispatch({ kind: "set-bandwidth", h: 1e9 });
    await flush();
    expect(counts.density).toBe(2);
    expect(view.layer?.condition.h).toBe(META.bandwidth.max);
  });

  it("color-scale change: no request, recolor from the cached response", async () => {
    controller.dispatch({ kind: "set-scale", scale: "log" });
    await flush();
    expect(counts.density).toBe(1);
    expect(view.densities).toHaveLength(2); // re-rendered, not re-fetched
  });

  it("play/pause flag: no request", async () => {
    controller.dispatch({ kind: "set-playing", playing: true });
    controller.dispatch({ kind: "set-playing", playing: false });
    await flush();
    expect(counts.density).toBe(1);
  });

  it("unknown port id: no state change, no request", async () => {
    controller.dispatch({ kind: "toggle-port", port: "atlantis" });
    await flush();
    expect(counts.density).toBe(1);
  });
});

describe("empty selection", () => {
  it("suppresses the request and shows a prompt", async () => {
    controller.dispatch({ kind: "set-ports", ports: [] });
    await flush();
    expect(counts.density).toBe(1); // no new request
    expect(view.prompts).toContain(PROMPT_SELECT_PORTS);
    expect(view.layer).toBeNull();
  });

  it("selecting a port again resumes with one request", async () => {
    controller.dispatch({ kind: "set-ports", ports: [] });
    controller.dispatch({ kind: "toggle-port", port: "lagos" });
    await flush();
    expect(counts.density).toBe(2);
    expect(view.layer?.condition.ports).toEqual(["lagos"]);
  });
});

describe("overlay layers", () => {
  it("conflict toggle fetches once; the second toggle reuses the cache", async () => {
    controller.dispatch({ kind: "toggle-overlay", overlay: "conflictPoints" });
    await flush();
    expect(counts.conflict).toBe(1);
    expect(counts.density).toBe(1); // overlays never touch the density layer
    controller.dispatch({ kind: "toggle-overlay", overlay: "conflictContours" });
    await flush();
    expect(counts.conflict).toBe(1); // same year: served from cache
    expect(view.conflicts.length).toBeGreaterThanOrEqual(2);
  });

  it("disabling both conflict overlays clears the layer", async () => {
    controller.dispatch({ kind: "toggle-overlay", overlay: "conflictPoints" });
    await flush();
    controller.dispatch({ kind: "toggle-overlay", overlay: "conflictPoints" });
    await flush();
    expect(view.conflictsCleared).toBeGreaterThanOrEqual(1);
  });

  it("year change with a conflict overlay on refetches the layer", async () => {
    controller.dispatch({ kind: "toggle-overlay", overlay: "conflictPoints" });
    await flush();
    controller.dispatch({ kind: "set-year", year: META.years[2] });
    await flush();
    expect(counts.conflict).toBe(2);
    expect(counts.density).toBe(2);
    expect(view.conflicts[view.conflicts.length - 1].year).toBe(META.years[2]);
  });

  it("network data is fetched once and cached across toggles", async () => {
    controller.dispatch({ kind: "toggle-overlay", overlay: "network" });
    await flush();
    controller.dispatch({ kind: "toggle-overlay", overlay: "network" });
    await flush();
    controller.dispatch({ kind: "toggle-overlay", overlay: "network" });
    await flush();
    expect(counts.network).toBe(1);
    expect(view.networks).toHaveLength(2);
    expect(view.networksCleared).toBe(1);
  });
});

describe("failures are never silent", () => {
  it("422 renders the explicit no-data notice, not an error banner", async () => {
    const failing = immediateApi(counts);
    failing.density = async () => {
      counts.density++;
      throw new ApiError(422, "no simulated individuals for year 1817 and ports ['lagos']");
    };
    const v = new RecordingView();
    const c = new Controller(failing, v, META);
    c.start();
    await flush();
    expect(v.unavailable).toHaveLength(1);
    expect(v.unavailable[0]).toMatch(/no simulated individuals/i);
    expect(v.banners).toHaveLength(0);
    expect(v.layer).toBeNull();
  });

  it("other HTTP and transport errors raise a banner", async () => {
    const failing = immediateApi(counts);
    failing.density = async () => {
      counts.density++;
      throw new ApiError(503, "archive not loaded yet");
    };
    const v = new RecordingView();
    const c = new Controller(failing, v, META);
    c.start();
    await flush();
    expect(v.banners).toHaveLength(1);
    expect(v.banners[0]).toContain("503");
  });

  it("a successful render clears the banner", async () => {
    let fail = true;
    const flaky = immediateApi(counts);
    const good = immediateApi(counts);
    flaky.density = async (year, ports, h) => {
      if (fail) {
        counts.density++;
        throw new ApiError(0, "network error: connection refused");
      }
      return good.density(year, ports, h);
    };
    const v = new RecordingView();
    const c = new Controller(flaky, v, META);
    c.start();
    await flush();
    expect(v.banners).toHaveLength(1);
    fail = false;
    c.dispatch({ kind: "set-year", year: META.years[1] });
    await flush();
    expect(v.bannersCleared).toBeGreaterThanOrEqual(1);
    expect(v.layer?.condition.year).toBe(META.years[1]);
  });
});

describe("state reducer details", () => {
  it("ports keep the server's enumeration order regardless of click order", async () => {
    controller.dispatch({ kind: "set-ports", ports: [] });
    controller.dispatch({ kind: "toggle-port", port: "offmap_ne" });
    controller.dispatch({ kind: "toggle-port", port: "little_popo" });
    await flush();
    const ids = view.layer?.condition.ports ?? [];
    const order = META.ports.map((p) => p.id);
    expect(ids).toEqual(order.filter((id) => ids.includes(id)));
  });

  it("default state selects all coastal ports", () => {
    const s = defaultState(META);
    const coastal = META.ports.filter((p) => p.class === "coastal").map((p) => p.id);
    expect(s.ports).toEqual(coastal);
    expect(s.year).toBe(META.years[0]);
    expect(s.bandwidth).toBe(META.bandwidth.default);
  });

  it("step-year wraps around the available years", () => {
    const s = defaultState(META);
    s.year = META.years[META.years.length - 1];
    const c = new Controller(immediateApi(counts), new RecordingView(), META, s);
    c.dispatch({ kind: "step-year", delta: 1 });
    expect(c.state.year).toBe(META.years[0]);
    c.dispatch({ kind: "step-year", delta: -1 });
    expect(c.state.year).toBe(META.years[META.years.length - 1]);
  });
});
