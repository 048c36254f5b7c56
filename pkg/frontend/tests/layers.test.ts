// Unit coverage for the presentational geometry: marker shapes by
// intensity code, contour extraction, and the lon/lat projection.

import { describe, expect, it } from "vitest";
import { graticule, makeProjection, markerForIntensity } from "../src/overlays";
import { contourSegments, defaultLevels } from "../src/raster";
import type { ConflictResponse, GridDoc } from "../src/types";
import conflictRaw from "./fixtures/conflict_1824.json";

const CONFLICT = conflictRaw as unknown as ConflictResponse;

describe("conflict markers", () => {
  it("attacked sites are circles, destroyed sites triangles", () => {
    expect(markerForIntensity(2)).toBe("circle");
    expect(markerForIntensity(3)).toBe("triangle");
  });

  it("other codes get a distinct third shape", () => {
    expect(markerForIntensity(9)).toBe("square");
  });

  it("the served 1824 layer contains both marker kinds", () => {
    const shapes = new Set(CONFLICT.points.map((p) => markerForIntensity(p.intensity)));
    expect(shapes.has("circle") || shapes.has("triangle")).toBe(true);
    for (const p of CONFLICT.points) {
      expect(p.start_year).toBeLessThanOrEqual(1824);
      expect(p.end_year).toBeGreaterThanOrEqual(1824);
    }
  });
});

describe("contours from the served surface", () => {
  it("a constant grid has no contours", () => {
    const flat: GridDoc = { bbox: [0, 0, 3, 2], resolution: 1, nx: 3, ny: 2, values: [1, 1, 1, 1, 1, 1] };
    expect(defaultLevels(flat)).toEqual([]);
    expect(contourSegments(flat, [0.5])).toEqual([]);
  });

  it("the 1824 conflict surface yields contours inside the bbox", () => {
    const g = CONFLICT.surface;
    const segs = contourSegments(g, defaultLevels(g));
    expect(segs.length).toBeGreaterThan(0);
    for (const [x1, y1, x2, y2] of segs) {
      for (const x of [x1, x2]) {
        expect(x).toBeGreaterThanOrEqual(g.bbox[0]);
        expect(x).toBeLessThanOrEqual(g.bbox[2]);
      }
      for (const y of [y1, y2]) {
        expect(y).toBeGreaterThanOrEqual(g.bbox[1]);
        expect(y).toBeLessThanOrEqual(g.bbox[3]);
      }
    }
  });

  it("a single ridge produces segments that straddle the level", () => {
    const ridge: GridDoc = {
      bbox: [0, 0, 3, 3],
      resolution: 1,
      nx: 3,
      ny: 3,
      values: [0, 0, 0, 1, 1, 1, 0, 0, 0],
    };
    const segs = contourSegments(ridge, [0.5]);
    expect(segs.length).toBeGreaterThan(0);
  });
});

describe("projection", () => {
  const bounds = { lon_min: 0, lat_min: 6, lon_max: 6, lat_max: 11 };
  const proj = makeProjection(bounds, 600, 500);

  it("maps corners to canvas corners with latitude up", () => {
    expect(proj.x(0)).toBe(0);
    expect(proj.x(6)).toBe(600);
    expect(proj.y(6)).toBe(500); // south edge at the bottom
    expect(proj.y(11)).toBe(0); // north edge at the top
  });

  it("graticule lines cover the whole-degree interior", () => {
    const g = graticule(bounds);
    expect(g.lons[0]).toBe(0);
    expect(g.lons[g.lons.length - 1]).toBe(6);
    expect(g.lats).toContain(8);
  });
});
