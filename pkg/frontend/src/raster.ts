// Grid-to-pixels rasterization. Grids arrive row-major with row 0 the
// southernmost band; image buffers are top-down, so row j maps to pixel
// row ny-1-j. One cell = one pixel here; the canvas scales the buffer up
// with smoothing disabled, which keeps cell boundaries crisp and keeps
// the rendered argmax trivially identifiable.

import { lut256 } from "./colormap";
import type { GridDoc } from "./types";

export type Scale = "linear" | "log";

export interface RasterResult {
  /** pixels across = nx */
  width: number;
  /** pixels down = ny */
  height: number;
  /** RGBA, row 0 = northernmost band */
  rgba: Uint8ClampedArray<ArrayBuffer>;
  /** value range of the served grid, for the legend */
  min: number;
  max: number;
}

/** Flat (row-major, south-first) cell index for an image pixel. */
export function pixelToCell(grid: GridDoc, px: number, py: number): number {
  return (grid.ny - 1 - py) * grid.nx + px;
}

function valueRange(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  return [lo, hi];
}

/**
 * Normalized position of a value in [min, max] under the given scale.
 * Both scales are strictly increasing in the value, so color order always
 * matches data order; the log scale spends more of the ramp on the tails.
 */
export function normalize(v: number, min: number, max: number, scale: Scale): number {
  if (!(max > min)) return v > 0 ? 1 : 0;
  if (scale === "linear") return (v - min) / (max - min);
  // Log ramp over six decades below the maximum; zeros stay at 0.
  if (v <= 0) return 0;
  const floor = max / 1e6;
  const x = Math.max(v, floor);
  return (Math.log(x) - Math.log(floor)) / (Math.log(max) - Math.log(floor));
}

export function rasterize(grid: GridDoc, scale: Scale, alpha = 220): RasterResult {
  const { nx, ny, values } = grid;
  const [min, max] = valueRange(values);
  const lut = lut256();
  const rgba = new Uint8ClampedArray(nx * ny * 4);
  for (let j = 0; j < ny; j++) {
    const py = ny - 1 - j;
    for (let i = 0; i < nx; i++) {
      const v = values[j * nx + i];
      const o = (py * nx + i) * 4;
      if (v <= 0) {
        // water cells and empty land stay transparent so the base map shows
        rgba[o + 3] = 0;
        continue;
      }
      const k = Math.round(normalize(v, min, max, scale) * 255);
      rgba[o] = lut[k * 3];
      rgba[o + 1] = lut[k * 3 + 1];
      rgba[o + 2] = lut[k * 3 + 2];
      rgba[o + 3] = alpha;
    }
  }
  return { width: nx, height: ny, rgba, min, max };
}

/**
 * Contour line segments of a grid at the given levels, as
 * [lon1, lat1, lon2, lat2] in map coordinates. Standard marching squares
 * over the cell-center lattice with linear interpolation along edges.
 */
export function contourSegments(
  grid: GridDoc,
  levels: number[],
): Array<[number, number, number, number]> {
  const { nx, ny, values, bbox, resolution } = grid;
  const lon = (i: number) => bbox[0] + (i + 0.5) * resolution;
  const lat = (j: number) => bbox[1] + (j + 0.5) * resolution;
  const out: Array<[number, number, number, number]> = [];
  if (nx < 2 || ny < 2) return out;
  for (const level of levels) {
    for (let j = 0; j < ny - 1; j++) {
      for (let i = 0; i < nx - 1; i++) {
        // corner values, counter-clockwise from south-west
        const v00 = values[j * nx + i];
        const v10 = values[j * nx + i + 1];
        const v11 = values[(j + 1) * nx + i + 1];
        const v01 = values[(j + 1) * nx + i];
        let caseId = 0;
        if (v00 > level) caseId |= 1;
        if (v10 > level) caseId |= 2;
        if (v11 > level) caseId |= 4;
        if (v01 > level) caseId |= 8;
        if (caseId === 0 || caseId === 15) continue;
        const frac = (a: number, b: number) => (b === a ? 0.5 : (level - a) / (b - a));
        // edge crossing points: south, east, north, west
        const pS = (): [number, number] => [lon(i + frac(v00, v10)), lat(j)];
        const pE = (): [number, number] => [lon(i + 1), lat(j + frac(v10, v11))];
        const pN = (): [number, number] => [lon(i + frac(v01, v11)), lat(j + 1)];
        const pW = (): [number, number] => [lon(i), lat(j + frac(v00, v01))];
        const seg = (a: [number, number], b: [number, number]) =>
          out.push([a[0], a[1], b[0], b[1]]);
        switch (caseId) {
          case 1: case 14: seg(pW(), pS()); break;
          case 2: case 13: seg(pS(), pE()); break;
          case 3: case 12: seg(pW(), pE()); break;
          case 4: case 11: seg(pE(), pN()); break;
          case 6: case 9: seg(pS(), pN()); break;
          case 7: case 8: seg(pW(), pN()); break;
          case 5: // saddle: resolve by the cell-center mean
            if ((v00 + v10 + v11 + v01) / 4 > level) {
              seg(pW(), pN());
              seg(pS(), pE());
            } else {
              seg(pW(), pS());
              seg(pE(), pN());
            }
            break;
          case 10:
            if ((v00 + v10 + v11 + v01) / 4 > level) {
              seg(pW(), pS());
              seg(pE(), pN());
            } else {
              seg(pW(), pN());
              seg(pS(), pE());
            }
            break;
        }
      }
    }
  }
  return out;
}

/** Evenly spaced interior levels between a grid's min and max. */
export function defaultLevels(grid: GridDoc, n = 5): number[] {
  const [min, max] = valueRange(grid.values);
  if (!(max > min)) return [];
  const out: number[] = [];
  for (let k = 1; k <= n; k++) out.push(min + ((max - min) * k) / (n + 1));
  return out;
}
