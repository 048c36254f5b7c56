// Pure geometry for the overlay layers: marker shapes by conflict
// intensity and the lon/lat-to-canvas projection. Actual drawing lives in
// main.ts; keeping this module DOM-free lets the tests cover it directly.

export type MarkerShape = "circle" | "triangle" | "square";

// 2 = attacked (battles: circles), 3 = destroyed (triangles); anything
// else (e.g. foundings when enabled) gets a square so it stays distinct.
export function markerForIntensity(code: number): MarkerShape {
  if (code === 2) return "circle";
  if (code === 3) return "triangle";
  return "square";
}

export interface Projection {
  x(lon: number): number;
  y(lat: number): number;
  readonly width: number;
  readonly height: number;
}

/**
 * Equirectangular fit of a lon/lat bounding box into width x height
 * pixels. Latitude increases upward, canvas y downward.
 */
export function makeProjection(
  bounds: { lon_min: number; lat_min: number; lon_max: number; lat_max: number },
  width: number,
  height: number,
): Projection {
  const dx = bounds.lon_max - bounds.lon_min;
  const dy = bounds.lat_max - bounds.lat_min;
  return {
    width,
    height,
    x: (lon) => ((lon - bounds.lon_min) / dx) * width,
    y: (lat) => height - ((lat - bounds.lat_min) / dy) * height,
  };
}

/** Graticule line positions (whole degrees) for the base layer. */
export function graticule(bounds: {
  lon_min: number;
  lat_min: number;
  lon_max: number;
  lat_max: number;
}): { lons: number[]; lats: number[] } {
  const lons: number[] = [];
  const lats: number[] = [];
  for (let l = Math.ceil(bounds.lon_min); l <= Math.floor(bounds.lon_max); l++) lons.push(l);
  for (let l = Math.ceil(bounds.lat_min); l <= Math.floor(bounds.lat_max); l++) lats.push(l);
  return { lons, lats };
}
