// Fixed colormap for the heatmap layer: viridis, sampled at 64 stops and
// linearly interpolated to a 256-entry lookup table. Viridis is
// perceptually uniform and its lightness increases strictly with the
// mapped value, so pixel brightness preserves the ordering of the
// underlying data (the rendering-fidelity tests rely on this).

export type Rgb = readonly [number, number, number];

const STOPS: ReadonlyArray<Rgb> = [
  [68, 1, 84], [70, 7, 90], [71, 13, 96], [71, 19, 101], [72, 24, 106], [72, 29, 111], [72, 35, 116], [72, 40, 120],
  [71, 45, 123], [70, 50, 126], [69, 55, 129], [68, 59, 132], [66, 64, 134], [64, 69, 136], [62, 73, 137], [61, 78, 138],
  [58, 83, 139], [56, 88, 140], [54, 92, 141], [52, 96, 141], [50, 100, 142], [49, 104, 142], [47, 108, 142], [45, 112, 142],
  [44, 115, 142], [42, 119, 142], [41, 123, 142], [39, 127, 142], [38, 130, 142], [36, 134, 142], [35, 138, 141], [33, 142, 141],
  [32, 146, 140], [31, 150, 139], [31, 154, 138], [31, 158, 137], [31, 161, 135], [33, 165, 133], [35, 169, 131], [38, 173, 129],
  [42, 176, 127], [47, 180, 124], [53, 183, 121], [59, 187, 117], [66, 190, 113], [74, 193, 109], [82, 197, 105], [90, 200, 100],
  [101, 203, 94], [110, 206, 88], [119, 209, 83], [129, 211, 77], [139, 214, 70], [149, 216, 64], [160, 218, 57], [170, 220, 50],
  [181, 222, 43], [192, 223, 37], [202, 225, 31], [213, 226, 26], [223, 227, 24], [234, 229, 26], [244, 230, 30], [253, 231, 37],
];

/** Color for t in [0, 1] (clamped). */
export function colorAt(t: number): Rgb {
  const x = Math.min(1, Math.max(0, t)) * (STOPS.length - 1);
  const i = Math.min(STOPS.length - 2, Math.floor(x));
  const f = x - i;
  const a = STOPS[i];
  const b = STOPS[i + 1];
  return [
    Math.round(a[0] + (b[0] - a[0]) * f),
    Math.round(a[1] + (b[1] - a[1]) * f),
    Math.round(a[2] + (b[2] - a[2]) * f),
  ];
}

/** 256-entry RGB lookup table (length 768). */
export function lut256(): Uint8Array {
  const out = new Uint8Array(256 * 3);
  for (let k = 0; k < 256; k++) {
    const [r, g, b] = colorAt(k / 255);
    out[k * 3] = r;
    out[k * 3 + 1] = g;
    out[k * 3 + 2] = b;
  }
  return out;
}

/** Relative luminance (BT.709), monotone along the colormap. */
export function luminance(r: number, g: number, b: number): number {
  return 0.2126 * r + 0.7152 * g + 0.0722 * b;
}

/** CSS gradient string for the legend bar. */
export function cssGradient(steps = 16): string {
  const parts: string[] = [];
  for (let k = 0; k < steps; k++) {
    const t = k / (steps - 1);
    const [r, g, b] = colorAt(t);
    parts.push(`rgb(${r},${g},${b}) ${Math.round(t * 100)}%`);
  }
  return `linear-gradient(to right, ${parts.join(", ")})`;
}
