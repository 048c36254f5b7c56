// Browser entry point: loads /api/meta, restores view state from the URL,
// wires the controls to the controller, and renders all layers onto one
// canvas. Every number shown (cell values, legend bounds, sample counts)
// comes from a server response.

import { httpApi } from "./api";
import { cssGradient } from "./colormap";
import { graticule, makeProjection, markerForIntensity, type Projection } from "./overlays";
import { contourSegments, defaultLevels, rasterize } from "./raster";
import { Controller, type View, type ViewState } from "./state";
import type {
  ConflictResponse,
  DensityResponse,
  MetaResponse,
  NetworkResponse,
} from "./types";
import { decodeState, encodeState } from "./url";

const api = httpApi(import.meta.env.VITE_API_BASE ?? "");

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a < 1e-3 || a >= 1e4) return v.toExponential(2);
  return String(Number(v.toPrecision(3)));
}

class CanvasRenderer implements View {
  private readonly canvas = el<HTMLCanvasElement>("map");
  private readonly ctx = this.canvas.getContext("2d")!;
  private readonly proj: Projection;

  private density: DensityResponse | null = null;
  private densityCanvas: HTMLCanvasElement | null = null;
  private conflict: ConflictResponse | null = null;
  private network: NetworkResponse | null = null;
  private state: ViewState | null = null;

  onStateChanged: (s: ViewState) => void = () => {};

  constructor(private readonly meta: MetaResponse) {
    const g = meta.grid;
    const width = 820;
    const height = Math.max(
      200,
      Math.round((width * (g.lat_max - g.lat_min)) / (g.lon_max - g.lon_min)),
    );
    this.canvas.width = width;
    this.canvas.height = height;
    this.proj = makeProjection(g, width, height);
  }

  stateChanged(s: ViewState): void {
    this.state = s;
    this.onStateChanged(s);
    this.draw();
  }

  renderDensity(d: DensityResponse, s: ViewState): void {
    this.state = s;
    this.density = d;
    const r = rasterize(d, s.scale);
    const off = document.createElement("canvas");
    off.width = r.width;
    off.height = r.height;
    off.getContext("2d")!.putImageData(new ImageData(r.rgba, r.width, r.height), 0, 0);
    this.densityCanvas = off;

    el("prompt").style.display = "none";
    el("notice").style.display = "none";
    el<HTMLElement>("legend").hidden = false;
    el("legendbar").style.background = cssGradient();
    el("legendmin").textContent = fmt(r.min);
    el("legendmax").textContent = fmt(r.max);
    const names = d.condition.ports
      .map((id) => this.meta.ports.find((p) => p.id === id)?.name ?? id)
      .join(", ");
    el("readout").textContent =
      `${d.condition.year} · ${names} · kernel scale ${d.condition.h}° · ` +
      `${d.sample_count} simulated individuals · ${s.scale} color scale`;
    this.draw();
  }

  renderDensityUnavailable(notice: string): void {
    this.density = null;
    this.densityCanvas = null;
    this.showNotice(notice);
    this.draw();
  }

  renderPrompt(message: string): void {
    this.density = null;
    this.densityCanvas = null;
    el<HTMLElement>("legend").hidden = true;
    el("readout").textContent = "";
    const prompt = el("prompt");
    prompt.textContent = message;
    prompt.style.display = "flex";
    this.draw();
  }

  renderBanner(message: string): void {
    const banner = el("banner");
    banner.textContent = message;
    banner.style.display = "block";
  }

  clearBanner(): void {
    el("banner").style.display = "none";
  }

  renderConflict(c: ConflictResponse, s: ViewState): void {
    this.state = s;
    this.conflict = c;
    this.draw();
  }

  clearConflict(): void {
    this.conflict = null;
    this.draw();
  }

  renderNetwork(n: NetworkResponse, s: ViewState): void {
    this.state = s;
    this.network = n;
    this.draw();
  }

  clearNetwork(): void {
    this.network = null;
    this.draw();
  }

  private showNotice(text: string): void {
    el<HTMLElement>("legend").hidden = true;
    el("readout").textContent = "";
    el("prompt").style.display = "none";
    const notice = el("notice");
    notice.textContent = text;
    notice.style.display = "block";
  }

  private draw(): void {
    const { ctx, proj } = this;
    const s = this.state;
    ctx.clearRect(0, 0, proj.width, proj.height);
    this.drawBase();
    if (this.densityCanvas && this.density) this.drawDensity();
    if (s?.overlays.conflictContours && this.conflict) this.drawContours(this.conflict);
    if (s?.overlays.network && this.network) this.drawNetwork(this.network);
    if (s?.overlays.conflictPoints && this.conflict) this.drawConflictPoints(this.conflict);
  }

  private drawBase(): void {
    const { ctx, proj } = this;
    ctx.fillStyle = "#dfe8ee";
    ctx.fillRect(0, 0, proj.width, proj.height);
    const g = graticule(this.meta.grid);
    ctx.strokeStyle = "rgba(60, 80, 100, 0.18)";
    ctx.fillStyle = "rgba(60, 80, 100, 0.55)";
    ctx.lineWidth = 1;
    ctx.font = "10px system-ui, sans-serif";
    for (const lon of g.lons) {
      const x = proj.x(lon);
      ctx.beginPath();
      ctx.moveTo(x, 0);
      ctx.lineTo(x, proj.height);
      ctx.stroke();
      ctx.fillText(`${lon}°E`, x + 3, proj.height - 4);
    }
    for (const lat of g.lats) {
      const y = proj.y(lat);
      ctx.beginPath();
      ctx.moveTo(0, y);
      ctx.lineTo(proj.width, y);
      ctx.stroke();
      ctx.fillText(`${lat}°N`, 3, y - 3);
    }
  }

  private drawDensity(): void {
    const { ctx, proj } = this;
    const d = this.density!;
    const [w, south, e, north] = d.bbox;
    const x = proj.x(w);
    const y = proj.y(north);
    ctx.imageSmoothingEnabled = false;
    ctx.drawImage(this.densityCanvas!, x, y, proj.x(e) - x, proj.y(south) - y);
  }

  private drawContours(c: ConflictResponse): void {
    const { ctx, proj } = this;
    ctx.strokeStyle = "rgba(140, 40, 30, 0.65)";
    ctx.lineWidth = 1;
    for (const [x1, y1, x2, y2] of contourSegments(c.surface, defaultLevels(c.surface))) {
      ctx.beginPath();
      ctx.moveTo(proj.x(x1), proj.y(y1));
      ctx.lineTo(proj.x(x2), proj.y(y2));
      ctx.stroke();
    }
  }

  private drawNetwork(n: NetworkResponse): void {
    const { ctx, proj } = this;
    const byId = new Map(n.nodes.map((nd) => [nd.id, nd]));
    ctx.strokeStyle = "rgba(40, 60, 90, 0.45)";
    ctx.lineWidth = 1;
    for (const [a, b] of n.edges) {
      const na = byId.get(a);
      const nb = byId.get(b);
      if (!na || !nb) continue;
      ctx.beginPath();
      ctx.moveTo(proj.x(na.lon), proj.y(na.lat));
      ctx.lineTo(proj.x(nb.lon), proj.y(nb.lat));
      ctx.stroke();
    }
    for (const nd of n.nodes) {
      const x = proj.x(nd.lon);
      const y = proj.y(nd.lat);
      if (nd.absorbing) {
        ctx.fillStyle = "#1d3a63";
        ctx.fillRect(x - 3, y - 3, 6, 6);
      } else {
        ctx.fillStyle = "rgba(40, 60, 90, 0.8)";
        ctx.beginPath();
        ctx.arc(x, y, 2, 0, Math.PI * 2);
        ctx.fill();
      }
    }
  }

  private drawConflictPoints(c: ConflictResponse): void {
    const { ctx, proj } = this;
    for (const pt of c.points) {
      const x = proj.x(pt.lon);
      const y = proj.y(pt.lat);
      ctx.fillStyle = "rgba(170, 30, 30, 0.85)";
      ctx.strokeStyle = "#fff";
      ctx.lineWidth = 1;
      ctx.beginPath();
      switch (markerForIntensity(pt.intensity)) {
        case "circle":
          ctx.arc(x, y, 4.5, 0, Math.PI * 2);
          break;
        case "triangle":
          ctx.moveTo(x, y - 5.5);
          ctx.lineTo(x + 5, y + 4);
          ctx.lineTo(x - 5, y + 4);
          ctx.closePath();
          break;
        case "square":
          ctx.rect(x - 4, y - 4, 8, 8);
          break;
      }
      ctx.fill();
      ctx.stroke();
    }
  }
}

function buildControls(meta: MetaResponse, controller: Controller): (s: ViewState) => void {
  const root = el("controls");
  root.removeAttribute("aria-busy");
  root.innerHTML = "";

  const field = (legend: string): HTMLFieldSetElement => {
    const fs = document.createElement("fieldset");
    const lg = document.createElement("legend");
    lg.textContent = legend;
    fs.appendChild(lg);
    root.appendChild(fs);
    return fs;
  };

  // year slider + play/pause
  const yearField = field(`Year (${meta.years[0]}–${meta.years[meta.years.length - 1]})`);
  const yearRow = document.createElement("div");
  yearRow.className = "rowline";
  const yearLabel = document.createElement("strong");
  const playBtn = document.createElement("button");
  playBtn.type = "button";
  yearRow.append(yearLabel, playBtn);
  const yearSlider = document.createElement("input");
  yearSlider.type = "range";
  yearSlider.min = "0";
  yearSlider.max = String(meta.years.length - 1);
  yearSlider.step = "1";
  yearField.append(yearRow, yearSlider);
  if (meta.skipped_years.length) {
    const note = document.createElement("div");
    note.className = "mini";
    note.textContent = `no active conflicts (not simulated): ${meta.skipped_years.join(", ")}`;
    yearField.appendChild(note);
  }
  yearSlider.addEventListener("input", () => {
    controller.dispatch({ kind: "set-year", year: meta.years[Number(yearSlider.value)] });
  });
  playBtn.addEventListener("click", () => {
    controller.dispatch({ kind: "set-playing", playing: !controller.state.playing });
  });

  // ports
  const portBoxes = new Map<string, HTMLInputElement>();
  const portField = field("Points of sale");
  for (const cls of ["coastal", "off-map"] as const) {
    const head = document.createElement("div");
    head.className = "mini";
    head.textContent = cls === "coastal" ? "Coastal ports" : "Off-map exits";
    portField.appendChild(head);
    for (const p of meta.ports.filter((q) => q.class === cls)) {
      const label = document.createElement("label");
      label.className = "row";
      const box = document.createElement("input");
      box.type = "checkbox";
      box.addEventListener("change", () => {
        controller.dispatch({ kind: "toggle-port", port: p.id });
      });
      const name = document.createElement("span");
      name.className = "port-name";
      name.textContent = p.name;
      label.append(box, name);
      portField.appendChild(label);
      portBoxes.set(p.id, box);
    }
  }
  const quickRow = document.createElement("div");
  quickRow.className = "rowline";
  const allCoastal = document.createElement("button");
  allCoastal.type = "button";
  allCoastal.textContent = "all coastal";
  allCoastal.addEventListener("click", () => {
    controller.dispatch({
      kind: "set-ports",
      ports: meta.ports.filter((p) => p.class === "coastal").map((p) => p.id),
    });
  });
  const none = document.createElement("button");
  none.type = "button";
  none.textContent = "clear";
  none.addEventListener("click", () => controller.dispatch({ kind: "set-ports", ports: [] }));
  quickRow.append(allCoastal, none);
  portField.appendChild(quickRow);

  // bandwidth
  const bwField = field("Kernel scale (degrees)");
  const bwRow = document.createElement("div");
  bwRow.className = "rowline";
  const bwLabel = document.createElement("strong");
  bwRow.appendChild(bwLabel);
  const bwSlider = document.createElement("input");
  bwSlider.type = "range";
  bwSlider.min = String(meta.bandwidth.min);
  bwSlider.max = String(meta.bandwidth.max);
  bwSlider.step = "0.05";
  bwField.append(bwRow, bwSlider);
  bwSlider.addEventListener("change", () => {
    controller.dispatch({ kind: "set-bandwidth", h: Number(bwSlider.value) });
  });

  // overlays
  const ovField = field("Overlays");
  const ovBoxes = {} as Record<"conflictPoints" | "conflictContours" | "network", HTMLInputElement>;
  const overlayDefs: Array<[keyof typeof ovBoxes, string]> = [
    ["conflictPoints", "conflict sites (circles attacked, triangles destroyed)"],
    ["conflictContours", "conflict intensity contours"],
    ["network", "trade network"],
  ];
  for (const [key, text] of overlayDefs) {
    const label = document.createElement("label");
    label.className = "row";
    const box = document.createElement("input");
    box.type = "checkbox";
    box.addEventListener("change", () => {
      controller.dispatch({ kind: "toggle-overlay", overlay: key });
    });
    const name = document.createElement("span");
    name.textContent = text;
    label.append(box, name);
    ovField.appendChild(label);
    ovBoxes[key] = box;
  }

  // color scale
  const scField = field("Color scale");
  const scSelect = document.createElement("select");
  for (const v of ["linear", "log"]) {
    const opt = document.createElement("option");
    opt.value = v;
    opt.textContent = v;
    scSelect.appendChild(opt);
  }
  scSelect.addEventListener("change", () => {
    controller.dispatch({ kind: "set-scale", scale: scSelect.value as "linear" | "log" });
  });
  scField.appendChild(scSelect);

  const version = document.createElement("div");
  version.className = "mini";
  version.textContent = `archive server v${meta.version}`;
  root.appendChild(version);

  return (s: ViewState) => {
    yearSlider.value = String(Math.max(0, meta.years.indexOf(s.year)));
    yearLabel.textContent = String(s.year);
    playBtn.textContent = s.playing ? "⏸ pause" : "⏵ play";
    for (const [id, box] of portBoxes) box.checked = s.ports.includes(id);
    bwSlider.value = String(s.bandwidth);
    bwLabel.textContent = `${s.bandwidth}°`;
    for (const [key] of overlayDefs) ovBoxes[key].checked = s.overlays[key];
    scSelect.value = s.scale;
  };
}

async function init(): Promise<void> {
  let meta: MetaResponse;
  try {
    meta = await api.meta();
  } catch (err) {
    const banner = el("banner");
    banner.style.display = "block";
    banner.textContent =
      `Could not load archive metadata (${String(err)}). ` +
      "Is `originsim serve --archive <dir>` running? Retrying in 3 s…";
    setTimeout(init, 3000);
    return;
  }

  const renderer = new CanvasRenderer(meta);
  const decoded = decodeState(window.location.search, meta);
  const controller = new Controller(api, renderer, meta, decoded.state);
  const syncControls = buildControls(meta, controller);

  let playTimer: ReturnType<typeof setInterval> | null = null;
  renderer.onStateChanged = (s) => {
    syncControls(s);
    history.replaceState(null, "", `?${encodeState(s)}`);
    if (s.playing && playTimer === null) {
      playTimer = setInterval(() => controller.dispatch({ kind: "step-year", delta: 1 }), 900);
    } else if (!s.playing && playTimer !== null) {
      clearInterval(playTimer);
      playTimer = null;
    }
  };
  window.addEventListener("popstate", () => {
    controller.replaceState(decodeState(window.location.search, meta).state);
  });

  for (const notice of decoded.notices) renderer.renderBanner(notice);
  controller.start();
}

init();
