// Thin fetch client for the five read-only endpoints. Every method returns
// the parsed body or throws ApiError carrying the HTTP status and the
// server's detail message, so callers can distinguish "bad request" from
// "nothing matches this condition" (422) without string matching.

import type {
  ConflictResponse,
  DensityResponse,
  MetaResponse,
  NetworkResponse,
  SankeyResponse,
} from "./types";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

export interface Api {
  meta(): Promise<MetaResponse>;
  density(year: number, ports: string[], h: number): Promise<DensityResponse>;
  conflict(year: number): Promise<ConflictResponse>;
  network(): Promise<NetworkResponse>;
  sankey(ports: string[], years?: number[]): Promise<SankeyResponse>;
}

async function getJson<T>(url: string): Promise<T> {
  let res: Response;
  try {
    res = await fetch(url, { headers: { accept: "application/json" } });
  } catch (err) {
    throw new ApiError(0, `network error: ${String(err)}`);
  }
  if (!res.ok) {
    let detail = `${res.status} ${res.statusText}`;
    try {
      const body = (await res.json()) as { detail?: unknown };
      if (typeof body.detail === "string") detail = body.detail;
    } catch {
      // non-JSON error body: keep the status line
    }
    throw new ApiError(res.status, detail);
  }
  return (await res.json()) as T;
}

export function httpApi(base = ""): Api {
  const u = (path: string, params?: Record<string, string>) => {
    const q = params ? `?${new URLSearchParams(params)}` : "";
    return `${base}${path}${q}`;
  };
  return {
    meta: () => getJson<MetaResponse>(u("/api/meta")),
    density: (year, ports, h) =>
      getJson<DensityResponse>(
        u("/api/density", { year: String(year), ports: ports.join(","), h: String(h) }),
      ),
    conflict: (year) => getJson<ConflictResponse>(u("/api/conflict", { year: String(year) })),
    network: () => getJson<NetworkResponse>(u("/api/network")),
    sankey: (ports, years) =>
      getJson<SankeyResponse>(
        u("/api/sankey", {
          ports: ports.join(","),
          ...(years && years.length ? { years: years.join(",") } : {}),
        }),
      ),
  };
}
