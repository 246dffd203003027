import type { Api, EndpointDoc, MapDoc, MapSummary, PoiDoc, RouteDoc, RouteOptions } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(url, init);
  const body = await resp.json().catch(() => null);
  if (!resp.ok) {
    const err = body?.error ?? {};
    throw new ApiError(err.code ?? `HTTP${resp.status}`, err.message ?? resp.statusText, resp.status);
  }
  return body as T;
}

function post(payload: unknown): RequestInit {
  return {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(payload),
  };
}

/** HTTP client for the routing/editing service. */
export class Client implements Api {
  constructor(private readonly base: string = "") {}

  async listMaps(): Promise<MapSummary[]> {
    const doc = await request<{ maps: MapSummary[] }>(`${this.base}/maps`);
    return doc.maps;
  }

  getMap(id: string): Promise<MapDoc> {
    return request<MapDoc>(`${this.base}/maps/${encodeURIComponent(id)}`);
  }

  async setCell(id: string, floor: number, i: number, j: number, free: boolean): Promise<number> {
    const doc = await request<{ revision: number }>(
      `${this.base}/maps/${encodeURIComponent(id)}/cells`,
      post({ floor, i, j, free }),
    );
    return doc.revision;
  }

  async addPoi(id: string, poi: PoiDoc): Promise<number> {
    const doc = await request<{ revision: number }>(
      `${this.base}/maps/${encodeURIComponent(id)}/pois`,
      post(poi),
    );
    return doc.revision;
  }

  async removePoi(id: string, name: string): Promise<number> {
    const doc = await request<{ revision: number }>(
      `${this.base}/maps/${encodeURIComponent(id)}/pois/${encodeURIComponent(name)}`,
      { method: "DELETE" },
    );
    return doc.revision;
  }

  async addPortal(
    id: string,
    kind: string,
    a: EndpointDoc,
    b: EndpointDoc,
    cost = 1.0,
  ): Promise<number> {
    const doc = await request<{ revision: number }>(
      `${this.base}/maps/${encodeURIComponent(id)}/portals`,
      post({ kind, a, b, cost }),
    );
    return doc.revision;
  }

  async removePortal(id: string, index: number): Promise<number> {
    const doc = await request<{ revision: number }>(
      `${this.base}/maps/${encodeURIComponent(id)}/portals/${index}`,
      { method: "DELETE" },
    );
    return doc.revision;
  }

  route(
    id: string,
    origin: string | EndpointDoc,
    destination: string | EndpointDoc,
    options: RouteOptions = {},
  ): Promise<RouteDoc> {
    return request<RouteDoc>(
      `${this.base}/maps/${encodeURIComponent(id)}/route`,
      post({
        origin,
        destination,
        corner_rule: options.cornerRule ?? "permissive",
        narrate: options.narrate ?? "template",
      }),
    );
  }
}
