// Wire types mirroring the service protocol.

export interface MapSummary {
  id: string;
  name: string;
  floors: number;
  revision: number;
}

export interface FloorDoc {
  id: number;
  label: string;
  rows: number;
  cols: number;
  grid: string[]; // row strings of 0/1, 1 = walkable
}

export interface EndpointDoc {
  floor: number;
  i: number;
  j: number;
}

export interface PortalDoc {
  index: number;
  kind: string;
  a: EndpointDoc;
  b: EndpointDoc;
  cost: number;
}

export interface PoiDoc {
  name: string;
  floor: number;
  i: number;
  j: number;
}

export interface MapDoc {
  id: string;
  name: string;
  revision: number;
  meters_per_cell: number | null;
  floors: FloorDoc[];
  portals: PortalDoc[];
  pois: PoiDoc[];
}

export interface RouteDoc {
  path: { nodes: [number, number, number][]; cost: number };
  terse: string;
  guide: { source: string; lines: string[] };
  stats: { expanded_nodes: number; pushed_nodes: number };
  timings_ms: { search: number; compress: number; narrate: number };
  revision: number;
}

export interface RouteOptions {
  cornerRule?: "permissive" | "strict";
  narrate?: "template" | "lm";
}

/** Client surface the editor session talks to; real HTTP or a test fake. */
export interface Api {
  listMaps(): Promise<MapSummary[]>;
  getMap(id: string): Promise<MapDoc>;
  setCell(id: string, floor: number, i: number, j: number, free: boolean): Promise<number>;
  addPoi(id: string, poi: PoiDoc): Promise<number>;
  removePoi(id: string, name: string): Promise<number>;
  addPortal(id: string, kind: string, a: EndpointDoc, b: EndpointDoc, cost?: number): Promise<number>;
  removePortal(id: string, index: number): Promise<number>;
  route(
    id: string,
    origin: string | EndpointDoc,
    destination: string | EndpointDoc,
    options?: RouteOptions,
  ): Promise<RouteDoc>;
}
