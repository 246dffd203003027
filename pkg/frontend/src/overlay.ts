import type { RouteDoc } from "./types.js";

export interface PolylineSegment {
  floor: number;
  cells: [number, number][]; // [i, j] in path order
}

export interface FloorTransition {
  fromFloor: number;
  toFloor: number;
  at: [number, number]; // exit cell on fromFloor
  to: [number, number]; // entry cell on toFloor
}

export interface RouteOverlay {
  segments: PolylineSegment[];
  transitions: FloorTransition[];
  instructions: string[]; // service guide lines, verbatim
  cost: number;
  searchMs: number;
  revision: number; // map revision the overlay was computed against
}

/** Split the node list at floor changes into per-floor polylines. */
export function buildOverlay(route: RouteDoc): RouteOverlay {
  const segments: PolylineSegment[] = [];
  const transitions: FloorTransition[] = [];
  for (const [floor, i, j] of route.path.nodes) {
    const tail = segments[segments.length - 1];
    if (tail && tail.floor === floor) {
      tail.cells.push([i, j]);
    } else {
      if (tail) {
        const exit = tail.cells[tail.cells.length - 1];
        transitions.push({ fromFloor: tail.floor, toFloor: floor, at: exit, to: [i, j] });
      }
      segments.push({ floor, cells: [[i, j]] });
    }
  }
  return {
    segments,
    transitions,
    instructions: [...route.guide.lines],
    cost: route.path.cost,
    searchMs: route.timings_ms.search,
    revision: route.revision,
  };
}

export function segmentEdgeCount(overlay: RouteOverlay): number {
  return overlay.segments.reduce((acc, seg) => acc + seg.cells.length - 1, 0);
}
