import { ApiError } from "./api.js";
import { buildOverlay, type RouteOverlay } from "./overlay.js";
import type { Api, EndpointDoc, FloorDoc, MapDoc, RouteOptions } from "./types.js";

export type Brush = "free" | "block" | "poi" | "portal" | "origin" | "destination";

export interface CellEditRecord {
  floor: number;
  i: number;
  j: number;
  prev: boolean;
  next: boolean;
}

export interface Stroke {
  edits: CellEditRecord[];
}

export interface ViewTransform {
  scale: number; // pixels per cell
  panX: number;
  panY: number;
}

const MIN_SCALE = 3;
const MAX_SCALE = 64;

/**
 * All editor state and service interaction, DOM-free so it is unit-testable.
 * The canvas and controls observe this object and call its methods.
 */
export class EditorSession {
  doc: MapDoc | null = null;
  activeFloor = 0;
  pendingPortal: EndpointDoc | null = null;
  portalKind = "escalator";
  view: ViewTransform = { scale: 14, panX: 0, panY: 0 };
  origin: EndpointDoc | null = null;
  destination: EndpointDoc | null = null;
  overlay: RouteOverlay | null = null;
  banner: string | null = null;

  private brushMode: Brush = "block";
  private undoStack: Stroke[] = [];

  constructor(
    private readonly api: Api,
    readonly mapId: string,
  ) {}

  get brush(): Brush {
    return this.brushMode;
  }

  /** Switching away from the portal brush always discards the half-placed endpoint. */
  setBrush(brush: Brush): void {
    this.brushMode = brush;
    if (brush !== "portal") {
      this.pendingPortal = null;
    }
  }

  get undoDepth(): number {
    return this.undoStack.length;
  }

  /** True when the shown overlay predates the latest accepted edit. */
  get overlayStale(): boolean {
    return this.overlay !== null && this.doc !== null && this.overlay.revision < this.doc.revision;
  }

  async load(): Promise<void> {
    this.doc = await this.api.getMap(this.mapId);
    this.activeFloor = this.doc.floors[0]?.id ?? 0;
    this.undoStack = [];
    this.overlay = null;
    this.pendingPortal = null;
    this.origin = null;
    this.destination = null;
    this.banner = null;
  }

  floorDoc(floor: number): FloorDoc {
    const found = this.doc?.floors.find((f) => f.id === floor);
    if (!found) throw new Error(`no floor ${floor} loaded`);
    return found;
  }

  isFree(floor: number, i: number, j: number): boolean {
    const f = this.floorDoc(floor);
    return i >= 0 && i < f.rows && j >= 0 && j < f.cols && f.grid[i][j] === "1";
  }

  private applyLocalCell(floor: number, i: number, j: number, free: boolean, revision: number): void {
    const f = this.floorDoc(floor);
    const row = f.grid[i];
    f.grid[i] = row.slice(0, j) + (free ? "1" : "0") + row.slice(j + 1);
    if (this.doc) this.doc.revision = revision;
  }

  /** One drag gesture in block/free mode: apply every changed cell, record one undo stroke. */
  async paintStroke(cells: Iterable<{ i: number; j: number }>): Promise<Stroke | null> {
    if (this.brushMode !== "block" && this.brushMode !== "free") return null;
    const target = this.brushMode === "free";
    this.banner = null;
    const edits: CellEditRecord[] = [];
    const seen = new Set<string>();
    for (const { i, j } of cells) {
      const key = `${i}:${j}`;
      if (seen.has(key)) continue;
      seen.add(key);
      if (this.isFree(this.activeFloor, i, j) === target) continue;
      try {
        const revision = await this.api.setCell(this.mapId, this.activeFloor, i, j, target);
        this.applyLocalCell(this.activeFloor, i, j, target, revision);
        edits.push({ floor: this.activeFloor, i, j, prev: !target, next: target });
      } catch (err) {
        if (err instanceof ApiError) {
          this.banner = err.message; // e.g. the edit would strand a POI or portal
          continue;
        }
        throw err;
      }
    }
    if (edits.length === 0) return null;
    const stroke = { edits };
    this.undoStack.push(stroke);
    return stroke;
  }

  /** Revert the most recent stroke, newest edit first. */
  async undo(): Promise<boolean> {
    const stroke = this.undoStack.pop();
    if (!stroke) return false;
    for (const edit of [...stroke.edits].reverse()) {
      const revision = await this.api.setCell(this.mapId, edit.floor, edit.i, edit.j, edit.prev);
      this.applyLocalCell(edit.floor, edit.i, edit.j, edit.prev, revision);
    }
    return true;
  }

  /** Single click dispatch for the non-drag brushes. */
  async clickCell(i: number, j: number, poiName?: string): Promise<void> {
    switch (this.brushMode) {
      case "block":
      case "free":
        await this.paintStroke([{ i, j }]);
        return;
      case "origin":
      case "destination": {
        if (!this.isFree(this.activeFloor, i, j)) {
          this.banner = `(${i}, ${j}) is blocked; pick a free cell`;
          return;
        }
        const pick = { floor: this.activeFloor, i, j };
        if (this.brushMode === "origin") this.origin = pick;
        else this.destination = pick;
        this.banner = null;
        return;
      }
      case "poi": {
        if (!poiName) {
          this.banner = "POI needs a name";
          return;
        }
        await this.guarded(async () => {
          await this.api.addPoi(this.mapId, { name: poiName, floor: this.activeFloor, i, j });
          await this.refresh();
        });
        return;
      }
      case "portal": {
        const here = { floor: this.activeFloor, i, j };
        if (!this.isFree(here.floor, i, j)) {
          this.banner = "portal endpoints must be free cells";
          return;
        }
        if (this.pendingPortal === null) {
          this.pendingPortal = here;
          return;
        }
        if (this.pendingPortal.floor === this.activeFloor) {
          this.banner = "portal endpoints must be on different floors";
          return;
        }
        const first = this.pendingPortal;
        await this.guarded(async () => {
          await this.api.addPortal(this.mapId, this.portalKind, first, here);
          await this.refresh();
          this.pendingPortal = null;
        });
        return;
      }
    }
  }

  async removePoi(name: string): Promise<void> {
    await this.guarded(async () => {
      await this.api.removePoi(this.mapId, name);
      await this.refresh();
    });
  }

  async removePortal(index: number): Promise<void> {
    await this.guarded(async () => {
      await this.api.removePortal(this.mapId, index);
      await this.refresh();
    });
  }

  /** Re-fetch the map document, keeping view/picks; used after structural edits. */
  async refresh(): Promise<void> {
    this.doc = await this.api.getMap(this.mapId);
  }

  async queryRoute(options: RouteOptions = {}): Promise<RouteOverlay | null> {
    if (!this.origin || !this.destination) {
      this.banner = "pick an origin and a destination first";
      return null;
    }
    try {
      const route = await this.api.route(this.mapId, this.origin, this.destination, options);
      this.overlay = buildOverlay(route);
      this.banner = null;
      return this.overlay;
    } catch (err) {
      if (err instanceof ApiError && err.code === "NoPath") {
        this.overlay = null;
        this.banner = "No path between the selected endpoints.";
        return null;
      }
      if (err instanceof ApiError) {
        this.banner = err.message;
        return null;
      }
      throw err;
    }
  }

  private async guarded(action: () => Promise<void>): Promise<void> {
    try {
      await action();
      this.banner = null;
    } catch (err) {
      if (err instanceof ApiError) {
        this.banner = err.message;
        return;
      }
      throw err;
    }
  }

  zoomBy(factor: number, centerX = 0, centerY = 0): void {
    const next = Math.min(MAX_SCALE, Math.max(MIN_SCALE, this.view.scale * factor));
    const applied = next / this.view.scale;
    // keep the zoom center fixed on screen
    this.view.panX = centerX - (centerX - this.view.panX) * applied;
    this.view.panY = centerY - (centerY - this.view.panY) * applied;
    this.view.scale = next;
  }

  panBy(dx: number, dy: number): void {
    this.view.panX += dx;
    this.view.panY += dy;
  }
}
