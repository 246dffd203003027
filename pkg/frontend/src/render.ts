import type { EditorSession } from "./state.js";

const COLORS = {
  free: "#f8f7f2",
  blocked: "#3d3a34",
  gridline: "rgba(0,0,0,0.08)",
  poi: "#b3261e",
  portal: "#6750a4",
  pendingPortal: "#b388ff",
  origin: "#0b57d0",
  destination: "#146c2e",
  route: "#e8710a",
  routeStale: "rgba(232,113,10,0.35)",
  transition: "#6750a4",
};

export function cellAt(session: EditorSession, x: number, y: number): { i: number; j: number } | null {
  const { scale, panX, panY } = session.view;
  const j = Math.floor((x - panX) / scale);
  const i = Math.floor((y - panY) / scale);
  const floor = session.floorDoc(session.activeFloor);
  if (i < 0 || i >= floor.rows || j < 0 || j >= floor.cols) return null;
  return { i, j };
}

export function draw(ctx: CanvasRenderingContext2D, session: EditorSession): void {
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);
  if (!session.doc) return;
  const floor = session.floorDoc(session.activeFloor);
  const { scale, panX, panY } = session.view;

  for (let i = 0; i < floor.rows; i++) {
    const row = floor.grid[i];
    for (let j = 0; j < floor.cols; j++) {
      ctx.fillStyle = row[j] === "1" ? COLORS.free : COLORS.blocked;
      ctx.fillRect(panX + j * scale, panY + i * scale, scale, scale);
    }
  }

  if (scale >= 7) {
    ctx.strokeStyle = COLORS.gridline;
    ctx.lineWidth = 1;
    ctx.beginPath();
    for (let i = 0; i <= floor.rows; i++) {
      ctx.moveTo(panX, panY + i * scale);
      ctx.lineTo(panX + floor.cols * scale, panY + i * scale);
    }
    for (let j = 0; j <= floor.cols; j++) {
      ctx.moveTo(panX + j * scale, panY);
      ctx.lineTo(panX + j * scale, panY + floor.rows * scale);
    }
    ctx.stroke();
  }

  const center = (i: number, j: number): [number, number] => [
    panX + (j + 0.5) * scale,
    panY + (i + 0.5) * scale,
  ];

  const overlay = session.overlay;
  if (overlay) {
    ctx.strokeStyle = session.overlayStale ? COLORS.routeStale : COLORS.route;
    ctx.lineWidth = Math.max(2, scale * 0.35);
    ctx.lineCap = "round";
    ctx.lineJoin = "round";
    if (session.overlayStale) ctx.setLineDash([scale * 0.6, scale * 0.5]);
    for (const segment of overlay.segments) {
      if (segment.floor !== session.activeFloor || segment.cells.length < 2) continue;
      ctx.beginPath();
      const [x0, y0] = center(segment.cells[0][0], segment.cells[0][1]);
      ctx.moveTo(x0, y0);
      for (const [i, j] of segment.cells.slice(1)) {
        const [x, y] = center(i, j);
        ctx.lineTo(x, y);
      }
      ctx.stroke();
    }
    ctx.setLineDash([]);
    for (const transition of overlay.transitions) {
      const spot =
        transition.fromFloor === session.activeFloor
          ? transition.at
          : transition.toFloor === session.activeFloor
            ? transition.to
            : null;
      if (!spot) continue;
      const [x, y] = center(spot[0], spot[1]);
      ctx.fillStyle = COLORS.transition;
      ctx.beginPath();
      ctx.arc(x, y, Math.max(4, scale * 0.45), 0, Math.PI * 2);
      ctx.fill();
      ctx.fillStyle = "#fff";
      ctx.font = `${Math.max(8, scale * 0.5)}px sans-serif`;
      ctx.textAlign = "center";
      ctx.textBaseline = "middle";
      ctx.fillText(transition.fromFloor === session.activeFloor ? "↕" : "↕", x, y);
    }
  }

  const dot = (i: number, j: number, color: string, radius: number) => {
    const [x, y] = center(i, j);
    ctx.fillStyle = color;
    ctx.beginPath();
    ctx.arc(x, y, radius, 0, Math.PI * 2);
    ctx.fill();
  };

  for (const poi of session.doc.pois) {
    if (poi.floor !== session.activeFloor) continue;
    dot(poi.i, poi.j, COLORS.poi, Math.max(3, scale * 0.3));
  }
  for (const portal of session.doc.portals) {
    for (const end of [portal.a, portal.b]) {
      if (end.floor !== session.activeFloor) continue;
      dot(end.i, end.j, COLORS.portal, Math.max(3, scale * 0.3));
    }
  }
  if (session.pendingPortal && session.pendingPortal.floor === session.activeFloor) {
    dot(session.pendingPortal.i, session.pendingPortal.j, COLORS.pendingPortal, Math.max(4, scale * 0.4));
  }
  if (session.origin && session.origin.floor === session.activeFloor) {
    dot(session.origin.i, session.origin.j, COLORS.origin, Math.max(4, scale * 0.38));
  }
  if (session.destination && session.destination.floor === session.activeFloor) {
    dot(session.destination.i, session.destination.j, COLORS.destination, Math.max(4, scale * 0.38));
  }
}
