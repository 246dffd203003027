import { Client } from "./api.js";
import { cellAt, draw } from "./render.js";
import { EditorSession, type Brush } from "./state.js";

const api = new Client("");

const canvas = document.getElementById("grid") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const mapSelect = document.getElementById("map-select") as HTMLSelectElement;
const floorBar = document.getElementById("floors")!;
const brushBar = document.getElementById("brushes")!;
const bannerEl = document.getElementById("banner")!;
const staleEl = document.getElementById("stale")!;
const instructionsEl = document.getElementById("instructions")!;
const readoutEl = document.getElementById("readout")!;
const poiListEl = document.getElementById("poi-list")!;
const undoButton = document.getElementById("undo") as HTMLButtonElement;
const routeButton = document.getElementById("route") as HTMLButtonElement;
const cornerSelect = document.getElementById("corner-rule") as HTMLSelectElement;

const BRUSHES: { brush: Brush; label: string; key: string }[] = [
  { brush: "block", label: "Block (b)", key: "b" },
  { brush: "free", label: "Free (f)", key: "f" },
  { brush: "poi", label: "POI (p)", key: "p" },
  { brush: "portal", label: "Portal (t)", key: "t" },
  { brush: "origin", label: "Origin (o)", key: "o" },
  { brush: "destination", label: "Destination (d)", key: "d" },
];

let session: EditorSession | null = null;
let dragging = false;
let strokeCells: { i: number; j: number }[] = [];
let panning = false;
let panLast: [number, number] = [0, 0];

function resize() {
  canvas.width = canvas.clientWidth;
  canvas.height = canvas.clientHeight;
  repaint();
}

function repaint() {
  if (!session || !session.doc) return;
  draw(ctx, session);
  bannerEl.textContent = session.banner ?? "";
  bannerEl.classList.toggle("visible", session.banner !== null);
  staleEl.classList.toggle("visible", session.overlayStale);
  undoButton.disabled = session.undoDepth === 0;
  instructionsEl.textContent = session.overlay ? session.overlay.instructions.join("\n") : "";
  readoutEl.textContent = session.overlay
    ? `cost ${session.overlay.cost.toFixed(4)} · search ${session.overlay.searchMs.toFixed(2)} ms`
    : "";
  renderFloors();
  renderPois();
  for (const el of brushBar.querySelectorAll("button")) {
    el.classList.toggle("active", el.dataset.brush === session.brush);
  }
}

function renderFloors() {
  if (!session?.doc) return;
  floorBar.replaceChildren(
    ...session.doc.floors.map((floor) => {
      const button = document.createElement("button");
      button.textContent = floor.label;
      button.classList.toggle("active", floor.id === session!.activeFloor);
      button.onclick = () => {
        session!.activeFloor = floor.id;
        repaint();
      };
      return button;
    }),
  );
}

function renderPois() {
  if (!session?.doc) return;
  poiListEl.replaceChildren(
    ...session.doc.pois.map((poi) => {
      const li = document.createElement("li");
      li.textContent = `${poi.name} (floor ${poi.floor}, ${poi.i},${poi.j})`;
      const del = document.createElement("button");
      del.textContent = "×";
      del.onclick = async () => {
        await session!.removePoi(poi.name);
        repaint();
      };
      li.appendChild(del);
      return li;
    }),
  );
}

async function selectMap(id: string) {
  session = new EditorSession(api, id);
  await session.load();
  repaint();
}

canvas.addEventListener("mousedown", (ev) => {
  if (!session) return;
  if (ev.button === 1 || ev.shiftKey) {
    panning = true;
    panLast = [ev.offsetX, ev.offsetY];
    return;
  }
  const cell = cellAt(session, ev.offsetX, ev.offsetY);
  if (!cell) return;
  if (session.brush === "block" || session.brush === "free") {
    dragging = true;
    strokeCells = [cell];
  } else if (session.brush === "poi") {
    const name = window.prompt("POI name?");
    if (name) void session.clickCell(cell.i, cell.j, name).then(repaint);
  } else {
    void session.clickCell(cell.i, cell.j).then(repaint);
  }
});

canvas.addEventListener("mousemove", (ev) => {
  if (!session) return;
  if (panning) {
    session.panBy(ev.offsetX - panLast[0], ev.offsetY - panLast[1]);
    panLast = [ev.offsetX, ev.offsetY];
    repaint();
    return;
  }
  if (!dragging) return;
  const cell = cellAt(session, ev.offsetX, ev.offsetY);
  if (cell) {
    strokeCells.push(cell);
    repaint();
  }
});

window.addEventListener("mouseup", () => {
  panning = false;
  if (!dragging || !session) return;
  dragging = false;
  const cells = strokeCells;
  strokeCells = [];
  void session.paintStroke(cells).then(repaint);
});

canvas.addEventListener("wheel", (ev) => {
  if (!session) return;
  ev.preventDefault();
  session.zoomBy(ev.deltaY < 0 ? 1.15 : 1 / 1.15, ev.offsetX, ev.offsetY);
  repaint();
});

window.addEventListener("keydown", (ev) => {
  if (!session || ev.target instanceof HTMLInputElement) return;
  const byKey = BRUSHES.find((b) => b.key === ev.key);
  if (byKey) {
    session.setBrush(byKey.brush);
    repaint();
  } else if (ev.key === "u") {
    void session.undo().then(repaint);
  } else if (ev.key === "r") {
    void runRoute();
  }
});

async function runRoute() {
  if (!session) return;
  await session.queryRoute({ cornerRule: cornerSelect.value as "permissive" | "strict" });
  repaint();
}

routeButton.onclick = () => void runRoute();
undoButton.onclick = () => session && void session.undo().then(repaint);
for (const { brush, label } of BRUSHES) {
  const button = document.createElement("button");
  button.textContent = label;
  button.dataset.brush = brush;
  button.onclick = () => {
    session?.setBrush(brush);
    repaint();
  };
  brushBar.appendChild(button);
}

window.addEventListener("resize", resize);

void (async () => {
  const maps = await api.listMaps();
  mapSelect.replaceChildren(
    ...maps.map((m) => {
      const option = document.createElement("option");
      option.value = m.id;
      option.textContent = `${m.name} (${m.floors} floor${m.floors === 1 ? "" : "s"})`;
      return option;
    }),
  );
  mapSelect.onchange = () => void selectMap(mapSelect.value);
  if (maps.length > 0) {
    await selectMap(maps[0].id);
  }
  resize();
})();
