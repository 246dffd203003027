"""Shared fixtures: canned buildings, random instance generation, a stub completion server."""

from __future__ import annotations

import json
import threading
from contextlib import contextmanager
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from gridnav.gridmap import BuildingMap, Floor, Grid, NodeRef, Poi, Portal, node


def grid_of(rows: list[str]) -> Grid:
    return Grid.from_row_strings(rows)


def single_floor(name: str, rows: list[str], pois=(), label="Ground Floor") -> BuildingMap:
    return BuildingMap(name=name, floors=(Floor(0, label, grid_of(rows)),), pois=tuple(pois))


def two_floor_fixture() -> BuildingMap:
    """Two 8x12 floors joined by one escalator; POIs on both floors."""
    ground = grid_of(
        [
            "111111011111",
            "111111011111",
            "111111011111",
            "111111011111",
            "111111011111",
            "111111011111",
            "111111111111",
            "111111111111",
        ]
    )
    first = grid_of(
        [
            "111111111111",
            "111111111111",
            "111111111111",
            "110000001111",
            "111111111111",
            "111111111111",
            "111111111111",
            "111111111111",
        ]
    )
    return BuildingMap(
        name="Two Floor Fixture",
        floors=(Floor(0, "Ground Floor", ground), Floor(1, "First Floor", first)),
        portals=(Portal("escalator", node(0, 1, 10), node(1, 1, 10)),),
        pois=(Poi("Entrance", node(0, 6, 1)), Poi("Cafe", node(1, 6, 3))),
    )


def corridor_fixture() -> BuildingMap:
    """A single one-cell-wide corridor; the only route between its two POIs."""
    rows = [
        "000000000",
        "000000000",
        "111111111",
        "000000000",
        "000000000",
    ]
    return single_floor(
        "Corridor Fixture",
        rows,
        pois=(Poi("West End", node(0, 2, 0)), Poi("East End", node(0, 2, 8))),
    )


def random_building(seed: int, rows: int, cols: int, density: float, name=None) -> BuildingMap:
    """Seeded random single-floor map; each cell blocked with probability `density`."""
    rng = np.random.default_rng(seed)
    cells = rng.random((rows, cols)) >= density
    if int(cells.sum()) < 2:  # degenerate draw; reroll deterministically
        return random_building(seed + 104729, rows, cols, density, name)
    return BuildingMap(
        name=name or f"random-{seed}",
        floors=(Floor(0, "Ground Floor", Grid(cells)),),
    )


def free_nodes(building: BuildingMap) -> list[NodeRef]:
    out = []
    for fl in building.floors:
        ii, jj = np.nonzero(fl.grid.cells)
        out.extend(node(fl.id, int(i), int(j)) for i, j in zip(ii, jj))
    return out


def random_pair(building: BuildingMap, rng) -> tuple[NodeRef, NodeRef]:
    pool = free_nodes(building)
    a = pool[rng.randrange(len(pool))]
    b = pool[rng.randrange(len(pool))]
    while b == a:
        b = pool[rng.randrange(len(pool))]
    return a, b


def latency_fixture() -> BuildingMap:
    """120x190 grid, ~40% blocked, used for search-time measurements."""
    return random_building(seed=20260809, rows=120, cols=190, density=0.40, name="latency-fixture")


def mall_floor_grid(rows: int, cols: int, seed: int, block_h: int = 10, block_w: int = 14,
                    lane: int = 2) -> Grid:
    """Shopping-mall style floor: rectangular shop blocks separated by corridors."""
    rng = np.random.default_rng(seed)
    cells = np.ones((rows, cols), dtype=bool)
    i = lane
    while i + 1 < rows:
        bh = block_h + int(rng.integers(-2, 3))
        j = lane
        while j + 1 < cols:
            bw = block_w + int(rng.integers(-3, 4))
            if rng.random() > 0.12:  # leave a few open plazas
                cells[i:min(i + bh, rows - lane), j:min(j + bw, cols - lane)] = False
            j += bw + lane
        i += bh + lane
    return Grid(cells)


@contextmanager
def completion_stub(text: str | None = None, *, status: int = 200, body: dict | None = None,
                    raw: bytes | None = None, delay: float = 0.0, stats: dict | None = None):
    """Local HTTP endpoint answering every POST with a canned completion.

    When a `stats` dict is supplied it records peak concurrent requests
    ("peak") and the total request count ("total").
    """
    lock = threading.Lock()
    in_flight = {"now": 0}

    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            if stats is not None:
                with lock:
                    in_flight["now"] += 1
                    stats["peak"] = max(stats.get("peak", 0), in_flight["now"])
                    stats["total"] = stats.get("total", 0) + 1
            try:
                if delay:
                    import time

                    time.sleep(delay)
                length = int(self.headers.get("Content-Length", 0))
                self.rfile.read(length)
                if raw is not None:
                    data = raw
                else:
                    data = json.dumps(body if body is not None else {"text": text}).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)
            finally:
                if stats is not None:
                    with lock:
                        in_flight["now"] -= 1

        def log_message(self, *args):
            pass

    server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://127.0.0.1:{server.server_port}/complete"
    finally:
        server.shutdown()
        thread.join(timeout=5)
