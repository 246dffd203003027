"""HTTP facade: bundle listing, editing endpoints, and route queries.

Readers always see a consistent snapshot: every mutation builds a new map
value, persists it atomically, then swaps it in under the per-map lock and
bumps the revision token. Error replies carry ``{"error": {"code", "message"}}``
where the code is the raising exception class name.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, replace
from pathlib import Path as FsPath

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .. import gridmap
from ..errors import GridNavError
from ..gridmap import BuildingMap, Poi, Portal, node
from ..narrator import LmConfig
from . import RouteRequest, UnknownPoi, response_document, route_query


class UnknownMap(GridNavError):
    """No bundle with that id is loaded."""


class UnknownPortal(GridNavError):
    """Portal index does not exist on this map."""


_ERROR_STATUS = {
    "UnknownMap": 404,
    "UnknownPoi": 404,
    "UnknownFloor": 404,
    "UnknownPortal": 404,
    "NoPath": 409,
    "WouldOrphanPoiOrPortal": 409,
    "ValidationFailure": 422,
    "OutOfBounds": 422,
    "StartBlocked": 422,
    "GoalBlocked": 422,
    "InvalidRequest": 422,
}


@dataclass
class _Entry:
    building: BuildingMap
    path: FsPath
    revision: int = 0
    lock: threading.Lock = None  # type: ignore[assignment]

    def __post_init__(self):
        self.lock = threading.Lock()


class MapStore:
    """Directory-backed collection of bundles with copy-on-write edits."""

    def __init__(self, bundle_dir):
        self.bundle_dir = FsPath(bundle_dir)
        self._entries: dict[str, _Entry] = {}
        for path in sorted(self.bundle_dir.glob("*.json")):
            self._entries[path.stem] = _Entry(gridmap.load_bundle(path), path)

    def ids(self) -> list[str]:
        return sorted(self._entries)

    def entry(self, map_id: str) -> _Entry:
        entry = self._entries.get(map_id)
        if entry is None:
            raise UnknownMap(f"no map '{map_id}'")
        return entry

    def snapshot(self, map_id: str) -> tuple[BuildingMap, int]:
        entry = self.entry(map_id)
        return entry.building, entry.revision

    def mutate(self, map_id: str, fn) -> int:
        """Apply fn(map) -> map, re-validate, persist atomically, swap, bump revision."""
        entry = self.entry(map_id)
        with entry.lock:
            updated = fn(entry.building)
            violations = gridmap.validate_building(updated)
            if violations:
                raise gridmap.ValidationFailure(violations)
            gridmap.save_bundle(updated, entry.path)
            entry.building = updated
            entry.revision += 1
            return entry.revision


class EndpointBody(BaseModel):
    floor: int
    i: int
    j: int


class CellEdit(BaseModel):
    floor: int
    i: int
    j: int
    free: bool


class PoiBody(BaseModel):
    name: str
    floor: int
    i: int
    j: int


class PortalBody(BaseModel):
    kind: str
    a: EndpointBody
    b: EndpointBody
    cost: float = 1.0


class LmBody(BaseModel):
    endpoint: str
    max_new_tokens: int | None = None
    temperature: float = 0.0
    top_p: float = 1.0
    timeout: float = 10.0


class RouteBody(BaseModel):
    origin: str | EndpointBody
    destination: str | EndpointBody
    corner_rule: str = Field(default="permissive")
    narrate: str = Field(default="template")
    lm: LmBody | None = None


def _as_ref(spec: str | EndpointBody):
    if isinstance(spec, EndpointBody):
        return node(spec.floor, spec.i, spec.j)
    return spec


def _map_document(building: BuildingMap, map_id: str, revision: int) -> dict:
    return {
        "id": map_id,
        "name": building.name,
        "revision": revision,
        "meters_per_cell": building.meters_per_cell,
        "floors": [
            {
                "id": fl.id,
                "label": fl.label,
                "rows": fl.grid.rows,
                "cols": fl.grid.cols,
                "grid": fl.grid.row_strings(),
            }
            for fl in building.floors
        ],
        "portals": [
            {
                "index": idx,
                "kind": p.kind,
                "a": {"floor": p.a.floor, "i": p.a.cell.i, "j": p.a.cell.j},
                "b": {"floor": p.b.floor, "i": p.b.cell.i, "j": p.b.cell.j},
                "cost": p.cost,
            }
            for idx, p in enumerate(building.portals)
        ],
        "pois": [
            {"name": poi.name, "floor": poi.location.floor, "i": poi.location.cell.i, "j": poi.location.cell.j}
            for poi in building.pois
        ],
    }


PROTOCOL = "route-service@1"


def create_app(bundle_dir, ui_dir=None, lm_concurrency: int = 2) -> FastAPI:
    app = FastAPI(title="gridnav", version="0.1.0")
    store = MapStore(bundle_dir)
    app.state.store = store
    # Bounds concurrent completion-endpoint narrations; route queries in
    # template mode are not throttled.
    app.state.lm_gate = threading.BoundedSemaphore(max(1, lm_concurrency))

    @app.exception_handler(GridNavError)
    async def _gridnav_error(_request: Request, exc: GridNavError):
        code = type(exc).__name__
        status = _ERROR_STATUS.get(code, 422)
        return JSONResponse(status_code=status, content={"error": {"code": code, "message": str(exc)}})

    @app.get("/")
    def service_info():
        return {"service": "gridnav", "protocol": PROTOCOL, "maps": len(store.ids())}

    @app.get("/maps")
    def list_maps():
        out = []
        for map_id in store.ids():
            building, revision = store.snapshot(map_id)
            out.append(
                {"id": map_id, "name": building.name, "floors": len(building.floors), "revision": revision}
            )
        return {"maps": out}

    @app.get("/maps/{map_id}")
    def get_map(map_id: str):
        building, revision = store.snapshot(map_id)
        return _map_document(building, map_id, revision)

    @app.post("/maps/{map_id}/route")
    def post_route(map_id: str, body: RouteBody):
        building, revision = store.snapshot(map_id)
        lm = None
        if body.lm is not None:
            lm = LmConfig(
                endpoint=body.lm.endpoint,
                max_new_tokens=body.lm.max_new_tokens,
                temperature=body.lm.temperature,
                top_p=body.lm.top_p,
                timeout=body.lm.timeout,
            )
        request = RouteRequest(
            origin=_as_ref(body.origin),
            destination=_as_ref(body.destination),
            corner_rule=body.corner_rule,
            narrate_mode=body.narrate,
            lm=lm,
        )
        if body.narrate == "lm":
            with app.state.lm_gate:
                response = route_query(building, request)
        else:
            response = route_query(building, request)
        doc = response_document(response)
        doc["revision"] = revision
        return doc

    @app.post("/maps/{map_id}/cells")
    def post_cell(map_id: str, body: CellEdit):
        revision = store.mutate(
            map_id, lambda m: gridmap.set_cell(m, body.floor, (body.i, body.j), body.free)
        )
        return {"revision": revision}

    @app.post("/maps/{map_id}/pois")
    def post_poi(map_id: str, body: PoiBody):
        def add(m: BuildingMap) -> BuildingMap:
            return replace(m, pois=m.pois + (Poi(body.name, node(body.floor, body.i, body.j)),))

        return {"revision": store.mutate(map_id, add)}

    @app.delete("/maps/{map_id}/pois/{name}")
    def delete_poi(map_id: str, name: str):
        def remove(m: BuildingMap) -> BuildingMap:
            if m.find_poi(name) is None:
                raise UnknownPoi(f"map '{m.name}' has no POI named '{name}'")
            kept = tuple(p for p in m.pois if p.name.lower() != name.strip().lower())
            return replace(m, pois=kept)

        return {"revision": store.mutate(map_id, remove)}

    @app.post("/maps/{map_id}/portals")
    def post_portal(map_id: str, body: PortalBody):
        def add(m: BuildingMap) -> BuildingMap:
            portal = Portal(
                kind=body.kind,
                a=node(body.a.floor, body.a.i, body.a.j),
                b=node(body.b.floor, body.b.i, body.b.j),
                cost=body.cost,
            )
            return replace(m, portals=m.portals + (portal,))

        return {"revision": store.mutate(map_id, add)}

    @app.delete("/maps/{map_id}/portals/{index}")
    def delete_portal(map_id: str, index: int):
        def remove(m: BuildingMap) -> BuildingMap:
            if not 0 <= index < len(m.portals):
                raise UnknownPortal(f"map '{m.name}' has no portal {index}")
            return replace(m, portals=m.portals[:index] + m.portals[index + 1 :])

        return {"revision": store.mutate(map_id, remove)}

    if ui_dir is not None:
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
