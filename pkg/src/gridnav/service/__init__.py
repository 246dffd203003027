"""Route pipeline shared by the CLI and the HTTP service."""

from __future__ import annotations

import re
from dataclasses import dataclass
from time import perf_counter

from ..compressor import TerseScript, compress, terse_text
from ..errors import GridNavError
from ..gridmap import BuildingMap, NodeRef, node
from ..narrator import InstructionScript, LmConfig, narrate
from ..planner import Path, astar

_COORD = re.compile(r"^\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)\s*$")


class UnknownPoi(GridNavError):
    """Origin or destination name does not resolve to a POI."""


class InvalidRequest(GridNavError):
    """Request violates the route-request contract."""


@dataclass(frozen=True)
class RouteRequest:
    """Route query: endpoints are POI names or explicit (floor, i, j) nodes."""

    origin: str | NodeRef
    destination: str | NodeRef
    corner_rule: str = "permissive"
    narrate_mode: str = "template"
    lm: LmConfig | None = None


@dataclass(frozen=True)
class RouteResponse:
    """Route in all three representations plus stage timings (seconds)."""

    path: Path
    script: TerseScript
    terse: str
    guide: InstructionScript
    timings: dict[str, float]


def resolve_endpoint(building: BuildingMap, spec: str | NodeRef | tuple) -> NodeRef:
    """Turn a POI name or "floor,i,j" coordinate triple into a NodeRef."""
    if isinstance(spec, NodeRef):
        return spec
    if isinstance(spec, tuple) and len(spec) == 3:
        return node(int(spec[0]), int(spec[1]), int(spec[2]))
    if isinstance(spec, str):
        match = _COORD.match(spec)
        if match:
            return node(int(match.group(1)), int(match.group(2)), int(match.group(3)))
        poi = building.find_poi(spec)
        if poi is None:
            raise UnknownPoi(f"map '{building.name}' has no POI named '{spec}'")
        return poi.location
    raise InvalidRequest(f"cannot resolve endpoint {spec!r}")


def route_query(building: BuildingMap, request: RouteRequest) -> RouteResponse:
    """astar -> compress -> narrate, with per-stage wall times."""
    origin = resolve_endpoint(building, request.origin)
    destination = resolve_endpoint(building, request.destination)
    if origin == destination:
        raise InvalidRequest("origin and destination are the same cell")

    t0 = perf_counter()
    path = astar(building, origin, destination, request.corner_rule)
    t1 = perf_counter()
    script = compress(path, building, request.corner_rule)
    t2 = perf_counter()
    guide = narrate(script, mode=request.narrate_mode, config=request.lm)
    t3 = perf_counter()

    return RouteResponse(
        path=path,
        script=script,
        terse=terse_text(script),
        guide=guide,
        timings={"search": t1 - t0, "compress": t2 - t1, "narrate": t3 - t2},
    )


def response_document(response: RouteResponse) -> dict:
    """JSON-safe view of a RouteResponse; timings reported in milliseconds."""
    return {
        "path": {
            "nodes": [[ref.floor, ref.cell.i, ref.cell.j] for ref in response.path.nodes],
            "cost": response.path.total_cost,
        },
        "terse": response.terse,
        "guide": {
            "source": response.guide.source,
            "lines": [f"{idx}. {text}" for idx, text in response.guide.lines],
        },
        "stats": {
            "expanded_nodes": response.path.stats.expanded_nodes,
            "pushed_nodes": response.path.stats.pushed_nodes,
        },
        "timings_ms": {name: dt * 1000.0 for name, dt in response.timings.items()},
    }
