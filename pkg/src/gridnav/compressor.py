"""Collapse raw cell paths into terse compass commands.

Three stages: per-step compass vectorization, run-length encoding, and a
diagonal collapse that fuses adjacent single-step orthogonal pairs into one
diagonal step when the grid actually permits the cut. The result replays
exactly onto the original endpoint.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .errors import GridNavError
from .gridmap import BuildingMap, Cell, NodeRef, Portal
from .planner import COMPASS_TO_OFFSET, DELTA_TO_COMPASS, MOVE_OFFSETS, Path

DIRECTIONS = tuple(o.compass for o in MOVE_OFFSETS)
_ORTHOGONAL = frozenset(("N", "S", "E", "W"))


class NonAdjacentPair(GridNavError):
    """Consecutive path nodes are neither 8-neighbors nor a declared portal."""


class InvalidReplay(GridNavError):
    """Run list is inconsistent with the map it claims to traverse."""


class CollisionDuringReplay(GridNavError):
    """Replay stepped onto a blocked or out-of-bounds cell."""


class NoPortalHere(GridNavError):
    """Replay hit a portal transit with no matching portal at the current cell."""


@dataclass(frozen=True)
class Move:
    """``count`` consecutive steps in one compass direction."""

    direction: str
    count: int


@dataclass(frozen=True)
class PortalTransit:
    """One portal hop between floors."""

    kind: str
    from_floor: int
    to_floor: int


TerseCommand = Union[Move, PortalTransit]


@dataclass(frozen=True)
class TerseScript:
    """Fully merged command sequence, replayable from its origin."""

    commands: tuple[TerseCommand, ...]
    origin: NodeRef


def _matching_portals(building: BuildingMap, u: NodeRef, v: NodeRef) -> list[Portal]:
    return [p for p in building.portals if {p.a, p.b} == {u, v}]


def vectorize(path: Path, building: BuildingMap) -> list[TerseCommand | str]:
    """One symbol per consecutive node pair: a compass code or a portal marker."""
    symbols: list[TerseCommand | str] = []
    for u, v in zip(path.nodes, path.nodes[1:]):
        if u.floor == v.floor:
            delta = (v.cell.i - u.cell.i, v.cell.j - u.cell.j)
            code = DELTA_TO_COMPASS.get(delta)
            if code is None:
                raise NonAdjacentPair(f"{u} -> {v} is not a single 8-way step")
            symbols.append(code)
        else:
            matches = _matching_portals(building, u, v)
            if not matches:
                raise NonAdjacentPair(f"no declared portal between {u} and {v}")
            symbols.append(PortalTransit(matches[0].kind, u.floor, v.floor))
    return symbols


def rle(symbols: list[TerseCommand | str]) -> list[TerseCommand]:
    """Merge maximal runs of equal compass codes; portal markers pass through."""
    runs: list[TerseCommand] = []
    for sym in symbols:
        if isinstance(sym, PortalTransit):
            runs.append(sym)
        elif runs and isinstance(runs[-1], Move) and runs[-1].direction == sym:
            runs[-1] = Move(sym, runs[-1].count + 1)
        else:
            runs.append(Move(sym, 1))
    return runs


def expand(runs: list[TerseCommand]) -> list[TerseCommand | str]:
    """Inverse of rle for normalized run lists."""
    out: list[TerseCommand | str] = []
    for run in runs:
        if isinstance(run, Move):
            out.extend([run.direction] * run.count)
        else:
            out.append(run)
    return out


def _diagonal_of(first: str, second: str) -> str | None:
    """Compass code for the fused pair, or None when the pair is not perpendicular."""
    a = COMPASS_TO_OFFSET[first]
    b = COMPASS_TO_OFFSET[second]
    return DELTA_TO_COMPASS.get((a.di + b.di, a.dj + b.dj))


def _step_move(building: BuildingMap, pos: NodeRef, move: Move, exc) -> NodeRef:
    off = COMPASS_TO_OFFSET[move.direction]
    grid = building.grid(pos.floor)
    i, j = pos.cell
    for _ in range(move.count):
        i += off.di
        j += off.dj
        if not grid.in_bounds(Cell(i, j)) or not grid.is_free(Cell(i, j)):
            raise exc(f"cell ({i}, {j}) on floor {pos.floor} is not walkable")
    return NodeRef(pos.floor, Cell(i, j))


def _jump_portal(building: BuildingMap, pos: NodeRef, transit: PortalTransit, exc) -> NodeRef:
    for portal in building.portals:
        if portal.kind != transit.kind:
            continue
        for here, there in ((portal.a, portal.b), (portal.b, portal.a)):
            if here == pos and here.floor == transit.from_floor and there.floor == transit.to_floor:
                return there
    raise exc(f"no {transit.kind} from floor {transit.from_floor} to {transit.to_floor} at {pos}")


def _diagonal_allowed(building: BuildingMap, pos: NodeRef, code: str, strict: bool) -> bool:
    off = COMPASS_TO_OFFSET[code]
    grid = building.grid(pos.floor)
    i, j = pos.cell
    target = Cell(i + off.di, j + off.dj)
    if not grid.in_bounds(target) or not grid.is_free(target):
        return False
    if strict and not (grid.is_free(Cell(i + off.di, j)) and grid.is_free(Cell(i, j + off.dj))):
        return False
    return True


def _merge_runs(runs: list[TerseCommand]) -> list[TerseCommand]:
    # Second run-length pass over already-built runs.
    out: list[TerseCommand] = []
    for run in runs:
        if isinstance(run, Move) and out and isinstance(out[-1], Move) and out[-1].direction == run.direction:
            out[-1] = Move(run.direction, out[-1].count + run.count)
        else:
            out.append(run)
    return out


def diagonal_collapse(
    runs: list[TerseCommand],
    building: BuildingMap,
    origin: NodeRef,
    corner_rule: str = "permissive",
) -> list[TerseCommand]:
    """Fuse adjacent single-step perpendicular pairs into diagonals.

    A pair merges only when the diagonal edge actually exists at the
    current replay position under the active corner rule, so the collapsed
    script never cuts through a wall the search had to skirt. A final
    merge pass joins consecutive equal diagonals, e.g. two (SE,1) into
    (SE,2). Net displacement is preserved exactly.
    """
    strict = corner_rule == "strict"
    if corner_rule not in ("permissive", "strict"):
        raise ValueError(f"unknown corner rule {corner_rule!r}")
    out: list[TerseCommand] = []
    pos = origin
    if not building.is_free(pos):
        raise InvalidReplay(f"origin {pos} is not a free cell")
    k = 0
    while k < len(runs):
        head = runs[k]
        if (
            isinstance(head, Move)
            and head.count == 1
            and head.direction in _ORTHOGONAL
            and k + 1 < len(runs)
        ):
            tail = runs[k + 1]
            if isinstance(tail, Move) and tail.count == 1 and tail.direction in _ORTHOGONAL:
                code = _diagonal_of(head.direction, tail.direction)
                if code is not None and _diagonal_allowed(building, pos, code, strict):
                    out.append(Move(code, 1))
                    pos = _step_move(building, pos, Move(code, 1), InvalidReplay)
                    k += 2
                    continue
        if isinstance(head, Move):
            pos = _step_move(building, pos, head, InvalidReplay)
        else:
            pos = _jump_portal(building, pos, head, InvalidReplay)
        out.append(head)
        k += 1
    return _merge_runs(out)


def compress(path: Path, building: BuildingMap, corner_rule: str = "permissive") -> TerseScript:
    """vectorize -> rle -> diagonal collapse (with its trailing merge pass)."""
    symbols = vectorize(path, building)
    runs = rle(symbols)
    runs = diagonal_collapse(runs, building, path.nodes[0], corner_rule)
    return TerseScript(tuple(runs), origin=path.nodes[0])


def render_terse(script: TerseScript) -> list[str]:
    """One text line per command, e.g. "Go SE 5 steps"."""
    lines = []
    for cmd in script.commands:
        if isinstance(cmd, Move):
            unit = "step" if cmd.count == 1 else "steps"
            lines.append(f"Go {cmd.direction} {cmd.count} {unit}")
        else:
            lines.append(f"Take the {cmd.kind} from Floor {cmd.from_floor} to {cmd.to_floor}")
    return lines


def terse_text(script: TerseScript) -> str:
    return "\n".join(render_terse(script))


def replay(script: TerseScript, building: BuildingMap) -> NodeRef:
    """Walk the script from its origin; returns the terminal node."""
    pos = script.origin
    if not building.is_free(pos):
        raise CollisionDuringReplay(f"origin {pos} is not a free cell")
    for cmd in script.commands:
        if isinstance(cmd, Move):
            pos = _step_move(building, pos, cmd, CollisionDuringReplay)
        else:
            pos = _jump_portal(building, pos, cmd, NoPortalHere)
    return pos


def script_cost(script: TerseScript, building: BuildingMap) -> float:
    """Total traversal cost of the script in grid-step units."""
    cost = 0.0
    pos = script.origin
    for cmd in script.commands:
        if isinstance(cmd, Move):
            cost += COMPASS_TO_OFFSET[cmd.direction].cost * cmd.count
            pos = _step_move(building, pos, cmd, InvalidReplay)
        else:
            nxt = _jump_portal(building, pos, cmd, InvalidReplay)
            cost += min(p.cost for p in _matching_portals(building, pos, nxt))
            pos = nxt
    return cost


def walk_distance(script: TerseScript, meters_per_cell: float) -> float:
    """Horizontal walking distance in meters; portal hops contribute nothing."""
    units = sum(
        COMPASS_TO_OFFSET[c.direction].cost * c.count
        for c in script.commands
        if isinstance(c, Move)
    )
    return units * meters_per_cell
