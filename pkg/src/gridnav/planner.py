"""Optimal route search over the implicit 8-connected multi-floor graph.

Free cells are graph nodes; each connects to its eight in-bounds free
neighbors (orthogonal cost 1, diagonal cost sqrt(2)) and, at portal
endpoints, to the opposite endpoint at the portal's traversal cost. The
search is a best-first scan with the Chebyshev heuristic on the goal floor
and a zero heuristic elsewhere, with a fully deterministic expansion order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from heapq import heappop, heappush
from time import perf_counter
from typing import NamedTuple

from .errors import GridNavError
from .gridmap import BuildingMap, Cell, NodeRef

SQRT2 = math.sqrt(2.0)

CORNER_RULES = ("permissive", "strict")


class NodeBlocked(GridNavError):
    """Neighbor query on a blocked or out-of-bounds cell."""


class StartBlocked(GridNavError):
    """Route start is not a free cell."""


class GoalBlocked(GridNavError):
    """Route goal is not a free cell."""


class NoPath(GridNavError):
    """Open set exhausted without reaching the goal."""


class MoveOffset(NamedTuple):
    """One of the eight legal single-step moves."""

    di: int
    dj: int
    cost: float
    compass: str


MOVE_OFFSETS: tuple[MoveOffset, ...] = (
    MoveOffset(-1, 0, 1.0, "N"),
    MoveOffset(1, 0, 1.0, "S"),
    MoveOffset(0, -1, 1.0, "W"),
    MoveOffset(0, 1, 1.0, "E"),
    MoveOffset(-1, -1, SQRT2, "NW"),
    MoveOffset(-1, 1, SQRT2, "NE"),
    MoveOffset(1, -1, SQRT2, "SW"),
    MoveOffset(1, 1, SQRT2, "SE"),
)

DELTA_TO_COMPASS = {(o.di, o.dj): o.compass for o in MOVE_OFFSETS}
COMPASS_TO_OFFSET = {o.compass: o for o in MOVE_OFFSETS}


@dataclass(frozen=True)
class SearchStats:
    """Counters from one search run."""

    expanded_nodes: int
    pushed_nodes: int
    wall_time: float


@dataclass(frozen=True)
class Path:
    """Ordered node sequence with its total edge cost."""

    nodes: tuple[NodeRef, ...]
    total_cost: float
    stats: SearchStats


def chebyshev(a, b) -> float:
    """max(|di|, |dj|) between two cells."""
    return float(max(abs(a[0] - b[0]), abs(a[1] - b[1])))


def _check_rule(corner_rule: str) -> bool:
    if corner_rule not in CORNER_RULES:
        raise ValueError(f"corner_rule must be one of {CORNER_RULES}, got {corner_rule!r}")
    return corner_rule == "strict"


def _portal_index(building: BuildingMap) -> dict[tuple[int, int, int], list[tuple[int, int, int, float]]]:
    index: dict[tuple[int, int, int], list[tuple[int, int, int, float]]] = {}
    for p in building.portals:
        ka = (p.a.floor, p.a.cell.i, p.a.cell.j)
        kb = (p.b.floor, p.b.cell.i, p.b.cell.j)
        index.setdefault(ka, []).append((*kb, p.cost))
        index.setdefault(kb, []).append((*ka, p.cost))
    return index


def neighbors(
    building: BuildingMap, ref: NodeRef, corner_rule: str = "permissive"
) -> list[tuple[NodeRef, float]]:
    """All traversable single moves from a node: 8-way steps plus portal hops.

    Under the strict corner rule a diagonal is emitted only when both
    flanking orthogonal cells are free; the permissive rule applies no
    corner check.
    """
    strict = _check_rule(corner_rule)
    grid = building.grid(ref.floor)
    if not grid.in_bounds(ref.cell) or not grid.is_free(ref.cell):
        raise NodeBlocked(f"{ref} is not a free cell")
    cells = grid.cells
    rows, cols = cells.shape
    i, j = ref.cell
    out: list[tuple[NodeRef, float]] = []
    for di, dj, cost, _ in MOVE_OFFSETS:
        ni, nj = i + di, j + dj
        if not (0 <= ni < rows and 0 <= nj < cols) or not cells[ni, nj]:
            continue
        if strict and di and dj and not (cells[i + di, j] and cells[i, j + dj]):
            continue
        out.append((NodeRef(ref.floor, Cell(ni, nj)), cost))
    for portal in building.portals:
        if portal.a == ref:
            out.append((portal.b, portal.cost))
        elif portal.b == ref:
            out.append((portal.a, portal.cost))
    return out


def _search_context(building: BuildingMap):
    free = {}
    dims = {}
    for fl in building.floors:
        free[fl.id] = fl.grid.cells.tolist()
        dims[fl.id] = (fl.grid.rows, fl.grid.cols)
    return free, dims, _portal_index(building)


def _require_free(building: BuildingMap, ref: NodeRef, exc) -> None:
    grid = building.grid(ref.floor)  # raises UnknownFloor for undeclared floors
    if not grid.in_bounds(ref.cell) or not grid.is_free(ref.cell):
        raise exc(f"{ref} is not a free cell")


def astar(
    building: BuildingMap,
    start: NodeRef,
    goal: NodeRef,
    corner_rule: str = "permissive",
) -> Path:
    """Minimum-cost route from start to goal over the joint multi-floor graph.

    Expansion order is fully deterministic: the priority key is
    (f, g, floor, i, j) and stale heap entries are skipped via the closed
    set, so identical inputs always yield the identical node sequence.
    """
    strict = _check_rule(corner_rule)
    _require_free(building, start, StartBlocked)
    _require_free(building, goal, GoalBlocked)

    t0 = perf_counter()
    free, dims, portals_at = _search_context(building)
    portals_at = portals_at or None
    gf = goal.floor
    gi, gj = goal.cell
    start_key = (start.floor, start.cell.i, start.cell.j)
    goal_key = (gf, gi, gj)

    h0 = chebyshev(start.cell, goal.cell) if start.floor == gf else 0.0
    heap: list[tuple[float, float, int, int, int]] = [(h0, 0.0, *start_key)]
    g_score: dict[tuple[int, int, int], float] = {start_key: 0.0}
    came: dict[tuple[int, int, int], tuple[int, int, int]] = {}
    closed: set[tuple[int, int, int]] = set()
    expanded = 0
    pushed = 1
    found = False

    while heap:
        _, gu, fl, i, j = heappop(heap)
        key = (fl, i, j)
        if key == goal_key:
            found = True
            break
        if key in closed:
            continue
        closed.add(key)
        expanded += 1
        grid = free[fl]
        rows, cols = dims[fl]
        row = grid[i]
        for di, dj, cost, _ in MOVE_OFFSETS:
            ni = i + di
            nj = j + dj
            if not (0 <= ni < rows and 0 <= nj < cols):
                continue
            if not grid[ni][nj]:
                continue
            if strict and di and dj and not (grid[ni][j] and row[nj]):
                continue
            gv = gu + cost
            nkey = (fl, ni, nj)
            if gv < g_score.get(nkey, math.inf):
                g_score[nkey] = gv
                if fl == gf:
                    h = max(abs(ni - gi), abs(nj - gj))
                else:
                    h = 0.0
                heappush(heap, (gv + h, gv, fl, ni, nj))
                pushed += 1
                came[nkey] = key
        if portals_at is not None:
            for fl2, i2, j2, pcost in portals_at.get(key, ()):
                gv = gu + pcost
                nkey = (fl2, i2, j2)
                if gv < g_score.get(nkey, math.inf):
                    g_score[nkey] = gv
                    h = max(abs(i2 - gi), abs(j2 - gj)) if fl2 == gf else 0.0
                    heappush(heap, (gv + h, gv, fl2, i2, j2))
                    pushed += 1
                    came[nkey] = key

    stats = SearchStats(expanded, pushed, perf_counter() - t0)
    if not found:
        raise NoPath(f"no route from {start} to {goal}")
    return Path(_reconstruct(came, start_key, goal_key), g_score[goal_key], stats)


def _reconstruct(came, start_key, goal_key) -> tuple[NodeRef, ...]:
    keys = [goal_key]
    key = goal_key
    while key != start_key:
        key = came[key]
        keys.append(key)
    keys.reverse()
    return tuple(NodeRef(fl, Cell(i, j)) for fl, i, j in keys)


def dijkstra_oracle(
    building: BuildingMap,
    start: NodeRef,
    goal: NodeRef,
    corner_rule: str = "permissive",
) -> Path:
    """Exhaustive uninformed search over the same edge set; the test reference.

    Deliberately simple and heuristic-free: it settles every reachable node
    before answering, trading speed for being an independent check on astar.
    """
    _check_rule(corner_rule)
    _require_free(building, start, StartBlocked)
    _require_free(building, goal, GoalBlocked)

    t0 = perf_counter()
    start_key = (start.floor, start.cell.i, start.cell.j)
    goal_key = (goal.floor, goal.cell.i, goal.cell.j)
    heap = [(0.0, *start_key)]
    dist = {start_key: 0.0}
    came: dict[tuple[int, int, int], tuple[int, int, int]] = {}
    settled: set[tuple[int, int, int]] = set()
    expanded = 0
    pushed = 1

    while heap:
        d, fl, i, j = heappop(heap)
        key = (fl, i, j)
        if key in settled:
            continue
        settled.add(key)
        expanded += 1
        for nref, cost in neighbors(building, NodeRef(fl, Cell(i, j)), corner_rule):
            nkey = (nref.floor, nref.cell.i, nref.cell.j)
            nd = d + cost
            if nd < dist.get(nkey, math.inf):
                dist[nkey] = nd
                came[nkey] = key
                heappush(heap, (nd, *nkey))
                pushed += 1

    stats = SearchStats(expanded, pushed, perf_counter() - t0)
    if goal_key not in settled:
        raise NoPath(f"no route from {start} to {goal}")
    return Path(_reconstruct(came, start_key, goal_key), dist[goal_key], stats)


def verify_path(
    building: BuildingMap,
    path: Path,
    corner_rule: str = "permissive",
    start: NodeRef | None = None,
    goal: NodeRef | None = None,
) -> list[str]:
    """Independent re-walk of a path against the grids and portal set.

    Returns one message per violated invariant (empty list = valid). Does
    not reuse the neighbor generator: adjacency, walkability, corner rule,
    and edge costs are all rechecked from first principles.
    """
    strict = _check_rule(corner_rule)
    violations: list[str] = []
    if not path.nodes:
        return ["path has no nodes"]
    if start is not None and path.nodes[0] != start:
        violations.append(f"path starts at {path.nodes[0]}, expected {start}")
    if goal is not None and path.nodes[-1] != goal:
        violations.append(f"path ends at {path.nodes[-1]}, expected {goal}")

    total = 0.0
    for k, (u, v) in enumerate(zip(path.nodes, path.nodes[1:])):
        if not building.is_free(u):
            violations.append(f"node {k} {u} is not free")
        if u.floor == v.floor:
            di = v.cell.i - u.cell.i
            dj = v.cell.j - u.cell.j
            if (di, dj) not in DELTA_TO_COMPASS:
                violations.append(f"step {k}: {u} -> {v} is not an 8-neighbor move")
                continue
            grid = building.grid(u.floor)
            if not grid.in_bounds(v.cell) or not grid.is_free(v.cell):
                violations.append(f"step {k}: target {v} blocked")
            if strict and di and dj:
                if not (grid.is_free(Cell(u.cell.i + di, u.cell.j)) and grid.is_free(Cell(u.cell.i, u.cell.j + dj))):
                    violations.append(f"step {k}: diagonal {u} -> {v} cuts a blocked corner")
            total += 1.0 if di == 0 or dj == 0 else SQRT2
        else:
            match = [p for p in building.portals if {p.a, p.b} == {u, v}]
            if not match:
                violations.append(f"step {k}: no declared portal between {u} and {v}")
                continue
            total += min(p.cost for p in match)
    if not building.is_free(path.nodes[-1]):
        violations.append(f"final node {path.nodes[-1]} is not free")
    if abs(total - path.total_cost) > 1e-9:
        violations.append(f"total_cost {path.total_cost} != recomputed {total}")
    return violations
