"""Multi-floor occupancy grids: mask binarization, validation, bundle persistence, editing.

A building is modelled as an ordered set of per-floor Boolean walkability
matrices plus declared cross-floor portals (escalators, elevators,
staircases) and named points of interest. Maps are values: every editing
operation returns a new map and never mutates the input.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace
from pathlib import Path as FsPath
from typing import Iterable, NamedTuple

import numpy as np

from .errors import GridNavError

BUNDLE_SCHEMA = "building-bundle@1"
PORTAL_KINDS = ("escalator", "elevator", "staircase")


class EmptyMask(GridNavError):
    """The input raster has no pixels."""


class GridLargerThanMask(GridNavError):
    """Requested grid dimensions exceed the raster dimensions."""


class OutOfBounds(GridNavError):
    """A cell coordinate falls outside its grid."""


class WouldOrphanPoiOrPortal(GridNavError):
    """Rejected edit: blocking this cell would strand a POI or portal endpoint."""


class SchemaVersionMismatch(GridNavError):
    """The file is not a bundle this version can read."""


class ValidationFailure(GridNavError):
    """A map violates its structural invariants."""

    def __init__(self, violations: Iterable[str]):
        self.violations = tuple(violations)
        super().__init__("; ".join(self.violations) or "invalid map")


class UnknownFloor(GridNavError):
    """Referenced floor id is not declared in the map."""


class Cell(NamedTuple):
    """Row/column address of one grid cell, 0-based."""

    i: int
    j: int


class NodeRef(NamedTuple):
    """A cell on a specific floor."""

    floor: int
    cell: Cell


def node(floor: int, i: int, j: int) -> NodeRef:
    """Shorthand constructor for a NodeRef; coerces numpy integers to int."""
    return NodeRef(int(floor), Cell(int(i), int(j)))


class Grid:
    """Dense Boolean walkability matrix for one floor; True means free."""

    __slots__ = ("cells",)

    def __init__(self, cells):
        arr = np.array(cells, dtype=bool, copy=True)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError("grid must be a non-empty 2-D matrix")
        arr.setflags(write=False)
        self.cells = arr

    @property
    def rows(self) -> int:
        return self.cells.shape[0]

    @property
    def cols(self) -> int:
        return self.cells.shape[1]

    def in_bounds(self, cell: Cell) -> bool:
        return 0 <= cell[0] < self.rows and 0 <= cell[1] < self.cols

    def is_free(self, cell: Cell) -> bool:
        return bool(self.cells[cell[0], cell[1]])

    def with_cell(self, cell: Cell, free: bool) -> "Grid":
        out = self.cells.copy()
        out[cell[0], cell[1]] = free
        return Grid(out)

    def row_strings(self) -> list[str]:
        return ["".join("1" if v else "0" for v in row) for row in self.cells]

    @classmethod
    def from_row_strings(cls, rows: Iterable[str]) -> "Grid":
        rows = list(rows)
        if not rows or any(len(r) != len(rows[0]) for r in rows):
            raise ValueError("grid rows must be non-empty and rectangular")
        if any(ch not in "01" for r in rows for ch in r):
            raise ValueError("grid rows may contain only '0' and '1'")
        return cls([[ch == "1" for ch in r] for r in rows])

    def __eq__(self, other) -> bool:
        return isinstance(other, Grid) and np.array_equal(self.cells, other.cells)

    def __repr__(self) -> str:
        return f"Grid({self.rows}x{self.cols}, {int(self.cells.sum())} free)"


@dataclass(frozen=True)
class Floor:
    """One building level: numeric id, display label, occupancy grid."""

    id: int
    label: str
    grid: Grid
    source_image: str | None = None


@dataclass(frozen=True)
class Portal:
    """Bidirectional cross-floor link between two free cells."""

    kind: str
    a: NodeRef
    b: NodeRef
    cost: float = 1.0


@dataclass(frozen=True)
class Poi:
    """Named point of interest bound to one free cell."""

    name: str
    location: NodeRef


@dataclass(frozen=True)
class BuildingMap:
    """Floors + portals + POIs; the unit of persistence and editing."""

    name: str
    floors: tuple[Floor, ...]
    portals: tuple[Portal, ...] = ()
    pois: tuple[Poi, ...] = ()
    meters_per_cell: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "floors", tuple(self.floors))
        object.__setattr__(self, "portals", tuple(self.portals))
        object.__setattr__(self, "pois", tuple(self.pois))

    def floor(self, floor_id: int) -> Floor:
        for fl in self.floors:
            if fl.id == floor_id:
                return fl
        raise UnknownFloor(f"map '{self.name}' has no floor {floor_id}")

    def grid(self, floor_id: int) -> Grid:
        return self.floor(floor_id).grid

    def find_poi(self, name: str) -> Poi | None:
        """Case-insensitive exact lookup."""
        wanted = name.strip().lower()
        for poi in self.pois:
            if poi.name.lower() == wanted:
                return poi
        return None

    def is_free(self, ref: NodeRef) -> bool:
        grid = self.grid(ref.floor)
        return grid.in_bounds(ref.cell) and grid.is_free(ref.cell)


def _default_cutoff(dtype: np.dtype) -> float:
    # Midpoint of the representable value range: 127.5 for uint8 masks,
    # 0.5 for float rasters (assumed normalized) and plain booleans.
    if np.issubdtype(dtype, np.integer):
        info = np.iinfo(dtype)
        return (int(info.min) + int(info.max)) / 2.0
    return 0.5


def binarize_mask(
    mask,
    rows: int,
    cols: int,
    blocked_threshold: float = 0.5,
    luminance_cutoff: float | None = None,
) -> Grid:
    """Downsample a grayscale mask into a rows x cols occupancy grid.

    The mask is partitioned into rows x cols pixel blocks (blocks on the
    right/bottom edges absorb remainder pixels). A pixel counts as blocked
    when its luminance falls below the cutoff; a cell is blocked when the
    blocked fraction of its block is strictly greater than
    ``blocked_threshold``, so a block at exactly the threshold stays free.
    """
    lum = np.asarray(mask)
    if lum.size == 0:
        raise EmptyMask("mask has no pixels")
    if lum.ndim != 2:
        raise ValueError("mask must be a single-channel 2-D raster")
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    if not 0.0 < blocked_threshold <= 1.0:
        raise ValueError("blocked_threshold must be in (0, 1]")
    height, width = lum.shape
    if rows > height or cols > width:
        raise GridLargerThanMask(
            f"grid {rows}x{cols} exceeds mask {height}x{width}"
        )
    cutoff = _default_cutoff(lum.dtype) if luminance_cutoff is None else luminance_cutoff

    blocked = (lum.astype(np.float64) < cutoff).astype(np.int64)
    row_starts = np.arange(rows) * (height // rows)
    col_starts = np.arange(cols) * (width // cols)
    counts = np.add.reduceat(np.add.reduceat(blocked, row_starts, axis=0), col_starts, axis=1)
    block_h = np.diff(np.append(row_starts, height))
    block_w = np.diff(np.append(col_starts, width))
    fraction = counts / np.outer(block_h, block_w)
    return Grid(fraction <= blocked_threshold)


def suggest_dimensions(mask_height: int, mask_width: int, max_dim: int = 130) -> tuple[int, int]:
    """Propose (rows, cols) matching the raster aspect ratio, longest side = max_dim."""
    if mask_height < 1 or mask_width < 1 or max_dim < 1:
        raise ValueError("dimensions must be positive")
    if mask_height >= mask_width:
        rows = max_dim
        cols = max(1, round(max_dim * mask_width / mask_height))
    else:
        cols = max_dim
        rows = max(1, round(max_dim * mask_height / mask_width))
    return rows, cols


def validate_building(building: BuildingMap) -> list[str]:
    """Check every structural invariant; returns one message per violation."""
    violations: list[str] = []
    floor_ids: dict[int, Floor] = {}
    for fl in building.floors:
        if fl.id < 0:
            violations.append(f"floor {fl.id} has a negative id")
        if fl.id in floor_ids:
            violations.append(f"duplicate floor id {fl.id}")
        floor_ids[fl.id] = fl

    def endpoint_ok(label: str, ref: NodeRef) -> None:
        fl = floor_ids.get(ref.floor)
        if fl is None:
            violations.append(f"{label} references missing floor {ref.floor}")
            return
        if not fl.grid.in_bounds(ref.cell):
            violations.append(f"{label} cell {tuple(ref.cell)} is outside floor {ref.floor}")
            return
        if not fl.grid.is_free(ref.cell):
            violations.append(f"{label} cell {tuple(ref.cell)} on floor {ref.floor} is blocked")

    for idx, portal in enumerate(building.portals):
        label = f"portal {idx} ({portal.kind})"
        if portal.kind not in PORTAL_KINDS:
            violations.append(f"portal {idx} has unknown kind '{portal.kind}'")
        if portal.cost < 0:
            violations.append(f"{label} has negative traversal cost {portal.cost}")
        if portal.a.floor == portal.b.floor:
            violations.append(f"{label} links floor {portal.a.floor} to itself")
        endpoint_ok(f"{label} endpoint a", portal.a)
        endpoint_ok(f"{label} endpoint b", portal.b)

    seen_names: set[str] = set()
    for poi in building.pois:
        key = poi.name.lower()
        if key in seen_names:
            violations.append(f"duplicate POI name '{poi.name}'")
        seen_names.add(key)
        endpoint_ok(f"POI '{poi.name}'", poi.location)

    return violations


def _to_document(building: BuildingMap) -> dict:
    return {
        "schema": BUNDLE_SCHEMA,
        "name": building.name,
        "meters_per_cell": building.meters_per_cell,
        "floors": [
            {
                "id": fl.id,
                "label": fl.label,
                "source_image": fl.source_image,
                "grid": fl.grid.row_strings(),
            }
            for fl in building.floors
        ],
        "portals": [
            {
                "kind": p.kind,
                # int() guards against numpy integers smuggled in via NodeRef
                "a": [int(p.a.floor), int(p.a.cell.i), int(p.a.cell.j)],
                "b": [int(p.b.floor), int(p.b.cell.i), int(p.b.cell.j)],
                "cost": float(p.cost),
            }
            for p in building.portals
        ],
        "pois": [
            {
                "name": poi.name,
                "floor": int(poi.location.floor),
                "i": int(poi.location.cell.i),
                "j": int(poi.location.cell.j),
            }
            for poi in building.pois
        ],
    }


def _from_document(doc: dict) -> BuildingMap:
    floors = tuple(
        Floor(
            id=int(f["id"]),
            label=str(f["label"]),
            grid=Grid.from_row_strings(f["grid"]),
            source_image=f.get("source_image"),
        )
        for f in doc["floors"]
    )
    portals = tuple(
        Portal(
            kind=str(p["kind"]),
            a=node(int(p["a"][0]), int(p["a"][1]), int(p["a"][2])),
            b=node(int(p["b"][0]), int(p["b"][1]), int(p["b"][2])),
            cost=float(p.get("cost", 1.0)),
        )
        for p in doc["portals"]
    )
    pois = tuple(
        Poi(name=str(p["name"]), location=node(int(p["floor"]), int(p["i"]), int(p["j"])))
        for p in doc["pois"]
    )
    meters = doc.get("meters_per_cell")
    return BuildingMap(
        name=str(doc["name"]),
        floors=floors,
        portals=portals,
        pois=pois,
        meters_per_cell=None if meters is None else float(meters),
    )


def save_bundle(building: BuildingMap, path) -> None:
    """Serialize to a versioned, diffable text bundle. Atomic: write temp + rename."""
    violations = validate_building(building)
    if violations:
        raise ValidationFailure(violations)
    path = FsPath(path)
    payload = json.dumps(_to_document(building), indent=2) + "\n"
    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    finally:
        tmp.unlink(missing_ok=True)


def load_bundle(path, validate: bool = True) -> BuildingMap:
    """Parse a bundle file back into a BuildingMap, re-validating by default."""
    text = FsPath(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaVersionMismatch(f"not a readable bundle: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("schema") != BUNDLE_SCHEMA:
        raise SchemaVersionMismatch(
            f"expected schema '{BUNDLE_SCHEMA}', found {doc.get('schema') if isinstance(doc, dict) else type(doc).__name__!r}"
        )
    try:
        building = _from_document(doc)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise SchemaVersionMismatch(f"malformed bundle: {exc}") from exc
    if validate:
        violations = validate_building(building)
        if violations:
            raise ValidationFailure(violations)
    return building


def set_cell(building: BuildingMap, floor_id: int, cell, free: bool) -> BuildingMap:
    """Return a map with one cell changed; rejects edits that strand a POI or portal."""
    fl = building.floor(floor_id)
    cell = Cell(int(cell[0]), int(cell[1]))
    if not fl.grid.in_bounds(cell):
        raise OutOfBounds(f"cell {tuple(cell)} outside floor {floor_id} ({fl.grid.rows}x{fl.grid.cols})")
    if fl.grid.is_free(cell) == free:
        return building
    if not free:
        ref = NodeRef(floor_id, cell)
        for poi in building.pois:
            if poi.location == ref:
                raise WouldOrphanPoiOrPortal(f"POI '{poi.name}' sits on {tuple(cell)} of floor {floor_id}")
        for idx, portal in enumerate(building.portals):
            if ref in (portal.a, portal.b):
                raise WouldOrphanPoiOrPortal(
                    f"portal {idx} ({portal.kind}) has an endpoint on {tuple(cell)} of floor {floor_id}"
                )
    new_floor = replace(fl, grid=fl.grid.with_cell(cell, free))
    floors = tuple(new_floor if f.id == floor_id else f for f in building.floors)
    return replace(building, floors=floors)
