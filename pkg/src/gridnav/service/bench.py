"""Runtime and determinism benchmark over a set of bundles.

Per map: seeded random origin/destination pairs (unreachable pairs are
resampled and counted), search-only and end-to-end wall times, and a
repeat of every query to confirm the route comes out identical run to run.
"""

from __future__ import annotations

import json
import random
import statistics
from dataclasses import dataclass
from time import perf_counter

from ..compressor import compress, terse_text
from ..gridmap import BuildingMap, Cell, NodeRef
from ..narrator import narrate
from ..planner import NoPath, astar

MAX_SAMPLE_ATTEMPTS = 1000


@dataclass(frozen=True)
class MapBench:
    """Raw samples and counters for one map."""

    map_id: str
    trials: int
    resampled: int
    search_ms: tuple[float, ...]
    e2e_ms: tuple[float, ...]
    identical_runs: int

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trial count must be >= 1")

    @property
    def determinism_ok(self) -> bool:
        return self.identical_runs == self.trials

    def summary(self) -> dict:
        search = sorted(self.search_ms)
        return {
            "map": self.map_id,
            "trials": self.trials,
            "resampled": self.resampled,
            "search_ms": {
                "mean": statistics.fmean(search),
                "median": statistics.median(search),
                "p95": _p95(search),
                "raw": list(self.search_ms),
            },
            "e2e_ms": {"mean": statistics.fmean(self.e2e_ms), "raw": list(self.e2e_ms)},
            "determinism": {
                "identical": self.identical_runs,
                "trials": self.trials,
                "ok": self.determinism_ok,
            },
        }


@dataclass(frozen=True)
class BenchReport:
    results: tuple[MapBench, ...]
    seed: int
    corner_rule: str

    def to_document(self) -> dict:
        return {
            "seed": self.seed,
            "corner_rule": self.corner_rule,
            "maps": [r.summary() for r in self.results],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_document(), indent=2)

    def to_tsv(self) -> str:
        lines = ["map\ttrials\tresampled\tsearch_mean_ms\tsearch_median_ms\tsearch_p95_ms\te2e_mean_ms\tdeterminism"]
        for r in self.results:
            s = r.summary()
            lines.append(
                "\t".join(
                    [
                        r.map_id,
                        str(r.trials),
                        str(r.resampled),
                        f"{s['search_ms']['mean']:.3f}",
                        f"{s['search_ms']['median']:.3f}",
                        f"{s['search_ms']['p95']:.3f}",
                        f"{s['e2e_ms']['mean']:.3f}",
                        "100%" if r.determinism_ok else f"{100.0 * r.identical_runs / r.trials:.0f}%",
                    ]
                )
            )
        return "\n".join(lines)


def _p95(sorted_values: list[float]) -> float:
    if len(sorted_values) == 1:
        return sorted_values[0]
    rank = max(0, -(-95 * len(sorted_values) // 100) - 1)  # ceil(0.95 n) - 1
    return sorted_values[min(rank, len(sorted_values) - 1)]


def free_cells(building: BuildingMap) -> list[NodeRef]:
    cells = []
    for fl in building.floors:
        for i, row in enumerate(fl.grid.cells):
            for j, free in enumerate(row):
                if free:
                    cells.append(NodeRef(fl.id, Cell(i, j)))
    return cells


def run_bench(
    buildings: dict[str, BuildingMap],
    trials: int = 20,
    seed: int = 0,
    corner_rule: str = "permissive",
) -> BenchReport:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    results = []
    for map_id in sorted(buildings):
        building = buildings[map_id]
        rng = random.Random(f"{seed}:{map_id}")
        pool = free_cells(building)
        if len(pool) < 2:
            raise ValueError(f"map '{map_id}' has fewer than two free cells")
        search_ms: list[float] = []
        e2e_ms: list[float] = []
        identical = 0
        resampled = 0
        done = 0
        attempts = 0
        while done < trials:
            attempts += 1
            if attempts > MAX_SAMPLE_ATTEMPTS:
                raise RuntimeError(f"map '{map_id}': could not sample {trials} solvable pairs")
            origin, destination = rng.sample(pool, 2)
            t0 = perf_counter()
            try:
                path = astar(building, origin, destination, corner_rule)
            except NoPath:
                resampled += 1
                continue
            t1 = perf_counter()
            script = compress(path, building, corner_rule)
            guide = narrate(script, mode="template")
            t2 = perf_counter()

            again = astar(building, origin, destination, corner_rule)
            script_again = compress(again, building, corner_rule)
            if again.nodes == path.nodes and terse_text(script_again) == terse_text(script):
                identical += 1
            assert guide.lines  # narration must always produce a guide

            search_ms.append((t1 - t0) * 1000.0)
            e2e_ms.append((t2 - t0) * 1000.0)
            done += 1
        results.append(
            MapBench(
                map_id=map_id,
                trials=trials,
                resampled=resampled,
                search_ms=tuple(search_ms),
                e2e_ms=tuple(e2e_ms),
                identical_runs=identical,
            )
        )
    return BenchReport(tuple(results), seed=seed, corner_rule=corner_rule)
