import math
import random

import pytest

from gridnav.gridmap import BuildingMap, Floor, Poi, Portal, node
from gridnav.planner import (
    MOVE_OFFSETS,
    SQRT2,
    GoalBlocked,
    NoPath,
    NodeBlocked,
    StartBlocked,
    astar,
    chebyshev,
    dijkstra_oracle,
    neighbors,
    verify_path,
)
from helpers import grid_of, random_building, random_pair, single_floor, two_floor_fixture


def all_free(rows, cols, name="open"):
    return single_floor(name, ["1" * cols] * rows)


# --- offsets and heuristic ---------------------------------------------------


def test_move_offsets_table():
    assert len(MOVE_OFFSETS) == 8
    assert len({(o.di, o.dj) for o in MOVE_OFFSETS}) == 8
    for off in MOVE_OFFSETS:
        assert (off.di, off.dj) != (0, 0)
        manhattan = abs(off.di) + abs(off.dj)
        assert off.cost == (1.0 if manhattan == 1 else SQRT2)
    assert {o.compass for o in MOVE_OFFSETS} == {"N", "S", "E", "W", "NE", "NW", "SE", "SW"}


def test_chebyshev_values():
    assert chebyshev((0, 0), (3, 5)) == 5
    assert chebyshev((4, 4), (4, 4)) == 0
    assert chebyshev((7, 2), (1, 2)) == 6


def test_chebyshev_admissible_on_open_floor():
    rng = random.Random(3)
    for _ in range(200):
        a = (rng.randrange(40), rng.randrange(40))
        b = (rng.randrange(40), rng.randrange(40))
        di, dj = abs(a[0] - b[0]), abs(a[1] - b[1])
        optimal = SQRT2 * min(di, dj) + (max(di, dj) - min(di, dj))
        assert chebyshev(a, b) <= optimal + 1e-12


def test_heuristic_consistent_over_edges():
    goal = (11, 4)
    rng = random.Random(5)
    for _ in range(300):
        u = (rng.randrange(30), rng.randrange(30))
        for off in MOVE_OFFSETS:
            v = (u[0] + off.di, u[1] + off.dj)
            assert chebyshev(u, goal) <= off.cost + chebyshev(v, goal) + 1e-12


# --- neighbors ---------------------------------------------------------------


def test_interior_node_has_eight_neighbors():
    building = all_free(3, 3)
    out = neighbors(building, node(0, 1, 1))
    assert len(out) == 8
    costs = sorted(c for _, c in out)
    assert costs[:4] == [1.0] * 4
    assert all(abs(c - SQRT2) < 1e-12 for c in costs[4:])


def test_corner_node_has_three_neighbors():
    building = all_free(3, 3)
    assert len(neighbors(building, node(0, 0, 0))) == 3


def test_strict_rule_drops_diagonal_between_blocked_flanks():
    building = single_floor("corner", ["101", "011", "111"])
    permissive = {ref.cell for ref, _ in neighbors(building, node(0, 0, 0), "permissive")}
    strict = {ref.cell for ref, _ in neighbors(building, node(0, 0, 0), "strict")}
    assert (1, 1) in permissive
    assert (1, 1) not in strict


def test_neighbors_include_portal_endpoints():
    building = two_floor_fixture()
    out = neighbors(building, node(0, 1, 10))
    assert (node(1, 1, 10), 1.0) in out


def test_neighbors_rejects_blocked_node():
    building = single_floor("b", ["10", "11"])
    with pytest.raises(NodeBlocked):
        neighbors(building, node(0, 0, 1))
    with pytest.raises(ValueError):
        neighbors(building, node(0, 0, 0), "diagonal-ban")


# --- astar basics ------------------------------------------------------------


def test_corridor_route():
    building = all_free(1, 5)
    path = astar(building, node(0, 0, 0), node(0, 0, 4))
    assert path.total_cost == pytest.approx(4.0, abs=1e-9)
    assert len(path.nodes) == 5
    assert verify_path(building, path, start=node(0, 0, 0), goal=node(0, 0, 4)) == []


def test_open_3x3_diagonal_cost_matches_oracle():
    building = all_free(3, 3)
    start, goal = node(0, 0, 0), node(0, 2, 2)
    path = astar(building, start, goal)
    oracle = dijkstra_oracle(building, start, goal)
    assert path.total_cost == pytest.approx(oracle.total_cost, abs=1e-9)
    assert path.total_cost == pytest.approx(2 * SQRT2, abs=1e-9)


def test_enclosed_start_raises_no_path():
    rows = [
        "00011",
        "01011",
        "00011",
        "11111",
        "11111",
    ]
    building = single_floor("walled", rows)
    with pytest.raises(NoPath):
        astar(building, node(0, 1, 1), node(0, 4, 4))


def test_start_and_goal_must_be_free():
    building = single_floor("b", ["10", "11"])
    with pytest.raises(StartBlocked):
        astar(building, node(0, 0, 1), node(0, 1, 1))
    with pytest.raises(GoalBlocked):
        astar(building, node(0, 0, 0), node(0, 0, 1))


def test_start_equals_goal_is_a_trivial_path():
    building = all_free(2, 2)
    path = astar(building, node(0, 0, 0), node(0, 0, 0))
    assert path.nodes == (node(0, 0, 0),)
    assert path.total_cost == 0.0


def test_two_floor_route_uses_portal_endpoints_consecutively():
    building = two_floor_fixture()
    start = building.find_poi("Entrance").location
    goal = building.find_poi("Cafe").location
    path = astar(building, start, goal)
    oracle = dijkstra_oracle(building, start, goal)
    assert path.total_cost == pytest.approx(oracle.total_cost, abs=1e-9)
    hops = [(u, v) for u, v in zip(path.nodes, path.nodes[1:]) if u.floor != v.floor]
    assert hops == [(node(0, 1, 10), node(1, 1, 10))]
    assert verify_path(building, path, start=start, goal=goal) == []


def test_portal_cost_is_respected():
    ground = grid_of(["11"])
    upper = grid_of(["11"])
    building = BuildingMap(
        "pricy",
        (Floor(0, "G", ground), Floor(1, "U", upper)),
        portals=(Portal("elevator", node(0, 0, 0), node(1, 0, 0), cost=5.0),),
    )
    path = astar(building, node(0, 0, 1), node(1, 0, 1))
    assert path.total_cost == pytest.approx(1.0 + 5.0 + 1.0, abs=1e-9)


# --- oracle equivalence and properties ----------------------------------------


def test_astar_matches_oracle_on_random_20x20_grids():
    solved = 0
    for trial in range(50):
        rule = "permissive" if trial % 2 == 0 else "strict"
        building = random_building(seed=900 + trial, rows=20, cols=20, density=0.30)
        rng = random.Random(trial)
        start, goal = random_pair(building, rng)
        try:
            expected = dijkstra_oracle(building, start, goal, rule)
        except NoPath:
            with pytest.raises(NoPath):
                astar(building, start, goal, rule)
            continue
        got = astar(building, start, goal, rule)
        assert got.total_cost == pytest.approx(expected.total_cost, abs=1e-9)
        assert verify_path(building, got, rule, start=start, goal=goal) == []
        solved += 1
    assert solved > 20  # the corpus must actually exercise solvable cases


def test_unreachable_goal_matches_oracle():
    building = single_floor("split", ["101", "101", "101"])
    with pytest.raises(NoPath):
        astar(building, node(0, 0, 0), node(0, 0, 2))
    with pytest.raises(NoPath):
        dijkstra_oracle(building, node(0, 0, 0), node(0, 0, 2))


def test_identical_inputs_give_identical_node_sequences():
    building = random_building(seed=42, rows=30, cols=30, density=0.25)
    start, goal = random_pair(building, random.Random(1))
    first = astar(building, start, goal)
    second = astar(building, start, goal)
    assert first.nodes == second.nodes
    assert first.total_cost == second.total_cost


def test_astar_expands_no_more_than_oracle_on_open_grid():
    building = all_free(50, 50)
    start, goal = node(0, 3, 4), node(0, 46, 41)
    fast = astar(building, start, goal)
    slow = dijkstra_oracle(building, start, goal)
    assert fast.stats.expanded_nodes <= slow.stats.expanded_nodes
    assert fast.stats.expanded_nodes <= fast.stats.pushed_nodes
    assert slow.stats.expanded_nodes <= slow.stats.pushed_nodes


def test_strict_route_never_cuts_corners():
    rows = [
        "110",
        "011",
        "111",
    ]
    building = single_floor("pinch", rows)
    path = astar(building, node(0, 0, 0), node(0, 2, 2), "strict")
    assert verify_path(building, path, "strict") == []
    # permissive may cut straight through the pinch
    loose = astar(building, node(0, 0, 0), node(0, 2, 2), "permissive")
    assert loose.total_cost <= path.total_cost + 1e-9


def test_verify_path_flags_corrupt_paths():
    building = all_free(3, 3)
    good = astar(building, node(0, 0, 0), node(0, 2, 2))
    bad_nodes = (good.nodes[0], good.nodes[-1])  # teleport
    from gridnav.planner import Path, SearchStats

    bad = Path(bad_nodes, good.total_cost, SearchStats(0, 0, 0.0))
    assert verify_path(building, bad) != []
    wrong_cost = Path(good.nodes, good.total_cost + 0.5, good.stats)
    assert any("total_cost" in v for v in verify_path(building, wrong_cost))


def test_total_cost_equals_edge_sum():
    building = random_building(seed=77, rows=25, cols=25, density=0.2)
    start, goal = random_pair(building, random.Random(9))
    try:
        path = astar(building, start, goal)
    except NoPath:
        pytest.skip("unlucky draw")
    total = 0.0
    for u, v in zip(path.nodes, path.nodes[1:]):
        di, dj = abs(v.cell.i - u.cell.i), abs(v.cell.j - u.cell.j)
        total += 1.0 if di + dj == 1 else SQRT2
    assert math.isclose(total, path.total_cost, abs_tol=1e-9)
