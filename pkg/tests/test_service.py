import json
import os
import statistics
import threading

import numpy as np
import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient
from PIL import Image

from gridnav.gridmap import (
    BuildingMap,
    Floor,
    Poi,
    load_bundle,
    node,
    save_bundle,
    validate_building,
)
from gridnav.service import RouteRequest, UnknownPoi, response_document, route_query
from gridnav.service.api import PROTOCOL, MapStore, create_app
from gridnav.service.bench import run_bench
from gridnav.service.cli import main
from helpers import completion_stub, grid_of, random_building, single_floor, two_floor_fixture


@pytest.fixture()
def two_floor_bundle(tmp_path):
    path = tmp_path / "twofloor.json"
    save_bundle(two_floor_fixture(), path)
    return path


def write_mask_png(path, height=903, width=1292):
    rng = np.random.default_rng(99)
    mask = np.full((height, width), 255, dtype=np.uint8)
    mask[rng.random((height, width)) < 0.25] = 10
    Image.fromarray(mask, mode="L").save(path)
    return path


# --- core pipeline -----------------------------------------------------------


def test_route_query_resolves_pois_and_coordinates():
    building = two_floor_fixture()
    by_name = route_query(building, RouteRequest("Entrance", "Cafe"))
    by_coord = route_query(building, RouteRequest("0,6,1", "1,6,3"))
    assert by_name.path.nodes == by_coord.path.nodes
    assert by_name.terse == by_coord.terse
    assert "Take the escalator from Floor 0 to 1" in by_name.terse
    assert by_name.guide.to_text() == by_coord.guide.to_text()


def test_route_query_rejects_unknown_poi_and_same_endpoints():
    building = two_floor_fixture()
    with pytest.raises(UnknownPoi):
        route_query(building, RouteRequest("Entrance", "Observatory"))
    from gridnav.service import InvalidRequest

    with pytest.raises(InvalidRequest):
        route_query(building, RouteRequest("Entrance", "entrance"))


def test_response_document_replay_consistency():
    building = two_floor_fixture()
    response = route_query(building, RouteRequest("Entrance", "Cafe"))
    doc = response_document(response)
    assert doc["path"]["nodes"][0] == [0, 6, 1]
    assert doc["path"]["nodes"][-1] == [1, 6, 3]
    assert doc["guide"]["lines"][0].startswith("1. ")
    assert set(doc["timings_ms"]) == {"search", "compress", "narrate"}

    from gridnav.compressor import replay

    assert replay(response.script, building) == node(1, 6, 3)


# --- CLI: build-grid ----------------------------------------------------------


def test_cli_build_grid_produces_expected_dimensions(tmp_path):
    image = write_mask_png(tmp_path / "terminal.png")
    out = tmp_path / "terminal.json"
    result = CliRunner().invoke(
        main, ["build-grid", str(image), str(out), "--rows", "90", "--cols", "130"]
    )
    assert result.exit_code == 0, result.output
    building = load_bundle(out)
    assert building.grid(0).rows == 90
    assert building.grid(0).cols == 130
    assert building.floors[0].source_image == "terminal.png"


def test_cli_build_grid_is_byte_deterministic(tmp_path):
    image = write_mask_png(tmp_path / "m.png", height=120, width=160)
    out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
    runner = CliRunner()
    assert runner.invoke(main, ["build-grid", str(image), str(out1), "--rows", "30", "--cols", "40"]).exit_code == 0
    assert runner.invoke(main, ["build-grid", str(image), str(out2), "--rows", "30", "--cols", "40"]).exit_code == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_cli_build_grid_rejects_oversized_grid(tmp_path):
    image = write_mask_png(tmp_path / "small.png", height=40, width=40)
    result = CliRunner().invoke(
        main, ["build-grid", str(image), str(tmp_path / "x.json"), "--rows", "80", "--cols", "10"]
    )
    assert result.exit_code == 5


# --- CLI: route ----------------------------------------------------------------


def test_cli_route_two_floor_guide(two_floor_bundle):
    result = CliRunner().invoke(main, ["route", str(two_floor_bundle), "Entrance", "Cafe"])
    assert result.exit_code == 0, result.output
    assert result.output.startswith("cost: ")
    assert "terse:" in result.output
    assert "guide:" in result.output
    assert "Take the escalator from Floor 0 to 1" in result.output
    assert "search_ms=" in result.output


def test_cli_route_is_deterministic_up_to_timings(two_floor_bundle):
    runner = CliRunner()
    first = runner.invoke(main, ["route", str(two_floor_bundle), "Entrance", "Cafe"])
    second = runner.invoke(main, ["route", str(two_floor_bundle), "Entrance", "Cafe"])
    assert first.exit_code == second.exit_code == 0
    assert first.output.split("---")[0] == second.output.split("---")[0]


def test_cli_route_unknown_poi_exit_code(two_floor_bundle):
    result = CliRunner().invoke(main, ["route", str(two_floor_bundle), "Entrance", "Roof"])
    assert result.exit_code == 4
    assert "Roof" in result.output


def test_cli_route_no_path_exit_code(tmp_path):
    rows = ["100000000", "000000000", "111111111"]
    building = single_floor("island", rows, pois=(Poi("Island", node(0, 0, 0)), Poi("Hall", node(0, 2, 4))))
    path = tmp_path / "island.json"
    save_bundle(building, path)
    result = CliRunner().invoke(main, ["route", str(path), "Hall", "Island"])
    assert result.exit_code == 3


def test_cli_route_json_document(two_floor_bundle):
    result = CliRunner().invoke(main, ["route", str(two_floor_bundle), "Entrance", "Cafe", "--json"])
    assert result.exit_code == 0
    doc = json.loads(result.output)
    assert doc["path"]["cost"] > 0
    assert any("Take the escalator" in line for line in doc["guide"]["lines"])


def test_cli_route_strict_flag(two_floor_bundle):
    result = CliRunner().invoke(
        main, ["route", str(two_floor_bundle), "Entrance", "Cafe", "--corner-rule", "strict"]
    )
    assert result.exit_code == 0


# --- CLI: validate ----------------------------------------------------------------


def test_cli_validate_ok(two_floor_bundle):
    result = CliRunner().invoke(main, ["validate", str(two_floor_bundle)])
    assert result.exit_code == 0
    assert result.output.startswith("ok:")


def test_cli_validate_reports_violations(tmp_path):
    doc = {
        "schema": "building-bundle@1",
        "name": "bad",
        "meters_per_cell": None,
        "floors": [{"id": 0, "label": "G", "source_image": None, "grid": ["10", "11"]}],
        "portals": [],
        "pois": [{"name": "Ghost", "floor": 0, "i": 0, "j": 1}],
    }
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    result = CliRunner().invoke(main, ["validate", str(path)])
    assert result.exit_code == 5
    assert "Ghost" in result.output


# --- CLI: bench --------------------------------------------------------------------


def test_cli_bench_json_report(tmp_path, two_floor_bundle):
    other = tmp_path / "open.json"
    save_bundle(random_building(seed=12, rows=25, cols=25, density=0.2, name="open"), other)
    result = CliRunner().invoke(
        main,
        ["bench", str(two_floor_bundle), str(other), "--trials", "3", "--seed", "5", "--format", "json"],
    )
    assert result.exit_code == 0, result.output
    doc = json.loads(result.output)
    assert [m["map"] for m in doc["maps"]] == ["open", "twofloor"]
    for entry in doc["maps"]:
        assert entry["trials"] == 3
        assert len(entry["search_ms"]["raw"]) == 3
        assert entry["determinism"] == {"identical": 3, "trials": 3, "ok": True}


def test_bench_aggregates_match_raw_samples():
    report = run_bench({"open": random_building(seed=3, rows=20, cols=20, density=0.1)}, trials=5, seed=1)
    summary = report.results[0].summary()
    raw = summary["search_ms"]["raw"]
    assert summary["search_ms"]["mean"] == pytest.approx(statistics.fmean(raw))
    assert summary["search_ms"]["median"] == pytest.approx(statistics.median(raw))
    assert summary["search_ms"]["p95"] in raw
    assert summary["e2e_ms"]["mean"] == pytest.approx(statistics.fmean(summary["e2e_ms"]["raw"]))
    assert all(e >= s for s, e in zip(raw, summary["e2e_ms"]["raw"]))


def test_bench_single_trial_determinism_vacuously_true():
    report = run_bench({"tiny": single_floor("tiny", ["111", "111", "111"])}, trials=1, seed=0)
    assert report.results[0].determinism_ok
    assert report.results[0].trials == 1


def test_bench_tsv_has_header_and_rows():
    report = run_bench({"tiny": single_floor("tiny", ["111", "111"])}, trials=2, seed=0)
    lines = report.to_tsv().splitlines()
    assert lines[0].startswith("map\ttrials")
    assert lines[1].split("\t")[0] == "tiny"
    assert lines[1].endswith("100%")


# --- HTTP service ----------------------------------------------------------------


@pytest.fixture()
def service_client(tmp_path):
    save_bundle(two_floor_fixture(), tmp_path / "twofloor.json")
    save_bundle(
        single_floor(
            "Open Hall",
            ["111", "111", "111"],
            pois=(Poi("A", node(0, 0, 0)), Poi("B", node(0, 2, 2))),
        ),
        tmp_path / "hall.json",
    )
    app = create_app(tmp_path)
    return TestClient(app), tmp_path


def test_service_reports_versioned_protocol(service_client):
    client, _ = service_client
    doc = client.get("/").json()
    assert doc["service"] == "gridnav"
    assert doc["protocol"] == PROTOCOL
    assert doc["maps"] == 2


def test_service_bounds_inflight_lm_narrations(tmp_path):
    save_bundle(
        single_floor(
            "Hall", ["111", "111", "111"], pois=(Poi("A", node(0, 0, 0)), Poi("B", node(0, 2, 2)))
        ),
        tmp_path / "hall.json",
    )
    client = TestClient(create_app(tmp_path, lm_concurrency=1))
    stats: dict = {}
    with completion_stub(text="not a guide", delay=0.15, stats=stats) as endpoint:
        payload = {
            "origin": "A",
            "destination": "B",
            "narrate": "lm",
            "lm": {"endpoint": endpoint},
        }
        results = []

        def query():
            results.append(client.post("/maps/hall/route", json=payload))

        workers = [threading.Thread(target=query) for _ in range(3)]
        for t in workers:
            t.start()
        for t in workers:
            t.join()
    assert all(r.status_code == 200 for r in results)
    # malformed completion falls back to the template, so guides are still valid
    assert all(r.json()["guide"]["source"] == "template" for r in results)
    assert stats["total"] == 3
    assert stats["peak"] == 1  # the gate admits one completion call at a time


def test_service_lists_and_fetches_maps(service_client):
    client, _ = service_client
    listing = client.get("/maps").json()
    assert [m["id"] for m in listing["maps"]] == ["hall", "twofloor"]
    doc = client.get("/maps/twofloor").json()
    assert doc["name"] == "Two Floor Fixture"
    assert doc["revision"] == 0
    assert len(doc["floors"]) == 2
    assert doc["floors"][0]["grid"][6] == "111111111111"
    assert doc["portals"][0]["kind"] == "escalator"
    assert client.get("/maps/nowhere").status_code == 404
    assert client.get("/maps/nowhere").json()["error"]["code"] == "UnknownMap"


def test_service_route_matches_core_pipeline(service_client):
    client, _ = service_client
    reply = client.post(
        "/maps/twofloor/route", json={"origin": "Entrance", "destination": "Cafe"}
    )
    assert reply.status_code == 200
    doc = reply.json()
    expected = response_document(route_query(two_floor_fixture(), RouteRequest("Entrance", "Cafe")))
    assert doc["path"] == expected["path"]
    assert doc["terse"] == expected["terse"]
    assert doc["guide"] == expected["guide"]
    assert doc["revision"] == 0


def test_service_route_error_codes(service_client):
    client, _ = service_client
    missing = client.post("/maps/twofloor/route", json={"origin": "Entrance", "destination": "Moon"})
    assert missing.status_code == 404
    assert missing.json()["error"]["code"] == "UnknownPoi"
    same = client.post("/maps/twofloor/route", json={"origin": "Entrance", "destination": "Entrance"})
    assert same.status_code == 422
    assert same.json()["error"]["code"] == "InvalidRequest"


def test_service_set_cell_persists_and_bumps_revision(service_client):
    client, tmp_path = service_client
    reply = client.post("/maps/hall/cells", json={"floor": 0, "i": 1, "j": 1, "free": False})
    assert reply.status_code == 200
    assert reply.json() == {"revision": 1}
    assert client.get("/maps/hall").json()["floors"][0]["grid"][1] == "101"
    assert not load_bundle(tmp_path / "hall.json").grid(0).is_free((1, 1))


def test_service_rejects_edit_that_orphans_portal(service_client):
    client, _ = service_client
    reply = client.post("/maps/twofloor/cells", json={"floor": 0, "i": 1, "j": 10, "free": False})
    assert reply.status_code == 409
    assert reply.json()["error"]["code"] == "WouldOrphanPoiOrPortal"
    assert client.get("/maps/twofloor").json()["revision"] == 0


def test_service_poi_and_portal_editing(service_client):
    client, _ = service_client
    assert client.post("/maps/hall/pois", json={"name": "Desk", "floor": 0, "i": 0, "j": 2}).status_code == 200
    assert any(p["name"] == "Desk" for p in client.get("/maps/hall").json()["pois"])

    blocked = client.post("/maps/hall/cells", json={"floor": 0, "i": 1, "j": 1, "free": False})
    assert blocked.status_code == 200
    bad_poi = client.post("/maps/hall/pois", json={"name": "Ghost", "floor": 0, "i": 1, "j": 1})
    assert bad_poi.status_code == 422
    assert bad_poi.json()["error"]["code"] == "ValidationFailure"

    assert client.delete("/maps/hall/pois/desk").status_code == 200
    assert all(p["name"] != "Desk" for p in client.get("/maps/hall").json()["pois"])
    assert client.delete("/maps/hall/pois/desk").status_code == 404

    bad_portal = client.post(
        "/maps/hall/portals",
        json={"kind": "escalator", "a": {"floor": 0, "i": 0, "j": 0}, "b": {"floor": 0, "i": 2, "j": 2}},
    )
    assert bad_portal.status_code == 422  # links a floor to itself
    assert client.delete("/maps/hall/portals/0").status_code == 404


def test_concurrent_routes_see_consistent_snapshots(service_client):
    client, _ = service_client
    request = {"origin": "A", "destination": "B"}

    def doc_key(doc):
        return (json.dumps(doc["path"]), doc["terse"])

    blocked_off = doc_key(client.post("/maps/hall/route", json=request).json())
    client.post("/maps/hall/cells", json={"floor": 0, "i": 1, "j": 1, "free": False})
    blocked_on = doc_key(client.post("/maps/hall/route", json=request).json())
    client.post("/maps/hall/cells", json={"floor": 0, "i": 1, "j": 1, "free": True})
    assert blocked_on != blocked_off

    seen = []
    errors = []

    def reader():
        try:
            for _ in range(30):
                reply = client.post("/maps/hall/route", json=request)
                assert reply.status_code == 200
                seen.append(doc_key(reply.json()))
        except Exception as exc:  # pragma: no cover - surfaced below
            errors.append(exc)

    def writer():
        try:
            for k in range(30):
                free = bool(k % 2)
                reply = client.post("/maps/hall/cells", json={"floor": 0, "i": 1, "j": 1, "free": free})
                assert reply.status_code == 200
        except Exception as exc:  # pragma: no cover
            errors.append(exc)

    threads = [threading.Thread(target=reader) for _ in range(3)] + [threading.Thread(target=writer)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors
    assert set(seen) <= {blocked_off, blocked_on}


def test_store_mutation_failure_keeps_old_state(tmp_path, monkeypatch):
    save_bundle(two_floor_fixture(), tmp_path / "m.json")
    store = MapStore(tmp_path)
    before_bytes = (tmp_path / "m.json").read_bytes()
    before_map, before_rev = store.snapshot("m")

    def broken_replace(src, dst):
        raise OSError("disk full")

    monkeypatch.setattr(os, "replace", broken_replace)
    from gridnav import gridmap

    with pytest.raises(OSError):
        store.mutate("m", lambda b: gridmap.set_cell(b, 0, (0, 0), False))
    monkeypatch.undo()

    assert (tmp_path / "m.json").read_bytes() == before_bytes
    assert store.snapshot("m") == (before_map, before_rev)
    assert validate_building(store.snapshot("m")[0]) == []
