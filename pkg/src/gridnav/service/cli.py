"""Command line: build-grid, route, serve, bench, validate.

Exit codes: 0 success, 2 usage error (click), 3 no path, 4 name/endpoint
resolution failure, 5 bundle or validation failure.
"""

from __future__ import annotations

import sys
from pathlib import Path as FsPath

import click
import numpy as np
from PIL import Image

from .. import gridmap
from ..errors import GridNavError
from ..gridmap import BuildingMap, Floor, UnknownFloor
from ..narrator import LmConfig
from ..planner import NoPath
from . import RouteRequest, UnknownPoi, response_document, route_query
from .bench import run_bench

EXIT_NO_PATH = 3
EXIT_RESOLUTION = 4
EXIT_BUNDLE = 5


def _fail(message: str, code: int):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@click.group()
def main():
    """Indoor navigation toolkit: grids, routes, terse commands, walking guides."""


@main.command("build-grid")
@click.argument("image", type=click.Path(exists=True, dir_okay=False, path_type=FsPath))
@click.argument("out", type=click.Path(dir_okay=False, path_type=FsPath))
@click.option("--rows", type=int, required=True, help="Grid rows.")
@click.option("--cols", type=int, required=True, help="Grid columns.")
@click.option("--name", default=None, help="Map name (default: image stem).")
@click.option("--label", default="Ground Floor", show_default=True, help="Floor label.")
@click.option("--blocked-threshold", type=float, default=0.5, show_default=True,
              help="Cell is blocked when its blocked-pixel fraction exceeds this.")
@click.option("--luminance-cutoff", type=float, default=None,
              help="Pixels darker than this count as blocked (default: midpoint of the raster range).")
@click.option("--meters-per-cell", type=float, default=None, help="Optional real-world cell size.")
def build_grid(image, out, rows, cols, name, label, blocked_threshold, luminance_cutoff, meters_per_cell):
    """Binarize a grayscale floor-plan mask into a single-floor bundle."""
    mask = np.asarray(Image.open(image).convert("L"))
    try:
        grid = gridmap.binarize_mask(mask, rows, cols, blocked_threshold, luminance_cutoff)
        building = BuildingMap(
            name=name or image.stem,
            floors=(Floor(0, label, grid, source_image=image.name),),
            meters_per_cell=meters_per_cell,
        )
        gridmap.save_bundle(building, out)
    except GridNavError as exc:
        _fail(str(exc), EXIT_BUNDLE)
    free = int(grid.cells.sum())
    click.echo(f"wrote {out} ({rows}x{cols}, {free} free / {rows * cols} cells)")


@main.command("route")
@click.argument("bundle", type=click.Path(exists=True, dir_okay=False, path_type=FsPath))
@click.argument("origin")
@click.argument("destination")
@click.option("--corner-rule", type=click.Choice(["permissive", "strict"]), default="permissive",
              show_default=True)
@click.option("--narrate", "narrate_mode", type=click.Choice(["template", "lm"]), default="template",
              show_default=True)
@click.option("--lm-endpoint", default=None, help="Completion endpoint URL (lm mode).")
@click.option("--lm-timeout", type=float, default=10.0, show_default=True)
@click.option("--json", "as_json", is_flag=True, help="Print the full response document as JSON.")
def route(bundle, origin, destination, corner_rule, narrate_mode, lm_endpoint, lm_timeout, as_json):
    """Plan a route between two POIs or floor,i,j coordinates."""
    try:
        building = gridmap.load_bundle(bundle)
    except GridNavError as exc:
        _fail(str(exc), EXIT_BUNDLE)
    lm = None
    if narrate_mode == "lm":
        if lm_endpoint is None:
            raise click.UsageError("--narrate lm requires --lm-endpoint")
        lm = LmConfig(endpoint=lm_endpoint, timeout=lm_timeout)
    request = RouteRequest(origin=origin, destination=destination, corner_rule=corner_rule,
                           narrate_mode=narrate_mode, lm=lm)
    try:
        response = route_query(building, request)
    except NoPath as exc:
        _fail(str(exc), EXIT_NO_PATH)
    except (UnknownPoi, UnknownFloor) as exc:
        _fail(str(exc), EXIT_RESOLUTION)
    except GridNavError as exc:
        _fail(str(exc), EXIT_BUNDLE)

    if as_json:
        import json as _json

        click.echo(_json.dumps(response_document(response), indent=2))
        return
    # Everything above the --- marker is deterministic for identical requests.
    click.echo(f"cost: {response.path.total_cost:.4f}")
    click.echo("terse:")
    click.echo(response.terse)
    click.echo("guide:")
    click.echo(response.guide.to_text())
    click.echo("---")
    timings = response.timings
    click.echo(
        f"search_ms={timings['search'] * 1000:.3f} "
        f"compress_ms={timings['compress'] * 1000:.3f} "
        f"narrate_ms={timings['narrate'] * 1000:.3f}"
    )


@main.command("serve")
@click.argument("bundle_dir", type=click.Path(exists=True, file_okay=False, path_type=FsPath))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8645, show_default=True)
@click.option("--ui-dir", type=click.Path(exists=True, file_okay=False, path_type=FsPath), default=None,
              help="Serve a built web UI from this directory under /ui.")
@click.option("--lm-concurrency", type=int, default=2, show_default=True,
              help="Maximum in-flight completion-endpoint narrations.")
def serve(bundle_dir, host, port, ui_dir, lm_concurrency):
    """Run the long-lived editing and routing service."""
    import uvicorn

    from .api import create_app

    try:
        app = create_app(bundle_dir, ui_dir=ui_dir, lm_concurrency=lm_concurrency)
    except GridNavError as exc:
        _fail(str(exc), EXIT_BUNDLE)
    uvicorn.run(app, host=host, port=port, log_level="info")


@main.command("bench")
@click.argument("bundles", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False, path_type=FsPath))
@click.option("--trials", type=int, default=20, show_default=True, help="Pairs per map.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--corner-rule", type=click.Choice(["permissive", "strict"]), default="permissive",
              show_default=True)
@click.option("--format", "fmt", type=click.Choice(["tsv", "json"]), default="tsv", show_default=True)
def bench(bundles, trials, seed, corner_rule, fmt):
    """Measure search/end-to-end times and route determinism on bundle(s)."""
    try:
        buildings = {path.stem: gridmap.load_bundle(path) for path in bundles}
        report = run_bench(buildings, trials=trials, seed=seed, corner_rule=corner_rule)
    except GridNavError as exc:
        _fail(str(exc), EXIT_BUNDLE)
    click.echo(report.to_json() if fmt == "json" else report.to_tsv())


@main.command("validate")
@click.argument("bundle", type=click.Path(exists=True, dir_okay=False, path_type=FsPath))
def validate(bundle):
    """Check a bundle against every structural invariant."""
    try:
        building = gridmap.load_bundle(bundle, validate=False)
    except GridNavError as exc:
        _fail(str(exc), EXIT_BUNDLE)
    violations = gridmap.validate_building(building)
    if violations:
        for message in violations:
            click.echo(f"violation: {message}")
        sys.exit(EXIT_BUNDLE)
    click.echo(f"ok: {building.name} ({len(building.floors)} floor(s), "
               f"{len(building.pois)} POI(s), {len(building.portals)} portal(s))")


if __name__ == "__main__":
    main()
