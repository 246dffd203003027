"""Indoor navigation toolkit.

Floor-plan masks become multi-floor occupancy grids; an 8-connected A*
plans optimal routes across floors through declared portals; routes are
compressed into terse compass commands and rendered as numbered walking
guides, either by a deterministic template or by any local text-completion
endpoint with strict output validation.
"""

from .errors import GridNavError
from .gridmap import (
    BuildingMap,
    Cell,
    Floor,
    Grid,
    NodeRef,
    Poi,
    Portal,
    binarize_mask,
    load_bundle,
    node,
    save_bundle,
    set_cell,
    suggest_dimensions,
    validate_building,
)
from .planner import (
    MOVE_OFFSETS,
    Path,
    SearchStats,
    astar,
    chebyshev,
    dijkstra_oracle,
    neighbors,
    verify_path,
)
from .compressor import (
    Move,
    PortalTransit,
    TerseScript,
    compress,
    diagonal_collapse,
    expand,
    render_terse,
    replay,
    rle,
    terse_text,
    vectorize,
)
from .narrator import (
    InstructionScript,
    LmConfig,
    RepairReport,
    SystemPrompt,
    build_prompt,
    invoke_lm,
    narrate,
    postprocess,
    render_template,
)

__version__ = "0.1.0"

__all__ = [
    "GridNavError",
    "BuildingMap",
    "Cell",
    "Floor",
    "Grid",
    "NodeRef",
    "Poi",
    "Portal",
    "binarize_mask",
    "load_bundle",
    "node",
    "save_bundle",
    "set_cell",
    "suggest_dimensions",
    "validate_building",
    "MOVE_OFFSETS",
    "Path",
    "SearchStats",
    "astar",
    "chebyshev",
    "dijkstra_oracle",
    "neighbors",
    "verify_path",
    "Move",
    "PortalTransit",
    "TerseScript",
    "compress",
    "diagonal_collapse",
    "expand",
    "render_terse",
    "replay",
    "rle",
    "terse_text",
    "vectorize",
    "InstructionScript",
    "LmConfig",
    "RepairReport",
    "SystemPrompt",
    "build_prompt",
    "invoke_lm",
    "narrate",
    "postprocess",
    "render_template",
    "__version__",
]
