"""Detection-budget gating for tiled scenes.

Running an object detector on every tile of a large scene wastes most of its
time on empty water. This package models that pipeline on cached per-tile
data: cheap gates decide which tiles the expensive detector runs on, and the
evaluation stack quantifies what the skipping costs (average precision) and
buys (relative time), including the ``f_beta`` trade-off score and full
threshold-sweep curves against a random-deletion baseline.
"""

from .gates import (
    BaselineGate,
    ClassifierGate,
    CombinedGate,
    CorrelationGate,
    GateDecision,
    NoNeighbors,
    Stage,
    correlation_score,
    load_decisions,
    write_decisions,
)
from .grid import (
    Pattern,
    TileGrid,
    build_grid,
    generate_pattern,
    load_pattern,
    neighbors_at_distance,
)
from .metrics import (
    CostModel,
    EvalReport,
    average_precision,
    calibrate_cost_model,
    evaluate,
    f_beta_score,
    iou,
    match_detections,
    relative_time,
    simulate_time,
)
from .scene import (
    Box,
    Detection,
    Scene,
    SceneFormatError,
    TileRecord,
    load_scene,
    load_scene_dir,
    ship_indicator,
    write_scene,
    write_scene_dir,
)
from .sweep import (
    SweepPoint,
    emit_curves,
    load_curves,
    random_baseline,
    sweep_classifier,
    sweep_combined,
    sweep_correlation,
)
from .synth import SynthConfig, make_perfect_scene, make_scene, write_scene_bundle

__version__ = "0.1.0"

__all__ = [
    "BaselineGate",
    "Box",
    "ClassifierGate",
    "CombinedGate",
    "CorrelationGate",
    "CostModel",
    "Detection",
    "EvalReport",
    "GateDecision",
    "NoNeighbors",
    "Pattern",
    "Scene",
    "SceneFormatError",
    "Stage",
    "SweepPoint",
    "SynthConfig",
    "TileGrid",
    "TileRecord",
    "average_precision",
    "build_grid",
    "calibrate_cost_model",
    "correlation_score",
    "emit_curves",
    "evaluate",
    "f_beta_score",
    "generate_pattern",
    "iou",
    "load_curves",
    "load_decisions",
    "load_pattern",
    "load_scene",
    "load_scene_dir",
    "make_perfect_scene",
    "make_scene",
    "match_detections",
    "neighbors_at_distance",
    "random_baseline",
    "relative_time",
    "ship_indicator",
    "simulate_time",
    "sweep_classifier",
    "sweep_combined",
    "sweep_correlation",
    "write_decisions",
    "write_scene",
    "write_scene_bundle",
    "write_scene_dir",
    "__version__",
]
