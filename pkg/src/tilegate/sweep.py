"""Threshold sweeps and the random-deletion baseline for trade-off curves.

Each sweep evaluates one gate family across a list of thresholds and reports
one :class:`SweepPoint` per configuration: AP relative to the run-everything
baseline on the y axis, time saved on the x axis. The random baseline keeps a
uniform tile subset and anchors what any gate must beat. Points serialize to
a plot-ready CSV plus a JSON manifest that pins configuration, cost model,
seed, and tool version for exact reruns.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .gates import BaselineGate, ClassifierGate, CombinedGate, CorrelationGate, GateDecision, Stage
from .grid import Pattern
from .ioutil import write_json_atomic, write_text_atomic
from .metrics import CostModel, EvalReport, evaluate, format_beta
from .scene import Scene
from .validation import check_in_range

BETAS = (1.0, 0.5, 0.25)


@dataclass(frozen=True)
class SweepPoint:
    """One gate configuration on the trade-off curve."""

    config_id: str
    thresholds: dict[str, float]
    time_saving: float
    relative_ap: float
    f_beta: dict[str, float]


def _evaluate_gate(gate, scenes, cost, iou_threshold, threads=1) -> EvalReport:
    scenes = [scenes] if isinstance(scenes, Scene) else list(scenes)
    if threads > 1 and len(scenes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            decisions = list(pool.map(gate.predict, scenes))
    else:
        decisions = [gate.predict(s) for s in scenes]
    return evaluate(
        scenes, decisions, cost, iou_threshold=iou_threshold, betas=BETAS, stages=gate.stages
    )


def _relative_ap(ap: float, baseline_ap: float) -> float:
    if baseline_ap > 0:
        return ap / baseline_ap
    # Gating can only remove detections, so a zero-AP baseline pins AP at zero.
    return 1.0 if ap == 0 else math.inf


def _point(config_id, thresholds, report, baseline_report) -> SweepPoint:
    return SweepPoint(
        config_id=config_id,
        thresholds=thresholds,
        time_saving=1.0 - report.rt,
        relative_ap=_relative_ap(report.ap, baseline_report.ap),
        f_beta=dict(report.f_beta),
    )


def baseline_report(scenes, cost, *, iou_threshold: float = 0.5, threads: int = 1) -> EvalReport:
    return _evaluate_gate(BaselineGate(), scenes, cost, iou_threshold, threads)


def _pattern_label(pattern) -> str:
    return pattern.kind if isinstance(pattern, Pattern) else str(pattern)


def _run_points(gates_with_ids, scenes, cost, iou_threshold, threads, base):
    points = []
    for config_id, thresholds, gate in gates_with_ids:
        report = _evaluate_gate(gate, scenes, cost, iou_threshold, threads)
        points.append(_point(config_id, thresholds, report, base))
    points.sort(key=lambda p: p.time_saving)
    return points


def sweep_classifier(
    scenes, cost: CostModel, t_clf_values, *, iou_threshold: float = 0.5, threads: int = 1
) -> list[SweepPoint]:
    """One point per classifier threshold, sorted by time saving."""
    if not t_clf_values:
        raise ValueError("t_clf_values must be non-empty")
    base = baseline_report(scenes, cost, iou_threshold=iou_threshold, threads=threads)
    gates = [
        ("classifier", {"t_clf": float(t)}, ClassifierGate(t_clf=float(t))) for t in t_clf_values
    ]
    return _run_points(gates, scenes, cost, iou_threshold, threads, base)


def sweep_correlation(
    scenes,
    cost: CostModel,
    pattern_kind,
    weights,
    t_cor_values,
    *,
    normalize: bool = True,
    distance_metric: str = "chebyshev",
    indicator_source: str = "detector",
    conf_floor: float = 0.5,
    iou_threshold: float = 0.5,
    threads: int = 1,
) -> list[SweepPoint]:
    """One point per correlation threshold for a fixed pattern and weight set.

    ``pattern_kind`` is "checkers", "alpha", or a Pattern instance.
    """
    if not t_cor_values:
        raise ValueError("t_cor_values must be non-empty")
    base = baseline_report(scenes, cost, iou_threshold=iou_threshold, threads=threads)
    config_id = f"correlation-{_pattern_label(pattern_kind)}"
    gates = [
        (
            config_id,
            {"t_cor": float(t)},
            CorrelationGate(
                pattern=pattern_kind,
                weights=tuple(weights),
                t_cor=float(t),
                normalize=normalize,
                distance_metric=distance_metric,
                indicator_source=indicator_source,
                conf_floor=conf_floor,
            ),
        )
        for t in t_cor_values
    ]
    return _run_points(gates, scenes, cost, iou_threshold, threads, base)


def sweep_combined(
    scenes,
    cost: CostModel,
    pattern_kind,
    weights,
    t_cor_values,
    t_clf_values,
    *,
    normalize: bool = True,
    distance_metric: str = "chebyshev",
    indicator_source: str = "detector",
    conf_floor: float = 0.5,
    iou_threshold: float = 0.5,
    threads: int = 1,
) -> list[SweepPoint]:
    """Full grid of (t_cor, t_clf) pairs for the combined gate."""
    if not t_cor_values or not t_clf_values:
        raise ValueError("threshold lists must be non-empty")
    base = baseline_report(scenes, cost, iou_threshold=iou_threshold, threads=threads)
    config_id = f"combined-{_pattern_label(pattern_kind)}"
    gates = [
        (
            config_id,
            {"t_cor": float(tc), "t_clf": float(tf)},
            CombinedGate(
                pattern=pattern_kind,
                weights=tuple(weights),
                t_cor=float(tc),
                t_clf=float(tf),
                normalize=normalize,
                distance_metric=distance_metric,
                indicator_source=indicator_source,
                conf_floor=conf_floor,
            ),
        )
        for tc in t_cor_values
        for tf in t_clf_values
    ]
    return _run_points(gates, scenes, cost, iou_threshold, threads, base)


def random_decisions(scene: Scene, keep_fraction: float, rng: np.random.Generator) -> list[GateDecision]:
    """Keep a uniform sample of floor(keep_fraction * tiles), drop the rest."""
    grid = scene.grid
    n_keep = int(math.floor(keep_fraction * grid.n_tiles))
    kept_idx = set(int(i) for i in rng.choice(grid.n_tiles, size=n_keep, replace=False))
    out = []
    for idx, coord in enumerate(grid.coords()):
        if idx in kept_idx:
            out.append(GateDecision(coord, Stage.RANDOM_KEPT, True))
        else:
            out.append(GateDecision(coord, Stage.RANDOM_DROPPED, False))
    return out


def random_baseline(
    scenes, cost: CostModel, keep_fraction: float, seed: int, *, iou_threshold: float = 0.5
) -> SweepPoint:
    """Trade-off point for deleting a uniform random tile subset per scene."""
    check_in_range("keep_fraction", keep_fraction, 0.0, 1.0)
    scene_list = [scenes] if isinstance(scenes, Scene) else list(scenes)
    rng = np.random.default_rng(seed)
    decisions = [random_decisions(s, keep_fraction, rng) for s in scene_list]
    report = evaluate(scene_list, decisions, cost, iou_threshold=iou_threshold, betas=BETAS)
    base = baseline_report(scene_list, cost, iou_threshold=iou_threshold)
    return _point("random", {"keep_fraction": float(keep_fraction)}, report, base)


CURVE_HEADER = ["config_id", "threshold_json", "time_saving", "relative_ap", "f1", "f05", "f025"]


def emit_curves(points, path: str | Path) -> None:
    """Write sweep points as a plot-ready CSV, sorted by config then time saving."""
    points = list(points)
    if not points:
        raise ValueError("no sweep points to emit")
    points.sort(key=lambda p: (p.config_id, p.time_saving))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CURVE_HEADER)
    for p in points:
        writer.writerow(
            [
                p.config_id,
                json.dumps(p.thresholds, sort_keys=True, separators=(",", ":")),
                repr(p.time_saving),
                repr(p.relative_ap),
                repr(p.f_beta[format_beta(1.0)]),
                repr(p.f_beta[format_beta(0.5)]),
                repr(p.f_beta[format_beta(0.25)]),
            ]
        )
    write_text_atomic(path, buf.getvalue())


def load_curves(path: str | Path) -> list[SweepPoint]:
    path = Path(path)
    out = []
    with path.open(encoding="utf-8-sig", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header] != CURVE_HEADER:
            raise ValueError(f"{path}: expected header {','.join(CURVE_HEADER)}")
        for row in reader:
            if not row:
                continue
            config_id, threshold_json, ts, rap, f1, f05, f025 = row
            out.append(
                SweepPoint(
                    config_id=config_id,
                    thresholds=json.loads(threshold_json),
                    time_saving=float(ts),
                    relative_ap=float(rap),
                    f_beta={
                        format_beta(1.0): float(f1),
                        format_beta(0.5): float(f05),
                        format_beta(0.25): float(f025),
                    },
                )
            )
    return out


def write_manifest(path: str | Path, command: str, config: dict, cost: CostModel, seed=None) -> None:
    """Record everything needed to re-run a command bit-identically."""
    from . import __version__

    write_json_atomic(
        path,
        {
            "tool_version": __version__,
            "command": command,
            "config": config,
            "cost_model": cost.to_dict(),
            "seed": seed,
        },
    )
