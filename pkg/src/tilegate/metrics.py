"""Detection-quality and cost metrics for gated runs.

Quality side: IoU box matching, precision/recall, and all-point interpolated
average precision at a single IoU threshold. Cost side: a linear time model
(per-tile detection cost plus per-scene overheads), relative time against the
run-everything baseline, and the ``f_beta`` score that trades AP against time
saved. :func:`evaluate` ties both sides together into one report.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

from .gates import GateDecision
from .ioutil import dumps_json, write_text_atomic
from .scene import Box, Scene
from .validation import check_in_range, check_non_negative, check_positive


def iou(a: Box, b: Box) -> float:
    """Intersection over union of two boxes, in [0, 1]."""
    ix = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    iy = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


@dataclass(frozen=True)
class MatchResult:
    """Greedy one-to-one matching outcome for one pool of detections/truths.

    ``labels`` holds ``(confidence, is_true_positive)`` pairs in the greedy
    evaluation order (confidence descending, input order on ties);
    ``pairs`` maps matched detection indices to the truth index they claimed.
    """

    labels: tuple[tuple[float, bool], ...]
    pairs: tuple[tuple[int, int], ...]
    tp: int
    fp: int
    fn: int


def match_detections(detections, truths, iou_threshold: float = 0.5) -> MatchResult:
    """Match detections to truths greedily, best confidence first.

    Each detection claims the unmatched truth with the highest IoU at or
    above ``iou_threshold`` (ties broken by lowest truth index); every truth
    is claimed at most once. Unmatched detections are false positives,
    unmatched truths false negatives.
    """
    thr = check_in_range("iou_threshold", iou_threshold, 0.0, 1.0)
    if not 0.0 < thr < 1.0:
        raise ValueError(f"iou_threshold must be in (0, 1), got {iou_threshold!r}")
    order = sorted(range(len(detections)), key=lambda i: -detections[i].confidence)
    claimed = [False] * len(truths)
    labels = []
    pairs = []
    tp = 0
    for i in order:
        det = detections[i]
        best_iou = 0.0
        best_t = -1
        for t, truth in enumerate(truths):
            if claimed[t]:
                continue
            v = iou(det.box, truth)
            if v >= thr and v > best_iou:
                best_iou = v
                best_t = t
        if best_t >= 0:
            claimed[best_t] = True
            tp += 1
            labels.append((det.confidence, True))
            pairs.append((i, best_t))
        else:
            labels.append((det.confidence, False))
    return MatchResult(tuple(labels), tuple(pairs), tp, len(detections) - tp, len(truths) - tp)


def average_precision(labels, total_truths: int) -> float:
    """All-point interpolated area under the precision-recall curve.

    ``labels`` are ``(confidence, is_true_positive)`` pairs. Detections are
    ranked by descending confidence (stable on ties), each rank contributing
    one PR point; the curve is interpolated with the running maximum of
    precision at equal-or-higher recall. No truths, or no detections with
    truths present, scores 0.
    """
    if total_truths < 0:
        raise ValueError(f"total_truths must be >= 0, got {total_truths!r}")
    if total_truths == 0:
        return 0.0
    ranked = sorted(labels, key=lambda p: -p[0])
    if not ranked:
        return 0.0
    recalls = []
    precisions = []
    tp = 0
    for k, (_, is_tp) in enumerate(ranked, start=1):
        if is_tp:
            tp += 1
        recalls.append(tp / total_truths)
        precisions.append(tp / k)
    interp = list(precisions)
    for i in range(len(interp) - 2, -1, -1):
        interp[i] = max(interp[i], interp[i + 1])
    ap = 0.0
    prev_recall = 0.0
    for r, p in zip(recalls, interp):
        ap += (r - prev_recall) * p
        prev_recall = r
    return ap


@dataclass(frozen=True)
class CostModel:
    """Per-stage time constants, in seconds.

    Detection dominates and scales per tile; classification and scene loading
    are per-scene constants. The correlation vote is effectively free, so its
    constant defaults to (and normally stays) zero.
    """

    t_detect_per_tile: float
    t_classify_per_scene: float = 0.0
    t_load_per_scene: float = 0.0
    t_correlation: float = 0.0

    def __post_init__(self) -> None:
        check_positive("t_detect_per_tile", self.t_detect_per_tile)
        check_non_negative("t_classify_per_scene", self.t_classify_per_scene)
        check_non_negative("t_load_per_scene", self.t_load_per_scene)
        check_non_negative("t_correlation", self.t_correlation)

    def to_dict(self) -> dict:
        return {
            "t_detect_per_tile": self.t_detect_per_tile,
            "t_classify_per_scene": self.t_classify_per_scene,
            "t_load_per_scene": self.t_load_per_scene,
            "t_correlation": self.t_correlation,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CostModel":
        return cls(**{k: float(v) for k, v in data.items()})


def calibrate_cost_model(
    baseline_total: float,
    scenes: int,
    tiles_per_scene: int,
    classify_per_scene: float = 0.0,
    load_per_scene: float = 0.0,
) -> CostModel:
    """Back out the per-tile detection cost from a measured baseline total."""
    check_positive("baseline_total", baseline_total)
    if scenes < 1 or tiles_per_scene < 1:
        raise ValueError("scenes and tiles_per_scene must be positive counts")
    return CostModel(
        t_detect_per_tile=baseline_total / (scenes * tiles_per_scene),
        t_classify_per_scene=check_non_negative("classify_per_scene", classify_per_scene),
        t_load_per_scene=check_non_negative("load_per_scene", load_per_scene),
    )


def simulate_time(decisions, cost: CostModel, stages=()) -> float:
    """Scene processing time implied by a decision list.

    ``stages`` names the gate machinery that ran ("classifier" adds the
    per-scene classification constant; "correlation" adds the nominally zero
    vote cost). Detection cost is linear in the tiles that run.
    """
    n_run = sum(1 for d in decisions if d.run_detection)
    total = cost.t_load_per_scene + n_run * cost.t_detect_per_tile
    if "classifier" in stages:
        total += cost.t_classify_per_scene
    if "correlation" in stages:
        total += cost.t_correlation
    return total


def relative_time(optimized_total: float, baseline_total: float) -> float:
    """Optimized time as a fraction of baseline time (not clamped)."""
    if not baseline_total > 0:
        raise ValueError(f"baseline_total must be > 0, got {baseline_total!r}")
    return optimized_total / baseline_total


def f_beta_score(ap: float, rt: float, beta: float) -> float:
    """Trade-off between detection quality and time saved.

    With saving ``S = 1 - rt``::

        score = (1 + beta^2) * ap * S / (beta^2 * ap + S)

    Smaller ``beta`` weights AP more heavily; ``beta = 1`` is the harmonic
    mean of AP and S. Runs that save no time (``rt >= 1``) score 0.
    """
    ap = check_in_range("ap", ap, 0.0, 1.0)
    rt = check_non_negative("rt", rt)
    if beta <= 0:
        raise ValueError(f"beta must be > 0, got {beta!r}")
    saving = 1.0 - rt
    if saving <= 0.0:
        return 0.0
    return (1.0 + beta * beta) * ap * saving / (beta * beta * ap + saving)


def format_beta(beta: float) -> str:
    """Canonical f_beta key: "1", "0.5", "0.25"."""
    return f"{float(beta):g}"


@dataclass(frozen=True)
class EvalReport:
    """Quality and cost summary for one gate configuration over some scenes."""

    precision: float
    recall: float
    ap: float
    total_time_s: float
    rt: float
    f_beta: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "ap": self.ap,
            "total_time_s": self.total_time_s,
            "rt": self.rt,
            "f_beta": dict(self.f_beta),
        }


def write_report_json(report: EvalReport, path: str | Path) -> None:
    write_text_atomic(path, dumps_json(report.to_dict()))


def write_report_csv(report: EvalReport, path: str | Path) -> None:
    """One-row CSV rendering of the report."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    beta_keys = list(report.f_beta)
    writer.writerow(["precision", "recall", "ap", "total_time_s", "rt"] + [f"f_beta_{k}" for k in beta_keys])
    writer.writerow(
        [repr(report.precision), repr(report.recall), repr(report.ap), repr(report.total_time_s), repr(report.rt)]
        + [repr(report.f_beta[k]) for k in beta_keys]
    )
    write_text_atomic(path, buf.getvalue())


def _as_scene_list(scenes):
    if isinstance(scenes, Scene):
        return [scenes]
    return list(scenes)


def _as_decision_lists(decisions):
    items = list(decisions)
    if items and isinstance(items[0], GateDecision):
        return [items]
    return [list(d) for d in items]


def evaluate(
    scenes,
    decisions,
    cost: CostModel,
    *,
    iou_threshold: float = 0.5,
    betas=(1.0, 0.5, 0.25),
    stages=(),
) -> EvalReport:
    """Evaluate gated detection output against ground truth.

    Accepts a single scene with its decision list, or parallel sequences of
    scenes and decision lists. Detections on tiles that ran are matched to
    that tile's truths; truths on skipped tiles count as false negatives.
    AP pools all scenes; time is summed per scene and divided by the
    run-everything baseline time on the same scenes and cost model.
    """
    scene_list = _as_scene_list(scenes)
    decision_lists = _as_decision_lists(decisions)
    if len(scene_list) != len(decision_lists):
        raise ValueError(
            f"{len(scene_list)} scenes but {len(decision_lists)} decision lists"
        )
    pooled = []  # (confidence, scene_idx, r, c, rank, is_tp) for canonical ordering
    tp = fp = 0
    total_truths = 0
    total_time = 0.0
    baseline_time = 0.0
    for scene_idx, (scene, decision_list) in enumerate(zip(scene_list, decision_lists)):
        by_coord = {d.coord: d for d in decision_list}
        missing = [c for c in scene.grid.coords() if c not in by_coord]
        if missing or len(decision_list) != scene.grid.n_tiles:
            raise ValueError(f"decisions do not cover scene {scene_idx} exactly")
        for coord in scene.grid.coords():
            rec = scene.tiles[coord]
            total_truths += len(rec.ground_truth)
            if not by_coord[coord].run_detection:
                continue
            result = match_detections(rec.detections, rec.ground_truth, iou_threshold)
            tp += result.tp
            fp += result.fp
            for rank, (conf, is_tp) in enumerate(result.labels):
                pooled.append((conf, scene_idx, coord[0], coord[1], rank, is_tp))
        total_time += simulate_time(decision_list, cost, stages)
        baseline_time += cost.t_load_per_scene + cost.t_detect_per_tile * scene.grid.n_tiles
    pooled.sort(key=lambda e: (-e[0], e[1], e[2], e[3], e[4]))
    labels = [(e[0], e[5]) for e in pooled]
    ap = average_precision(labels, total_truths)
    n_det = tp + fp
    precision = tp / n_det if n_det else 0.0
    recall = tp / total_truths if total_truths else 0.0
    rt = relative_time(total_time, baseline_time)
    f_beta = {format_beta(b): f_beta_score(ap, rt, b) for b in betas}
    return EvalReport(
        precision=precision,
        recall=recall,
        ap=ap,
        total_time_s=total_time,
        rt=rt,
        f_beta=f_beta,
    )
