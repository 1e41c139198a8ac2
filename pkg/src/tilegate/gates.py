"""Gates: cheap per-tile predicates deciding whether the expensive detector runs.

Three gate families are provided, plus the all-tiles baseline:

* :class:`ClassifierGate` thresholds the cached per-tile classifier score
  (low score = ship, so detection runs when ``score <= t_clf``).
* :class:`CorrelationGate` first runs detection on a sampling pattern, then
  predicts ship presence for each remaining tile from a weighted vote of the
  pattern tiles in its neighborhood rings (detection runs when the vote is
  ``>= t_cor``).
* :class:`CombinedGate` runs detection only on tiles that pass both.

Gates follow the scikit-learn estimator protocol: the constructor stores
parameters verbatim, ``fit`` is a no-op, parameters are validated when
``predict`` is called, and ``get_params``/``set_params`` work as usual.
``predict(scene)`` returns one :class:`GateDecision` per grid tile in
row-major order, deterministically.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from sklearn.base import BaseEstimator

from .grid import Coord, Pattern, generate_pattern, neighbors_at_distance
from .ioutil import fmt_float, write_text_atomic
from .scene import Scene, ship_indicator
from .validation import (
    DISTANCE_METRICS,
    INDICATOR_SOURCES,
    check_choice,
    check_in_range,
    check_non_negative,
    check_weights,
)


class Stage(str, Enum):
    """Which rule produced a tile's decision."""

    PATTERN_DETECTED = "pattern_detected"
    CLASSIFIER_PASSED = "classifier_passed"
    CLASSIFIER_REJECTED = "classifier_rejected"
    CORRELATION_PASSED = "correlation_passed"
    CORRELATION_REJECTED = "correlation_rejected"
    BASELINE = "baseline"
    RANDOM_KEPT = "random_kept"
    RANDOM_DROPPED = "random_dropped"


RUN_STAGES = frozenset(
    {
        Stage.PATTERN_DETECTED,
        Stage.CLASSIFIER_PASSED,
        Stage.CORRELATION_PASSED,
        Stage.BASELINE,
        Stage.RANDOM_KEPT,
    }
)


@dataclass(frozen=True)
class GateDecision:
    """Per-tile outcome: whether detection runs, and the scores that decided it."""

    coord: Coord
    stage: Stage
    run_detection: bool
    s_clf: float | None = None
    s_cor: float | None = None

    def __post_init__(self) -> None:
        if self.run_detection != (self.stage in RUN_STAGES):
            raise ValueError(f"stage {self.stage.value} inconsistent with run_detection={self.run_detection}")


class NoNeighbors(Exception):
    """No tile with a known indicator lies inside the search rings."""


def _ring_vote(grid, tile, indicators, weights, normalize, metric):
    """Weighted indicator vote over rings 1..len(weights); None if no voter."""
    num = 0.0
    den = 0.0
    voters = 0
    for j, w in enumerate(weights, start=1):
        for nb in neighbors_at_distance(grid, tile, j, metric):
            ind = indicators.get(nb)
            if ind is None:
                continue
            voters += 1
            num += w * ind
            den += w
    if voters == 0:
        return None
    return num / den if normalize else num


def correlation_score(
    scene: Scene,
    known: frozenset[Coord] | set[Coord],
    tile: Coord,
    weights,
    *,
    normalize: bool = True,
    distance_metric: str = "chebyshev",
    indicator_source: str = "truth",
    conf_floor: float = 0.5,
) -> float:
    """Neighborhood vote for one tile given the set of already-decided tiles.

    ``known`` tiles contribute their ship indicator, weighted by ring
    distance; with ``normalize`` the result is the weighted average over the
    known tiles actually inside the rings (always in [0, 1]). Raises
    :class:`NoNeighbors` when no known tile is in range.
    """
    weights = check_weights(weights)
    check_choice("distance_metric", distance_metric, DISTANCE_METRICS)
    if tile in known:
        raise ValueError(f"tile {tile} is already in the known set")
    for t in known:
        if not scene.grid.in_bounds(t):
            raise ValueError(f"known tile {t} outside grid")
    indicators = {
        t: ship_indicator(scene.tiles[t], indicator_source, conf_floor) for t in known
    }
    vote = _ring_vote(scene.grid, tile, indicators, weights, normalize, distance_metric)
    if vote is None:
        raise NoNeighbors(f"tile {tile}: no known tile within {len(weights)} rings")
    return vote


class BaselineGate(BaseEstimator):
    """Runs detection on every tile; the reference point for relative time."""

    stages: tuple[str, ...] = ()

    def fit(self, X=None, y=None):
        return self

    def predict(self, scene: Scene) -> list[GateDecision]:
        return [GateDecision(coord, Stage.BASELINE, True) for coord in scene.grid.coords()]


class ClassifierGate(BaseEstimator):
    """Threshold gate on the cached per-tile classifier score.

    Detection runs on tiles with ``clf_score <= t_clf`` (inclusive); scores
    follow the low-means-ship convention documented in :mod:`tilegate.scene`.
    """

    stages = ("classifier",)

    def __init__(self, t_clf: float = 0.0):
        self.t_clf = t_clf

    def fit(self, X=None, y=None):
        return self

    def predict(self, scene: Scene) -> list[GateDecision]:
        t_clf = check_in_range("t_clf", self.t_clf, -1.0, 1.0)
        out = []
        for coord in scene.grid.coords():
            s = scene.tiles[coord].clf_score
            hit = s <= t_clf
            stage = Stage.CLASSIFIER_PASSED if hit else Stage.CLASSIFIER_REJECTED
            out.append(GateDecision(coord, stage, hit, s_clf=s))
        return out


class _PatternGate(BaseEstimator):
    """Shared plumbing for gates that seed from a sampling pattern."""

    def fit(self, X=None, y=None):
        return self

    def _resolve_pattern(self, scene: Scene) -> Pattern:
        if isinstance(self.pattern, Pattern):
            if self.pattern.grid != scene.grid:
                raise ValueError("pattern was built for a different grid")
            return self.pattern
        return generate_pattern(scene.grid, self.pattern)

    def _check_params(self):
        weights = check_weights(self.weights)
        t_cor = check_non_negative("t_cor", self.t_cor)
        check_choice("distance_metric", self.distance_metric, DISTANCE_METRICS)
        check_choice("indicator_source", self.indicator_source, INDICATOR_SOURCES)
        check_in_range("conf_floor", self.conf_floor, 0.0, 1.0)
        return weights, t_cor


class CorrelationGate(_PatternGate):
    """Pattern-seeded neighborhood gate.

    Pattern tiles always run detection. Every other tile receives the
    weighted indicator vote of the pattern tiles within ``len(weights)``
    rings and runs detection when the vote is ``>= t_cor`` (inclusive).
    Tiles with no pattern tile in range fail open: detection runs, trading
    time for recall.

    Parameters
    ----------
    pattern : "checkers", "alpha", or a Pattern instance (for custom layouts)
    weights : ring weights, ring 1 outward; positive and non-increasing
    t_cor : vote threshold; with ``normalize`` the vote lies in [0, 1]
    normalize : divide the vote by the total weight of available voters
    indicator_source : "detector" (cached detector output, the pipeline
        default) or "truth" (ground truth, for oracle experiments)
    conf_floor : detector confidence floor used by the indicator
    """

    stages = ("correlation",)

    def __init__(
        self,
        pattern="checkers",
        weights=(1.0, 0.1),
        t_cor: float = 0.4375,
        normalize: bool = True,
        distance_metric: str = "chebyshev",
        indicator_source: str = "detector",
        conf_floor: float = 0.5,
    ):
        self.pattern = pattern
        self.weights = weights
        self.t_cor = t_cor
        self.normalize = normalize
        self.distance_metric = distance_metric
        self.indicator_source = indicator_source
        self.conf_floor = conf_floor

    def predict(self, scene: Scene) -> list[GateDecision]:
        weights, t_cor = self._check_params()
        pattern = self._resolve_pattern(scene)
        indicators = {
            t: ship_indicator(scene.tiles[t], self.indicator_source, self.conf_floor)
            for t in pattern.selected
        }
        out = []
        for coord in scene.grid.coords():
            if coord in pattern.selected:
                out.append(GateDecision(coord, Stage.PATTERN_DETECTED, True))
                continue
            vote = _ring_vote(
                scene.grid, coord, indicators, weights, self.normalize, self.distance_metric
            )
            if vote is None:
                out.append(GateDecision(coord, Stage.CORRELATION_PASSED, True))
            else:
                hit = vote >= t_cor
                stage = Stage.CORRELATION_PASSED if hit else Stage.CORRELATION_REJECTED
                out.append(GateDecision(coord, stage, hit, s_cor=vote))
        return out


class CombinedGate(_PatternGate):
    """Both gates in sequence: detection runs only on tiles both accept.

    The classifier is applied to every tile, pattern tiles included. A
    pattern tile vetoed by the classifier skips detection, so its indicator
    for the neighborhood vote is the classifier verdict (0) rather than the
    detector output it never produced. Non-pattern tiles run detection when
    the vote passes ``t_cor`` AND the classifier score passes ``t_clf``;
    the recorded stage is the first gate that rejected, or the last that
    passed.
    """

    stages = ("correlation", "classifier")

    def __init__(
        self,
        pattern="checkers",
        weights=(1.0, 0.5),
        t_cor: float = 0.25,
        t_clf: float = 0.0,
        normalize: bool = True,
        distance_metric: str = "chebyshev",
        indicator_source: str = "detector",
        conf_floor: float = 0.5,
    ):
        self.pattern = pattern
        self.weights = weights
        self.t_cor = t_cor
        self.t_clf = t_clf
        self.normalize = normalize
        self.distance_metric = distance_metric
        self.indicator_source = indicator_source
        self.conf_floor = conf_floor

    def predict(self, scene: Scene) -> list[GateDecision]:
        weights, t_cor = self._check_params()
        t_clf = check_in_range("t_clf", self.t_clf, -1.0, 1.0)
        pattern = self._resolve_pattern(scene)
        indicators: dict[Coord, int] = {}
        for t in pattern.selected:
            rec = scene.tiles[t]
            if rec.clf_score <= t_clf:
                indicators[t] = ship_indicator(rec, self.indicator_source, self.conf_floor)
            else:
                indicators[t] = 0
        out = []
        for coord in scene.grid.coords():
            s_clf = scene.tiles[coord].clf_score
            clf_hit = s_clf <= t_clf
            if coord in pattern.selected:
                if clf_hit:
                    out.append(GateDecision(coord, Stage.PATTERN_DETECTED, True, s_clf=s_clf))
                else:
                    out.append(GateDecision(coord, Stage.CLASSIFIER_REJECTED, False, s_clf=s_clf))
                continue
            vote = _ring_vote(
                scene.grid, coord, indicators, weights, self.normalize, self.distance_metric
            )
            cor_hit = True if vote is None else vote >= t_cor
            if not cor_hit:
                out.append(
                    GateDecision(coord, Stage.CORRELATION_REJECTED, False, s_clf=s_clf, s_cor=vote)
                )
            elif clf_hit:
                out.append(
                    GateDecision(coord, Stage.CLASSIFIER_PASSED, True, s_clf=s_clf, s_cor=vote)
                )
            else:
                out.append(
                    GateDecision(coord, Stage.CLASSIFIER_REJECTED, False, s_clf=s_clf, s_cor=vote)
                )
        return out


_DECISION_HEADER = ["r", "c", "stage", "run_detection", "s_clf", "s_cor"]


def write_decisions(decisions, path: str | Path) -> None:
    """Emit the per-tile decision log as CSV (consumed by evaluation and sweeps)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_DECISION_HEADER)
    for d in decisions:
        writer.writerow(
            [
                d.coord[0],
                d.coord[1],
                d.stage.value,
                "true" if d.run_detection else "false",
                fmt_float(d.s_clf),
                fmt_float(d.s_cor),
            ]
        )
    write_text_atomic(path, buf.getvalue())


def load_decisions(path: str | Path) -> list[GateDecision]:
    path = Path(path)
    out = []
    with path.open(encoding="utf-8-sig", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header] != _DECISION_HEADER:
            raise ValueError(f"{path}: expected header {','.join(_DECISION_HEADER)}")
        for row in reader:
            if not row:
                continue
            r, c, stage, run, s_clf, s_cor = row
            out.append(
                GateDecision(
                    (int(r), int(c)),
                    Stage(stage),
                    run == "true",
                    s_clf=float(s_clf) if s_clf else None,
                    s_cor=float(s_cor) if s_cor else None,
                )
            )
    return out
