"""Seeded synthetic scenes with spatially clustered ship layouts.

Real maritime traffic clusters along lanes and harbors, which is exactly the
structure the correlation gate exploits, so the generator places positive
tiles around uniformly drawn cluster centers and fills them with ships. The
produced :class:`~tilegate.scene.Scene` carries an imperfect synthetic
classifier score per tile (low on ship tiles, high on empty tiles, noisy in
between) and synthetic detector output (missed truths, jittered boxes, and
low-confidence false positives), so the whole gate/evaluation pipeline can be
exercised end to end without any trained model.

Reproducibility contract: every draw comes from one ``numpy`` PCG64 generator
(``numpy.random.default_rng(seed)``), consumed in a fixed order: positive
tile layout, then per-tile content in row-major order. Identical config and
seed produce identical scenes on any platform.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .grid import Coord, TileGrid
from .ioutil import write_json_atomic
from .scene import Box, Detection, Scene, TileRecord, write_scene_dir
from .validation import check_in_range, check_non_negative, check_positive

CONFIG_FILENAME = "synth_config.json"


@dataclass(frozen=True, kw_only=True)
class SynthConfig:
    """Knobs for :func:`make_scene`; ``seed`` is mandatory.

    The positive-tile fraction and mean vessels per positive tile default to
    the traffic statistics of a large public tiled-scene benchmark test split.
    """

    seed: int
    rows: int = 30
    cols: int = 30
    tile_size_px: int = 800
    positive_tile_fraction: float = 0.245
    vessels_per_positive_tile_mean: float = 3.23
    cluster_spread_tiles: float = 1.25
    cluster_count: int | None = None
    clf_mean_ship: float = -0.5
    clf_mean_empty: float = 0.5
    clf_sd: float = 0.25
    detector_recall: float = 0.9
    detector_fp_rate: float = 0.1
    box_min_px: float = 20.0
    box_max_px: float = 120.0

    def __post_init__(self) -> None:
        check_in_range("positive_tile_fraction", self.positive_tile_fraction, 0.0, 1.0)
        if self.vessels_per_positive_tile_mean < 1.0:
            raise ValueError("vessels_per_positive_tile_mean must be >= 1")
        check_non_negative("cluster_spread_tiles", self.cluster_spread_tiles)
        check_in_range("clf_mean_ship", self.clf_mean_ship, -1.0, 1.0)
        check_in_range("clf_mean_empty", self.clf_mean_empty, -1.0, 1.0)
        check_non_negative("clf_sd", self.clf_sd)
        check_in_range("detector_recall", self.detector_recall, 0.0, 1.0)
        check_non_negative("detector_fp_rate", self.detector_fp_rate)
        check_positive("box_min_px", self.box_min_px)
        if self.box_max_px < self.box_min_px or self.box_max_px > self.tile_size_px:
            raise ValueError("need box_min_px <= box_max_px <= tile_size_px")
        if self.cluster_count is not None and self.cluster_count < 0:
            raise ValueError("cluster_count must be >= 0")

    def grid(self) -> TileGrid:
        return TileGrid(self.rows, self.cols, self.tile_size_px)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SynthConfig":
        return cls(**data)


def _positive_tiles(config: SynthConfig, rng: np.random.Generator) -> set[Coord]:
    grid = config.grid()
    n_pos = round(config.positive_tile_fraction * grid.n_tiles)
    if n_pos == 0:
        return set()
    n_clusters = config.cluster_count
    if n_clusters is None:
        n_clusters = max(1, round(n_pos / 12))
    if n_clusters == 0:
        raise ValueError("positive tiles requested but cluster_count is 0")
    centers = [
        (int(rng.integers(grid.rows)), int(rng.integers(grid.cols))) for _ in range(n_clusters)
    ]
    positives: set[Coord] = set()
    attempts = 0
    max_attempts = 50 * grid.n_tiles
    while len(positives) < n_pos and attempts < max_attempts:
        attempts += 1
        cr, cc = centers[int(rng.integers(n_clusters))]
        dr, dc = rng.normal(0.0, config.cluster_spread_tiles, size=2)
        tile = (
            min(max(int(round(cr + dr)), 0), grid.rows - 1),
            min(max(int(round(cc + dc)), 0), grid.cols - 1),
        )
        positives.add(tile)
    if len(positives) < n_pos:
        # Dense configs can exhaust the neighborhoods; fill uniformly.
        remaining = sorted(set(grid.coords()) - positives)
        extra = rng.choice(len(remaining), size=n_pos - len(positives), replace=False)
        positives.update(remaining[i] for i in sorted(int(i) for i in extra))
    return positives


def _random_box(config: SynthConfig, rng: np.random.Generator) -> Box:
    w = float(rng.uniform(config.box_min_px, config.box_max_px))
    h = float(rng.uniform(config.box_min_px, config.box_max_px))
    x = float(rng.uniform(0.0, config.tile_size_px - w))
    y = float(rng.uniform(0.0, config.tile_size_px - h))
    return Box(x, y, w, h)


def _jittered(box: Box, config: SynthConfig, rng: np.random.Generator) -> Box:
    size = config.tile_size_px
    w = min(max(box.w * (1.0 + float(rng.normal(0.0, 0.05))), 1.0), size)
    h = min(max(box.h * (1.0 + float(rng.normal(0.0, 0.05))), 1.0), size)
    x = box.x + float(rng.normal(0.0, 0.05 * box.w))
    y = box.y + float(rng.normal(0.0, 0.05 * box.h))
    x = min(max(x, 0.0), size - w)
    y = min(max(y, 0.0), size - h)
    return Box(x, y, w, h)


def _generate(config: SynthConfig, perfect: bool) -> Scene:
    grid = config.grid()
    rng = np.random.default_rng(config.seed)
    positives = _positive_tiles(config, rng)
    tiles: dict[Coord, TileRecord] = {}
    for coord in grid.coords():
        positive = coord in positives
        truths: list[Box] = []
        if positive:
            # Shifted Poisson keeps the configured mean with a floor of one.
            n_vessels = 1 + int(rng.poisson(config.vessels_per_positive_tile_mean - 1.0))
            truths = [_random_box(config, rng) for _ in range(n_vessels)]
        if perfect:
            clf_score = -1.0 if positive else 1.0
            detections = tuple(Detection(b, 1.0) for b in truths)
        else:
            mean = config.clf_mean_ship if positive else config.clf_mean_empty
            clf_score = float(np.clip(rng.normal(mean, config.clf_sd), -1.0, 1.0))
            found = []
            for b in truths:
                if rng.random() < config.detector_recall:
                    found.append(
                        Detection(_jittered(b, config, rng), float(rng.uniform(0.7, 1.0)))
                    )
            for _ in range(int(rng.poisson(config.detector_fp_rate))):
                found.append(Detection(_random_box(config, rng), float(rng.uniform(0.05, 0.5))))
            detections = tuple(found)
        tiles[coord] = TileRecord(coord, clf_score, detections, tuple(truths))
    return Scene(grid, tiles)


def make_scene(config: SynthConfig) -> Scene:
    """Generate a clustered scene with imperfect synthetic scores and detections."""
    return _generate(config, perfect=False)


def make_perfect_scene(config: SynthConfig) -> Scene:
    """Like :func:`make_scene` but with an oracle classifier and detector.

    Ship tiles score -1, empty tiles +1, and the detections are the truth
    boxes verbatim at confidence 1. Useful for tests where any quality loss
    must be attributable to gating alone.
    """
    return _generate(config, perfect=True)


def write_scene_bundle(scene: Scene, directory: str | Path, config: SynthConfig | None = None) -> None:
    """Write the three scene CSVs (and the generating config, when given)."""
    directory = Path(directory)
    write_scene_dir(scene, directory)
    if config is not None:
        write_json_atomic(directory / CONFIG_FILENAME, config.to_dict())


def mean_pairwise_distance(tiles) -> float:
    """Mean pairwise Chebyshev distance between tiles; 0 for fewer than two."""
    tiles = sorted(tiles)
    if len(tiles) < 2:
        return 0.0
    total = 0
    count = 0
    for i, (r1, c1) in enumerate(tiles):
        for r2, c2 in tiles[i + 1 :]:
            total += max(abs(r1 - r2), abs(c1 - c2))
            count += 1
    return total / count
