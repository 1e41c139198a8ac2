import random

import pytest

from tilegate.grid import TileGrid
from tilegate.scene import Box, Detection, Scene, TileRecord


def make_box(x=100.0, y=100.0, w=50.0, h=40.0) -> Box:
    return Box(x, y, w, h)


def make_record(coord, clf_score=0.0, detections=(), truths=()) -> TileRecord:
    return TileRecord(coord, clf_score, tuple(detections), tuple(truths))


def scene_with_ships(grid: TileGrid, ship_tiles, clf_score=0.0, detect=True) -> Scene:
    """Scene with one truth box per listed tile; detections mirror truth when
    ``detect`` so the detector-sourced indicator agrees with ground truth."""
    ship_tiles = set(ship_tiles)
    tiles = {}
    for coord in grid.coords():
        if coord in ship_tiles:
            box = make_box()
            dets = (Detection(box, 0.9),) if detect else ()
            tiles[coord] = make_record(coord, clf_score, dets, (box,))
        else:
            tiles[coord] = make_record(coord, clf_score)
    return Scene(grid, tiles)


def random_scene(grid: TileGrid, rng: random.Random, ship_prob=0.3) -> Scene:
    """Small random scene with varied scores and truth/detection mixes."""
    tiles = {}
    for coord in grid.coords():
        score = rng.uniform(-1.0, 1.0)
        truths = []
        dets = []
        if rng.random() < ship_prob:
            for _ in range(rng.randint(1, 3)):
                w = rng.uniform(20, 80)
                h = rng.uniform(20, 80)
                x = rng.uniform(0, 700)
                y = rng.uniform(0, 700)
                box = Box(x, y, w, h)
                truths.append(box)
                if rng.random() < 0.8:
                    dets.append(Detection(box, rng.uniform(0.5, 1.0)))
        if rng.random() < 0.2:
            dets.append(Detection(Box(rng.uniform(0, 700), rng.uniform(0, 700), 30, 30), rng.uniform(0.05, 0.6)))
        tiles[coord] = make_record(coord, score, dets, truths)
    return Scene(grid, tiles)


@pytest.fixture
def grid4() -> TileGrid:
    return TileGrid(4, 4, 800)


@pytest.fixture
def grid5() -> TileGrid:
    return TileGrid(5, 5, 800)
