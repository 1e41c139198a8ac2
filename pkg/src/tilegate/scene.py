"""Per-tile data model and the CSV formats that carry it.

A scene is one fully tiled source image: every grid tile has a cached
classifier score, the detector's output boxes for that tile, and the
ground-truth boxes. Three CSV files describe one scene (0-based tile
coordinates, UTF-8, LF or CRLF line endings, ``.`` decimal point):

* scores:     header ``r,c,clf_score``, exactly one row per grid tile
* detections: header ``r,c,x,y,w,h,confidence``, zero or more rows per tile
* truth:      header ``r,c,x,y,w,h``, zero or more rows per tile

.. warning::
   Score sign convention: ``clf_score`` lies in [-1, 1] and a LOWER score
   means "ship more likely". The classifier gate runs detection on tiles
   with ``score <= threshold``; +1 is the most confidently empty tile.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

from .grid import Coord, TileGrid
from .ioutil import fmt_float, write_text_atomic
from .validation import INDICATOR_SOURCES, check_choice, check_finite, check_in_range

SCORES_FILENAME = "scores.csv"
DETECTIONS_FILENAME = "detections.csv"
TRUTH_FILENAME = "truth.csv"

_SCORE_HEADER = ["r", "c", "clf_score"]
_DETECTION_HEADER = ["r", "c", "x", "y", "w", "h", "confidence"]
_TRUTH_HEADER = ["r", "c", "x", "y", "w", "h"]


class SceneFormatError(ValueError):
    """A scene file failed to parse or violated an invariant."""

    def __init__(self, path, line: int | None, message: str):
        self.path = str(path)
        self.line = line
        where = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{where}: {message}")


@dataclass(frozen=True)
class Box:
    """Axis-aligned box in tile-local pixels; ``w`` and ``h`` must be positive."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        for name in ("x", "y", "w", "h"):
            check_finite(name, getattr(self, name))
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box sides must be positive, got w={self.w}, h={self.h}")

    @property
    def area(self) -> float:
        return self.w * self.h


@dataclass(frozen=True)
class Detection:
    box: Box
    confidence: float

    def __post_init__(self) -> None:
        check_in_range("confidence", self.confidence, 0.0, 1.0)


@dataclass(frozen=True)
class TileRecord:
    """Everything known about one tile before any gate runs."""

    coord: Coord
    clf_score: float
    detections: tuple[Detection, ...] = ()
    ground_truth: tuple[Box, ...] = ()

    def __post_init__(self) -> None:
        check_in_range("clf_score", self.clf_score, -1.0, 1.0)


@dataclass(frozen=True)
class Scene:
    """One tiled source image; immutable after construction.

    ``tiles`` must cover the grid exactly: one record per coordinate.
    """

    grid: TileGrid
    tiles: dict[Coord, TileRecord] = field(repr=False)

    def __post_init__(self) -> None:
        if len(self.tiles) != self.grid.n_tiles or any(
            not self.grid.in_bounds(c) for c in self.tiles
        ):
            missing = [c for c in self.grid.coords() if c not in self.tiles]
            raise ValueError(
                f"scene must cover all {self.grid.n_tiles} tiles; "
                f"missing {missing[:5]}{'...' if len(missing) > 5 else ''}"
            )


def ship_indicator(record: TileRecord, source: str = "truth", conf_floor: float = 0.5) -> int:
    """1 if the tile is considered to contain at least one ship, else 0.

    ``truth`` consults the ground-truth boxes; ``detector`` consults the
    cached detector output, counting detections at or above ``conf_floor``.
    """
    check_choice("source", source, INDICATOR_SOURCES)
    check_in_range("conf_floor", conf_floor, 0.0, 1.0)
    if source == "truth":
        return 1 if record.ground_truth else 0
    return 1 if any(d.confidence >= conf_floor for d in record.detections) else 0


def _read_rows(path: str | Path, header: list[str]):
    path = Path(path)
    try:
        fh = path.open(encoding="utf-8-sig", newline="")
    except OSError as exc:
        raise SceneFormatError(path, None, f"cannot open: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise SceneFormatError(path, 1, f"missing header {','.join(header)}") from None
        if [col.strip() for col in first] != header:
            raise SceneFormatError(
                path, 1, f"expected header {','.join(header)}, got {','.join(first)!r}"
            )
        for row in reader:
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise SceneFormatError(
                    path, reader.line_num, f"expected {len(header)} fields, got {len(row)}"
                )
            yield reader.line_num, row


def _parse_coord(path, lineno: int, grid: TileGrid, r_text: str, c_text: str) -> Coord:
    try:
        coord = (int(r_text), int(c_text))
    except ValueError:
        raise SceneFormatError(path, lineno, f"non-integer tile coordinate ({r_text},{c_text})") from None
    if not grid.in_bounds(coord):
        raise SceneFormatError(
            path, lineno, f"tile {coord} outside {grid.rows}x{grid.cols} grid"
        )
    return coord


def _parse_float(path, lineno: int, name: str, text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise SceneFormatError(path, lineno, f"non-numeric {name}: {text!r}") from None


def load_scene(
    grid: TileGrid,
    score_file: str | Path,
    detection_file: str | Path,
    truth_file: str | Path,
) -> Scene:
    """Assemble a Scene from its three CSV files.

    Every grid tile must appear exactly once in the score file; tiles absent
    from the detection/truth files simply have no boxes. All format errors
    report the offending file and line.
    """
    scores: dict[Coord, float] = {}
    for lineno, row in _read_rows(score_file, _SCORE_HEADER):
        coord = _parse_coord(score_file, lineno, grid, row[0], row[1])
        if coord in scores:
            raise SceneFormatError(score_file, lineno, f"duplicate score for tile {coord}")
        value = _parse_float(score_file, lineno, "clf_score", row[2])
        if not -1.0 <= value <= 1.0:
            raise SceneFormatError(score_file, lineno, f"clf_score {value} outside [-1, 1]")
        scores[coord] = value
    missing = [c for c in grid.coords() if c not in scores]
    if missing:
        raise SceneFormatError(score_file, None, f"no clf_score for tile {missing[0]}")

    detections: dict[Coord, list[Detection]] = {}
    for lineno, row in _read_rows(detection_file, _DETECTION_HEADER):
        coord = _parse_coord(detection_file, lineno, grid, row[0], row[1])
        vals = [_parse_float(detection_file, lineno, n, t) for n, t in zip(_DETECTION_HEADER[2:], row[2:])]
        try:
            det = Detection(Box(*vals[:4]), vals[4])
        except ValueError as exc:
            raise SceneFormatError(detection_file, lineno, str(exc)) from None
        detections.setdefault(coord, []).append(det)

    truths: dict[Coord, list[Box]] = {}
    for lineno, row in _read_rows(truth_file, _TRUTH_HEADER):
        coord = _parse_coord(truth_file, lineno, grid, row[0], row[1])
        vals = [_parse_float(truth_file, lineno, n, t) for n, t in zip(_TRUTH_HEADER[2:], row[2:])]
        try:
            box = Box(*vals)
        except ValueError as exc:
            raise SceneFormatError(truth_file, lineno, str(exc)) from None
        truths.setdefault(coord, []).append(box)

    tiles = {
        coord: TileRecord(
            coord,
            scores[coord],
            tuple(detections.get(coord, ())),
            tuple(truths.get(coord, ())),
        )
        for coord in grid.coords()
    }
    return Scene(grid, tiles)


def write_scene(
    scene: Scene,
    score_file: str | Path,
    detection_file: str | Path,
    truth_file: str | Path,
) -> None:
    """Serialize a Scene to the three CSV files in canonical row-major order."""
    score_buf = io.StringIO()
    det_buf = io.StringIO()
    truth_buf = io.StringIO()
    score_w = csv.writer(score_buf, lineterminator="\n")
    det_w = csv.writer(det_buf, lineterminator="\n")
    truth_w = csv.writer(truth_buf, lineterminator="\n")
    score_w.writerow(_SCORE_HEADER)
    det_w.writerow(_DETECTION_HEADER)
    truth_w.writerow(_TRUTH_HEADER)
    for coord in scene.grid.coords():
        rec = scene.tiles[coord]
        r, c = coord
        score_w.writerow([r, c, fmt_float(rec.clf_score)])
        for det in rec.detections:
            b = det.box
            det_w.writerow(
                [r, c, fmt_float(b.x), fmt_float(b.y), fmt_float(b.w), fmt_float(b.h), fmt_float(det.confidence)]
            )
        for b in rec.ground_truth:
            truth_w.writerow([r, c, fmt_float(b.x), fmt_float(b.y), fmt_float(b.w), fmt_float(b.h)])
    write_text_atomic(score_file, score_buf.getvalue())
    write_text_atomic(detection_file, det_buf.getvalue())
    write_text_atomic(truth_file, truth_buf.getvalue())


def load_scene_dir(grid: TileGrid, directory: str | Path) -> Scene:
    """Load a scene from a directory holding the three conventionally named CSVs."""
    directory = Path(directory)
    return load_scene(
        grid,
        directory / SCORES_FILENAME,
        directory / DETECTIONS_FILENAME,
        directory / TRUTH_FILENAME,
    )


def write_scene_dir(scene: Scene, directory: str | Path) -> None:
    directory = Path(directory)
    write_scene(
        scene,
        directory / SCORES_FILENAME,
        directory / DETECTIONS_FILENAME,
        directory / TRUTH_FILENAME,
    )
