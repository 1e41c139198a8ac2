"""Tile-grid geometry and the sampling patterns used by the correlation gate.

A scene is a ``rows x cols`` lattice of square tiles. Tiles are addressed by
``(row, col)`` pairs or by a row-major integer index; both views are bijective.
"""

from __future__ import annotations

from collections.abc import Iterator
from dataclasses import dataclass
from pathlib import Path

from .validation import DISTANCE_METRICS, check_choice, check_count

Coord = tuple[int, int]

PATTERN_KINDS = ("checkers", "alpha", "custom")


@dataclass(frozen=True)
class TileGrid:
    """Rectangular grid of tiles. ``tile_size_px`` is informational only."""

    rows: int
    cols: int
    tile_size_px: int = 800

    def __post_init__(self) -> None:
        check_count("rows", self.rows)
        check_count("cols", self.cols)
        check_count("tile_size_px", self.tile_size_px)

    @property
    def n_tiles(self) -> int:
        return self.rows * self.cols

    def in_bounds(self, tile: Coord) -> bool:
        r, c = tile
        return 0 <= r < self.rows and 0 <= c < self.cols

    def index_of(self, tile: Coord) -> int:
        if not self.in_bounds(tile):
            raise ValueError(f"tile {tile} outside {self.rows}x{self.cols} grid")
        r, c = tile
        return r * self.cols + c

    def coord_of(self, index: int) -> Coord:
        if not 0 <= index < self.n_tiles:
            raise ValueError(f"index {index} outside [0, {self.n_tiles})")
        return divmod(index, self.cols)

    def coords(self) -> Iterator[Coord]:
        """All tile coordinates in row-major (canonical) order."""
        for r in range(self.rows):
            for c in range(self.cols):
                yield (r, c)


def build_grid(rows: int, cols: int, tile_size_px: int = 800) -> TileGrid:
    """Validated TileGrid constructor."""
    return TileGrid(rows, cols, tile_size_px)


@dataclass(frozen=True)
class Pattern:
    """The subset of tiles that always receives detection in the first pass."""

    grid: TileGrid
    kind: str
    selected: frozenset[Coord]

    def __post_init__(self) -> None:
        check_choice("kind", self.kind, PATTERN_KINDS)
        for tile in self.selected:
            if not self.grid.in_bounds(tile):
                raise ValueError(
                    f"pattern tile {tile} outside {self.grid.rows}x{self.grid.cols} grid"
                )

    @property
    def coverage(self) -> float:
        """Fraction of grid tiles the pattern selects."""
        return len(self.selected) / self.grid.n_tiles


def generate_pattern(grid: TileGrid, kind: str) -> Pattern:
    """Build one of the two deterministic sampling patterns.

    ``checkers`` selects tiles with even row+col (half the grid);
    ``alpha`` selects the top-left tile of every 2x2 block (a quarter).
    """
    check_choice("kind", kind, ("checkers", "alpha"))
    if kind == "checkers":
        selected = frozenset(t for t in grid.coords() if sum(t) % 2 == 0)
    else:
        selected = frozenset((r, c) for r, c in grid.coords() if r % 2 == 0 and c % 2 == 0)
    return Pattern(grid, kind, selected)


def load_pattern(grid: TileGrid, path: str | Path) -> Pattern:
    """Read a custom pattern file: one 0-based ``r,c`` pair per line.

    Blank lines and lines starting with ``#`` are ignored.
    """
    path = Path(path)
    tiles: set[Coord] = set()
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'r,c', got {line!r}")
            try:
                tile = (int(parts[0]), int(parts[1]))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-integer coordinate in {line!r}") from None
            if not grid.in_bounds(tile):
                raise ValueError(f"{path}:{lineno}: tile {tile} outside grid")
            tiles.add(tile)
    return Pattern(grid, "custom", frozenset(tiles))


def neighbors_at_distance(
    grid: TileGrid, tile: Coord, j: int, metric: str = "chebyshev"
) -> set[Coord]:
    """All in-bounds tiles exactly ``j`` rings away from ``tile``.

    Chebyshev rings are squares (j=1 is the 8-neighborhood); Manhattan rings
    are diamonds. Rings for distinct ``j`` are disjoint.
    """
    if not grid.in_bounds(tile):
        raise ValueError(f"tile {tile} outside {grid.rows}x{grid.cols} grid")
    if not isinstance(j, int) or j < 1:
        raise ValueError(f"ring distance must be a positive integer, got {j!r}")
    check_choice("metric", metric, DISTANCE_METRICS)
    r, c = tile
    ring: set[Coord] = set()
    if metric == "chebyshev":
        for d in range(-j, j + 1):
            ring.update(((r - j, c + d), (r + j, c + d), (r + d, c - j), (r + d, c + j)))
    else:
        for dr in range(-j, j + 1):
            dc = j - abs(dr)
            ring.update(((r + dr, c + dc), (r + dr, c - dc)))
    return {t for t in ring if grid.in_bounds(t)}
