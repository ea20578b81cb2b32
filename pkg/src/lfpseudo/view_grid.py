"""Lenslet decomposition, view grid geometry, POC assignment and view coordinates.

Coordinates follow the convention used throughout the package: the center
view sits at ``(0, 0)``, ``x`` grows to the left and ``y`` grows upwards, so
for a grid cell ``(row, col)``::

    x = center_col - col
    y = center_row - row
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple

import numpy as np

CHROMA_FORMATS = ("444", "420")


class GeometryError(ValueError):
    """Invalid grid geometry."""


class DimensionError(ValueError):
    """Image and geometry dimensions are incompatible."""


class IncompleteGridError(ValueError):
    """A view grid is missing one of its surviving cells."""


class GridLookupError(KeyError):
    """POC or coordinate outside the grid."""


class ViewCoord(NamedTuple):
    x: int
    y: int


@dataclass(frozen=True)
class GridGeometry:
    rows: int
    cols: int
    removed: frozenset = frozenset()
    microlens_pitch: int | None = None

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise GeometryError(f"grid must be at least 1x1, got {self.rows}x{self.cols}")
        if self.rows % 2 == 0 or self.cols % 2 == 0:
            raise GeometryError(f"rows and cols must be odd, got {self.rows}x{self.cols}")
        removed = frozenset((int(r), int(c)) for r, c in self.removed)
        object.__setattr__(self, "removed", removed)
        for r, c in removed:
            if not (0 <= r < self.rows and 0 <= c < self.cols):
                raise GeometryError(f"removed cell {(r, c)} outside the grid")
            if r not in (0, self.rows - 1) and c not in (0, self.cols - 1):
                raise GeometryError(f"removed cell {(r, c)} is not on the grid boundary")
        if self.center in removed:
            raise GeometryError("the center view cannot be removed")
        if self.microlens_pitch is not None and self.microlens_pitch < max(self.rows, self.cols):
            raise GeometryError(
                f"microlens pitch {self.microlens_pitch} smaller than the angular grid "
                f"{self.rows}x{self.cols}"
            )

    @property
    def center(self) -> tuple[int, int]:
        return (self.rows - 1) // 2, (self.cols - 1) // 2

    @property
    def pitch(self) -> int:
        return self.microlens_pitch if self.microlens_pitch is not None else max(self.rows, self.cols)

    @property
    def n_views(self) -> int:
        return self.rows * self.cols - len(self.removed)

    def cells(self) -> Iterator[tuple[int, int]]:
        """Surviving cells in raster order."""
        for r in range(self.rows):
            for c in range(self.cols):
                if (r, c) not in self.removed:
                    yield r, c

    def cell_to_coord(self, cell: tuple[int, int]) -> ViewCoord:
        cr, cc = self.center
        return ViewCoord(cc - cell[1], cr - cell[0])

    def coord_to_cell(self, coord: tuple[int, int]) -> tuple[int, int]:
        cr, cc = self.center
        return cr - coord[1], cc - coord[0]

    def has_cell(self, cell: tuple[int, int]) -> bool:
        r, c = cell
        return 0 <= r < self.rows and 0 <= c < self.cols and (r, c) not in self.removed

    def to_json(self) -> dict:
        return {
            "rows": self.rows,
            "cols": self.cols,
            "removed": sorted([list(rc) for rc in self.removed]),
            "microlens_pitch": self.microlens_pitch,
        }

    @classmethod
    def from_json(cls, d: dict) -> "GridGeometry":
        return cls(
            rows=int(d["rows"]),
            cols=int(d["cols"]),
            removed=frozenset(tuple(rc) for rc in d.get("removed", [])),
            microlens_pitch=d.get("microlens_pitch"),
        )


def corner_geometry(rows: int = 13, cols: int | None = None, pitch: int | None = None) -> GridGeometry:
    """Grid with its four extreme corner cells removed."""
    cols = rows if cols is None else cols
    if rows == 1 or cols == 1:
        return GridGeometry(rows, cols, frozenset(), pitch)
    corners = {(0, 0), (0, cols - 1), (rows - 1, 0), (rows - 1, cols - 1)}
    return GridGeometry(rows, cols, frozenset(corners), pitch)


def default_geometry() -> GridGeometry:
    """13x13 minus corners: 165 views."""
    return corner_geometry(13)


@dataclass(frozen=True)
class PocMap:
    """Bijection between POCs ``0..N-1`` and surviving grid cells."""

    geometry: GridGeometry
    cells: tuple = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {cell: poc for poc, cell in enumerate(self.cells)})

    def __len__(self) -> int:
        return len(self.cells)

    def cell(self, poc: int) -> tuple[int, int]:
        if not 0 <= poc < len(self.cells):
            raise GridLookupError(f"POC {poc} out of range 0..{len(self.cells) - 1}")
        return self.cells[poc]

    def poc(self, cell: tuple[int, int]) -> int:
        try:
            return self._index[tuple(cell)]
        except KeyError:
            raise GridLookupError(f"cell {tuple(cell)} not in grid") from None

    def coord(self, poc: int) -> ViewCoord:
        return self.geometry.cell_to_coord(self.cell(poc))

    def poc_at(self, coord: tuple[int, int]) -> int:
        return self.poc(self.geometry.coord_to_cell(coord))

    def to_json(self) -> dict:
        return {
            "geometry": self.geometry.to_json(),
            "cells": [
                {"poc": p, "row": r, "col": c, "x": self.coord(p).x, "y": self.coord(p).y}
                for p, (r, c) in enumerate(self.cells)
            ],
        }


def assign_poc(geom: GridGeometry) -> PocMap:
    """Center gets POC 0, the other surviving cells 1..N-1 in raster order."""
    center = geom.center
    cells = [center] + [cell for cell in geom.cells() if cell != center]
    return PocMap(geom, tuple(cells))


def poc_to_coord(poc: int, geom: GridGeometry) -> ViewCoord:
    return assign_poc(geom).coord(poc)


def coord_to_poc(coord: tuple[int, int], geom: GridGeometry) -> int:
    return assign_poc(geom).poc_at(coord)


def distance(a: tuple[int, int], b: tuple[int, int]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


# --- images -----------------------------------------------------------------


def chroma_shape(height: int, width: int, chroma_format: str) -> tuple[int, int]:
    if chroma_format == "444":
        return height, width
    if chroma_format == "420":
        return (height + 1) // 2, (width + 1) // 2
    raise ValueError(f"unknown chroma format {chroma_format!r}")


def _check_planes(planes, bit_depth: int, chroma_format: str) -> tuple:
    if bit_depth not in (8, 10):
        raise ValueError(f"bit depth must be 8 or 10, got {bit_depth}")
    if len(planes) != 3:
        raise ValueError("expected three planes (Y, U, V)")
    y = np.asarray(planes[0])
    h, w = y.shape
    cshape = chroma_shape(h, w, chroma_format)
    out = [y.astype(np.int32)]
    for p in planes[1:]:
        p = np.asarray(p)
        if p.shape != cshape:
            raise DimensionError(f"chroma plane {p.shape} inconsistent with {chroma_format} luma {y.shape}")
        out.append(p.astype(np.int32))
    maxval = (1 << bit_depth) - 1
    for p in out:
        if p.size and (p.min() < 0 or p.max() > maxval):
            raise ValueError(f"samples outside [0, {maxval}]")
    return tuple(out)


@dataclass(frozen=True, eq=False)
class LensletImage:
    planes: tuple
    bit_depth: int = 8
    chroma_format: str = "444"

    def __post_init__(self):
        object.__setattr__(self, "planes", _check_planes(self.planes, self.bit_depth, self.chroma_format))

    @property
    def height(self) -> int:
        return self.planes[0].shape[0]

    @property
    def width(self) -> int:
        return self.planes[0].shape[1]


@dataclass(frozen=True, eq=False)
class View:
    planes: tuple
    coord: ViewCoord
    poc: int


@dataclass(frozen=True, eq=False)
class ViewGrid:
    geometry: GridGeometry
    views: dict
    bit_depth: int = 8
    chroma_format: str = "444"

    def __post_init__(self):
        shapes = {tuple(p.shape for p in v.planes) for v in self.views.values()}
        if len(shapes) > 1:
            raise DimensionError("views in one grid must share dimensions")

    @property
    def pocmap(self) -> PocMap:
        return assign_poc(self.geometry)

    @property
    def view_shape(self) -> tuple[int, int]:
        return next(iter(self.views.values())).planes[0].shape

    def __getitem__(self, poc: int) -> View:
        return self.views[poc]

    def __len__(self) -> int:
        return len(self.views)

    def pocs(self) -> list[int]:
        return sorted(self.views)

    def replace(self, poc: int, planes) -> "ViewGrid":
        views = dict(self.views)
        old = views[poc]
        views[poc] = View(tuple(np.asarray(p, dtype=np.int32) for p in planes), old.coord, poc)
        return ViewGrid(self.geometry, views, self.bit_depth, self.chroma_format)

    def digest(self) -> str:
        """Content hash over all views in POC order."""
        import hashlib

        h = hashlib.sha256()
        h.update(f"{self.bit_depth}:{self.chroma_format}:".encode())
        for poc in self.pocs():
            for p in self.views[poc].planes:
                h.update(np.ascontiguousarray(p, dtype="<i4").tobytes())
        return h.hexdigest()


def make_grid(geom: GridGeometry, planes_by_poc: dict, bit_depth: int = 8, chroma_format: str = "444") -> ViewGrid:
    pm = assign_poc(geom)
    views = {}
    for poc, planes in planes_by_poc.items():
        planes = _check_planes(planes, bit_depth, chroma_format)
        views[poc] = View(planes, pm.coord(poc), poc)
    return ViewGrid(geom, views, bit_depth, chroma_format)


def _lattice_offset(geom: GridGeometry) -> tuple[int, int]:
    p = geom.pitch
    return (p - geom.rows) // 2, (p - geom.cols) // 2


def decompose_lenslet(img: LensletImage, geom: GridGeometry) -> ViewGrid:
    """Gather, for every microlens, the sample at intra-lens offset (row, col).

    Microlenses tile the raster as ``pitch x pitch`` blocks; the angular grid is
    centered inside each block. Nearest-neighbor sampling only.
    """
    if img.chroma_format != "444":
        raise DimensionError("lenslet decomposition needs 4:4:4 input; subsample chroma per view instead")
    p = geom.pitch
    if img.height < p or img.width < p:
        raise DimensionError(f"image {img.width}x{img.height} smaller than one {p}x{p} microlens")
    n_ly, n_lx = img.height // p, img.width // p
    r0, c0 = _lattice_offset(geom)
    pm = assign_poc(geom)
    views = {}
    for poc, (r, c) in enumerate(pm.cells):
        planes = tuple(
            np.ascontiguousarray(plane[r0 + r : n_ly * p : p, c0 + c : n_lx * p : p]) for plane in img.planes
        )
        views[poc] = View(planes, pm.coord(poc), poc)
    return ViewGrid(geom, views, img.bit_depth, "444")


def recompose(grid: ViewGrid, original: LensletImage | None = None) -> LensletImage:
    """Inverse of :func:`decompose_lenslet`.

    Lattice positions not covered by a surviving view (removed cells, the
    margin inside each microlens, a partial last microlens) are copied from
    ``original`` when given, otherwise left at zero.
    """
    if grid.chroma_format != "444":
        raise DimensionError("recompose needs a 4:4:4 view grid")
    pm = grid.pocmap
    missing = [p for p in range(len(pm)) if p not in grid.views]
    if missing:
        raise IncompleteGridError(f"grid is missing views for POCs {missing[:8]}")
    geom = grid.geometry
    p = geom.pitch
    n_ly, n_lx = grid.view_shape
    if original is not None:
        if original.height // p != n_ly or original.width // p != n_lx:
            raise DimensionError("original image does not match the view grid")
        planes = [pl.copy() for pl in original.planes]
    else:
        planes = [np.zeros((n_ly * p, n_lx * p), dtype=np.int32) for _ in range(3)]
    r0, c0 = _lattice_offset(geom)
    for poc, (r, c) in enumerate(pm.cells):
        for k in range(3):
            planes[k][r0 + r : n_ly * p : p, c0 + c : n_lx * p : p] = grid.views[poc].planes[k]
    return LensletImage(tuple(planes), grid.bit_depth, "444")


def interleave(views: dict, geom: GridGeometry, bit_depth: int = 8) -> LensletImage:
    """Build a lenslet raster from per-cell views (``{(row, col): planes}``)."""
    pm = assign_poc(geom)
    planes_by_poc = {pm.poc(cell): pl for cell, pl in views.items()}
    return recompose(make_grid(geom, planes_by_poc, bit_depth, "444"))


def subsample_chroma(grid: ViewGrid) -> ViewGrid:
    """4:4:4 -> 4:2:0 by 2x2 averaging (rounded), luma untouched."""
    if grid.chroma_format == "420":
        return grid
    views = {}
    for poc, v in grid.views.items():
        y, u, v_ = v.planes
        h, w = y.shape
        ch, cw = chroma_shape(h, w, "420")

        def down(p):
            padded = np.pad(p, ((0, 2 * ch - h), (0, 2 * cw - w)), mode="edge")
            s = padded.reshape(ch, 2, cw, 2).sum(axis=(1, 3))
            return (s + 2) // 4

        views[poc] = View((y, down(u), down(v_)), v.coord, poc)
    return ViewGrid(grid.geometry, views, grid.bit_depth, "420")


def iter_coords(geom: GridGeometry) -> Iterable[ViewCoord]:
    pm = assign_poc(geom)
    return (pm.coord(p) for p in range(len(pm)))
