"""File formats: planar raw images, view directories and atomic writes.

Planar raw: Y, then Cb, then Cr, row-major, each sample one byte (8-bit) or
a little-endian uint16 (up to 16-bit). A JSON sidecar ``<file>.json`` holds
``width``, ``height``, ``bit_depth`` and ``chroma_format`` ("444" or "420").

View directory: one planar raw file per view named
``view_r{row}_c{col}_poc{P}.yuv`` plus ``geometry.json`` (geometry, POC map,
view size, bit depth, chroma format). Directories of 8/16-bit PGM views with
the same naming are also readable; PGM carries luma only, so chroma is set
to mid-gray 4:4:4.
"""

from __future__ import annotations

import contextlib
import json
import os
import re
import shutil
import tempfile
from pathlib import Path

import numpy as np

from .view_grid import GridGeometry, LensletImage, ViewGrid, assign_poc, chroma_shape, make_grid

GEOMETRY_FILE = "geometry.json"
_VIEW_RE = re.compile(r"^view_r(\d+)_c(\d+)_poc(\d+)\.(yuv|pgm)$")


class FormatError(ValueError):
    pass


def view_name(cell, poc: int, ext: str = "yuv") -> str:
    return f"view_r{cell[0]}_c{cell[1]}_poc{poc}.{ext}"


def _dtype(bit_depth: int):
    return np.dtype(np.uint8) if bit_depth <= 8 else np.dtype("<u2")


def planes_to_bytes(planes, bit_depth: int) -> bytes:
    dt = _dtype(bit_depth)
    return b"".join(np.ascontiguousarray(p, dtype=dt).tobytes() for p in planes)


def planes_from_bytes(data: bytes, width: int, height: int, bit_depth: int, chroma_format: str) -> tuple:
    dt = _dtype(bit_depth)
    ch, cw = chroma_shape(height, width, chroma_format)
    shapes = [(height, width), (ch, cw), (ch, cw)]
    need = sum(h * w for h, w in shapes) * dt.itemsize
    if len(data) != need:
        raise FormatError(f"expected {need} bytes for {width}x{height} {chroma_format} {bit_depth}-bit, got {len(data)}")
    out, pos = [], 0
    for h, w in shapes:
        n = h * w * dt.itemsize
        out.append(np.frombuffer(data[pos : pos + n], dtype=dt).reshape(h, w).astype(np.int32))
        pos += n
    return tuple(out)


def sidecar_path(path) -> Path:
    return Path(str(path) + ".json")


def read_raw(path) -> LensletImage:
    path = Path(path)
    side = sidecar_path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such image: {path}")
    if not side.is_file():
        raise FileNotFoundError(f"missing JSON sidecar: {side}")
    meta = json.loads(side.read_text())
    try:
        w, h, bd, cf = int(meta["width"]), int(meta["height"]), int(meta["bit_depth"]), str(meta["chroma_format"])
    except (KeyError, ValueError) as e:
        raise FormatError(f"bad sidecar {side}: {e}") from None
    return LensletImage(planes_from_bytes(path.read_bytes(), w, h, bd, cf), bd, cf)


def raw_meta(img) -> dict:
    return {"width": img.width, "height": img.height, "bit_depth": img.bit_depth, "chroma_format": img.chroma_format}


# --- atomic output ----------------------------------------------------------


@contextlib.contextmanager
def atomic_file(path):
    """Yield a temp path next to ``path``; rename onto it only if the block succeeds."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    os.close(fd)
    try:
        yield Path(tmp)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def write_bytes(path, data: bytes) -> None:
    with atomic_file(path) as tmp:
        tmp.write_bytes(data)


def write_text(path, text: str) -> None:
    write_bytes(path, text.encode("utf-8"))


def write_json(path, obj) -> None:
    write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


@contextlib.contextmanager
def atomic_dir(path):
    """Yield a temp directory; on success it replaces ``path``.

    An existing ``path`` is only replaced when it is a view directory written
    by this module (holds ``geometry.json``) or empty.
    """
    path = Path(path)
    if path.exists() and not (path.is_dir() and (not any(path.iterdir()) or (path / GEOMETRY_FILE).exists())):
        raise FileExistsError(f"refusing to overwrite {path}: not a view directory")
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{path.name}.", dir=path.parent))
    try:
        yield tmp
        if path.exists():
            shutil.rmtree(path)
        os.replace(tmp, path)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise


def write_raw(path, img) -> None:
    with atomic_file(path) as tmp:
        tmp.write_bytes(planes_to_bytes(img.planes, img.bit_depth))
    write_json(sidecar_path(path), raw_meta(img))


# --- view directories -------------------------------------------------------


def grid_meta(grid: ViewGrid) -> dict:
    h, w = grid.view_shape
    return {
        "geometry": grid.geometry.to_json(),
        "pocmap": grid.pocmap.to_json(),
        "width": w,
        "height": h,
        "bit_depth": grid.bit_depth,
        "chroma_format": grid.chroma_format,
    }


def write_view_dir(path, grid: ViewGrid) -> list[Path]:
    """Write every view plus ``geometry.json``; returns the final view file paths in POC order."""
    pm = grid.pocmap
    names = []
    with atomic_dir(path) as tmp:
        for poc in grid.pocs():
            name = view_name(pm.cell(poc), poc)
            (tmp / name).write_bytes(planes_to_bytes(grid[poc].planes, grid.bit_depth))
            names.append(name)
        (tmp / GEOMETRY_FILE).write_text(json.dumps(grid_meta(grid), indent=2, sort_keys=True) + "\n")
    return [Path(path) / n for n in names]


def _read_pgm(path, bit_depth: int) -> tuple:
    from PIL import Image

    with Image.open(path) as im:
        y = np.asarray(im, dtype=np.int32)
    mid = np.full_like(y, 1 << (bit_depth - 1))
    return y, mid, mid.copy()


def read_view_dir(path) -> ViewGrid:
    path = Path(path)
    meta_path = path / GEOMETRY_FILE
    if not meta_path.is_file():
        raise FileNotFoundError(f"missing {GEOMETRY_FILE} in {path}")
    meta = json.loads(meta_path.read_text())
    geom = GridGeometry.from_json(meta["geometry"])
    pm = assign_poc(geom)
    bd, cf = int(meta.get("bit_depth", 8)), str(meta.get("chroma_format", "444"))
    planes = {}
    for f in sorted(path.iterdir()):
        m = _VIEW_RE.match(f.name)
        if not m:
            continue
        r, c, poc, ext = int(m[1]), int(m[2]), int(m[3]), m[4]
        if pm.cell(poc) != (r, c):
            raise FormatError(f"{f.name}: POC {poc} belongs to cell {pm.cell(poc)}, not {(r, c)}")
        if ext == "pgm":
            planes[poc] = _read_pgm(f, bd)
            cf = "444"
        else:
            planes[poc] = planes_from_bytes(f.read_bytes(), int(meta["width"]), int(meta["height"]), bd, cf)
    missing = sorted(set(range(len(pm))) - set(planes))
    if missing:
        raise FormatError(f"{path}: missing views for POCs {missing[:8]}")
    return make_grid(geom, planes, bd, cf)
