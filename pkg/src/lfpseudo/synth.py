"""Synthetic light fields with known inter-view structure."""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .view_grid import GridGeometry, ViewGrid, assign_poc, make_grid, subsample_chroma


def _texture(rng, h, w, sigma=2.0, lo=16, hi=235):
    t = ndimage.gaussian_filter(rng.standard_normal((h, w)), sigma, mode="wrap")
    t += 0.35 * ndimage.gaussian_filter(rng.standard_normal((h, w)), 0.8, mode="wrap")
    t = (t - t.min()) / (t.max() - t.min() + 1e-12)
    return lo + (hi - lo) * t


def _finish(geom, planes_by_poc, bit_depth, chroma_format) -> ViewGrid:
    scale = 4 if bit_depth == 10 else 1
    maxval = (1 << bit_depth) - 1
    out = {
        p: tuple(np.clip(np.rint(pl * scale), 0, maxval).astype(np.int32) for pl in planes)
        for p, planes in planes_by_poc.items()
    }
    grid = make_grid(geom, out, bit_depth, "444")
    return subsample_chroma(grid) if chroma_format == "420" else grid


def translating_texture(geom: GridGeometry, size=(64, 64), shift: int = 1, seed: int = 0,
                        bit_depth: int = 8, chroma_format: str = "420") -> ViewGrid:
    """Every view is the same texture displaced by ``shift * (x, y)`` pixels.

    View ``(x, y)`` samples the base texture at ``(row + shift*y, col + shift*x)``,
    so a block of the current view is found in a reference view at integer
    displacement ``shift * (x_cur - x_ref, y_cur - y_ref)`` (dx, dy).
    """
    rng = np.random.default_rng(seed)
    h, w = size
    m = shift * max(geom.rows, geom.cols)
    bases = [_texture(rng, h + 2 * m, w + 2 * m, s, lo, hi)
             for s, lo, hi in ((2.0, 16, 235), (4.0, 96, 160), (4.0, 96, 160))]
    pm = assign_poc(geom)
    planes = {}
    for p in range(len(pm)):
        x, y = pm.coord(p)
        r0, c0 = m + shift * y, m + shift * x
        planes[p] = tuple(b[r0 : r0 + h, c0 : c0 + w] for b in bases)
    return _finish(geom, planes, bit_depth, chroma_format)


def true_shift(coord_cur, coord_ref, shift: int = 1) -> tuple[int, int]:
    """Integer (dx, dy) mapping a block of ``coord_cur`` onto ``coord_ref`` in :func:`translating_texture`."""
    return shift * (coord_cur[0] - coord_ref[0]), shift * (coord_cur[1] - coord_ref[1])


def pinhole_scene(geom: GridGeometry, size=(64, 64), seed: int = 1, bit_depth: int = 8,
                  chroma_format: str = "420", disparities=(0.3, 0.9, 1.6)) -> ViewGrid:
    """Layered planar scene seen through a grid of pinhole cameras.

    Each layer is a textured plane at its own depth, i.e. its own per-view
    disparity (pixels per unit of view offset, fractional); nearer layers are
    opaque discs drawn over farther ones. Sampling is bilinear.
    """
    rng = np.random.default_rng(seed)
    h, w = size
    m = int(np.ceil(max(disparities) * max(geom.rows, geom.cols))) + 2
    H, W = h + 2 * m, w + 2 * m
    layers = []
    yy, xx = np.mgrid[0:H, 0:W]
    for k, d in enumerate(disparities):
        tex = [_texture(rng, H, W, s, lo, hi)
               for s, lo, hi in ((1.5 + k, 16, 235), (3.0, 90, 166), (3.0, 90, 166))]
        if k == 0:
            alpha = np.ones((H, W))
        else:
            alpha = np.zeros((H, W))
            for _ in range(2):
                cy, cx = rng.uniform(m, H - m), rng.uniform(m, W - m)
                rad = rng.uniform(0.15, 0.3) * min(h, w)
                alpha = np.maximum(alpha, ((yy - cy) ** 2 + (xx - cx) ** 2 <= rad * rad).astype(float))
        layers.append((d, tex, alpha))
    pm = assign_poc(geom)
    planes = {}
    ry, rx = np.mgrid[0:h, 0:w].astype(float)
    for p in range(len(pm)):
        x, y = pm.coord(p)
        out = [np.zeros((h, w)) for _ in range(3)]
        for d, tex, alpha in layers:
            coords = [ry + m + d * y, rx + m + d * x]
            a = ndimage.map_coordinates(alpha, coords, order=1, mode="nearest")
            for c in range(3):
                v = ndimage.map_coordinates(tex[c], coords, order=1, mode="nearest")
                out[c] = a * v + (1 - a) * out[c]
        planes[p] = tuple(out)
    return _finish(geom, planes, bit_depth, chroma_format)


def noise_field(geom: GridGeometry, size=(64, 64), seed: int = 2, bit_depth: int = 8,
                chroma_format: str = "420", amplitude: float = 40.0) -> ViewGrid:
    """Independent noise per view around mid-gray: no inter-view correlation to exploit."""
    rng = np.random.default_rng(seed)
    h, w = size
    pm = assign_poc(geom)
    planes = {
        p: tuple(128 + amplitude * rng.uniform(-1, 1, (h, w)) for _ in range(3)) for p in range(len(pm))
    }
    return _finish(geom, planes, bit_depth, chroma_format)


def constant_grid(geom: GridGeometry, size=(32, 32), value: int = 128, bit_depth: int = 8,
                  chroma_format: str = "420") -> ViewGrid:
    pm = assign_poc(geom)
    planes = {p: tuple(np.full((size[0], size[1]), float(value)) for _ in range(3)) for p in range(len(pm))}
    return _finish(geom, planes, bit_depth, chroma_format)


FIXTURES = {
    "texture": translating_texture,
    "pinhole": pinhole_scene,
    "noise": noise_field,
}
