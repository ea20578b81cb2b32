"""PSNR on planar images and view grids."""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

YUV_WEIGHTS = (6, 1, 1)


class DimensionMismatch(ValueError):
    pass


class Psnr(NamedTuple):
    y: float
    u: float
    v: float
    yuv: float

    @property
    def lossless(self) -> bool:
        return math.isinf(self.y) and math.isinf(self.yuv)

    def status(self) -> str:
        return "lossless" if self.lossless else f"Y {self.y:.4f} dB, YUV {self.yuv:.4f} dB"


def plane_psnr(sse: float, count: int, bit_depth: int) -> float:
    if sse == 0:
        return math.inf
    peak = (1 << bit_depth) - 1
    return 10.0 * math.log10(peak * peak * count / sse)


def combine(py: float, pu: float, pv: float, weights=YUV_WEIGHTS) -> float:
    wy, wu, wv = weights
    return (wy * py + wu * pu + wv * pv) / (wy + wu + wv)


def _planes(img):
    return img.planes if hasattr(img, "planes") else tuple(img)


def _sse(a, b) -> tuple[int, int]:
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"plane shapes differ: {a.shape} vs {b.shape}")
    d = a - b
    return int(np.sum(d * d)), a.size


def psnr(reference, test, bit_depth: int | None = None, weights=YUV_WEIGHTS) -> Psnr:
    """Per-plane PSNR and the weighted YUV composite of two 3-plane images.

    ``reference``/``test`` are objects with ``planes`` (and optionally
    ``bit_depth``) or plain sequences of arrays.
    """
    if bit_depth is None:
        bit_depth = getattr(reference, "bit_depth", 8)
        if getattr(test, "bit_depth", bit_depth) != bit_depth:
            raise DimensionMismatch("bit depths differ")
    ra, ta = _planes(reference), _planes(test)
    if len(ra) != len(ta):
        raise DimensionMismatch("plane counts differ")
    vals = [plane_psnr(*_sse(a, b), bit_depth) for a, b in zip(ra, ta)]
    if len(vals) == 1:
        return Psnr(vals[0], math.inf, math.inf, vals[0])
    return Psnr(vals[0], vals[1], vals[2], combine(*vals, weights=weights))


def psnr_from_sse(sse, counts, bit_depth: int, weights=YUV_WEIGHTS) -> Psnr:
    vals = [plane_psnr(s, n, bit_depth) for s, n in zip(sse, counts)]
    return Psnr(vals[0], vals[1], vals[2], combine(*vals, weights=weights))


def grid_psnr(reference, test, weights=YUV_WEIGHTS) -> Psnr:
    """PSNR pooled over every view of two view grids (MSE over all samples)."""
    if set(reference.views) != set(test.views):
        raise DimensionMismatch("view grids cover different POCs")
    if reference.bit_depth != test.bit_depth:
        raise DimensionMismatch("bit depths differ")
    sse, cnt = [0, 0, 0], [0, 0, 0]
    for p in reference.pocs():
        for k in range(3):
            s, n = _sse(reference[p].planes[k], test[p].planes[k])
            sse[k] += s
            cnt[k] += n
    return psnr_from_sse(sse, cnt, reference.bit_depth, weights)
