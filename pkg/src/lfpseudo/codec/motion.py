"""Motion vector prediction and integer-pel motion search."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..mvscale import MotionVector, ScalingAnchors, scale_poc_flagged, scale_spatial_flagged, scale_temporal_flagged
from .entropy import se_bits, ue_bits


class MotionEntry(NamedTuple):
    list_id: int
    ref: int  # frame id of the reference
    mv: MotionVector  # quarter-pel


class MvCandidate(NamedTuple):
    mv: MotionVector
    copied: bool  # at least one component copied because an offset was zero


class SearchResult(NamedTuple):
    list_id: int
    ref_idx: int
    mv: tuple  # integer pel (dx, dy)
    mvp_idx: int
    cost: float


def to_int_pel(v: int) -> int:
    """Quarter-pel -> integer pel, rounding half away from zero."""
    return (abs(v) + 2) // 4 * (1 if v >= 0 else -1)


def _pick(entries, list_id):
    for e in entries:
        if e.list_id == list_id:
            return e
    return entries[0]


class MvScaler:
    """Scales a donor MV to the current target reference for one plan."""

    def __init__(self, coords: dict, coord_scaling: bool):
        self.coords = coords
        self.coord_scaling = coord_scaling

    def spatial(self, mv, cur, cur_ref, donor_ref) -> MvCandidate:
        if donor_ref == cur_ref:
            return MvCandidate(mv, False)
        if self.coord_scaling:
            c = self.coords
            out, flags = scale_spatial_flagged(mv, ScalingAnchors(c[cur], c[cur_ref], c[donor_ref]))
        else:
            out, flags = scale_poc_flagged(mv, cur, cur_ref, donor_ref)
        return MvCandidate(out, any(flags))

    def temporal(self, mv, cur, cur_ref, donor_ref, colocated) -> MvCandidate:
        if self.coord_scaling:
            c = self.coords
            out, flags = scale_temporal_flagged(
                mv, ScalingAnchors(c[cur], c[cur_ref], c[donor_ref], c[colocated])
            )
        else:
            out, flags = scale_poc_flagged(mv, cur, cur_ref, donor_ref, colocated)
        return MvCandidate(out, any(flags))


def predict_mv(cur: int, target_ref: int, list_id: int, bx: int, by: int, field, col_field, col_id,
               scaler: MvScaler, max_candidates: int = 2) -> list[MvCandidate]:
    """Left, above, then colocated candidates, scaled to ``target_ref``.

    ``field`` and ``col_field`` are 2-D lists of per-block motion (a tuple of
    :class:`MotionEntry`, or ``None`` for intra blocks). Candidates whose
    scaling was skipped on some axis are moved behind the others.
    """
    cands: list[MvCandidate] = []
    for nx, ny in ((bx - 1, by), (bx, by - 1)):
        if nx < 0 or ny < 0:
            continue
        ent = field[ny][nx]
        if ent:
            e = _pick(ent, list_id)
            cands.append(scaler.spatial(e.mv, cur, target_ref, e.ref))
    if col_field is not None:
        ent = col_field[by][bx]
        if ent:
            e = _pick(ent, list_id)
            cands.append(scaler.temporal(e.mv, cur, target_ref, e.ref, col_id))
    uniq: list[MvCandidate] = []
    for c in cands:
        if all(c.mv != u.mv for u in uniq):
            uniq.append(c)
    uniq.sort(key=lambda c: c.copied)
    uniq = uniq[:max_candidates]
    if len(uniq) < max_candidates and all(u.mv != (0, 0) for u in uniq):
        uniq.append(MvCandidate(MotionVector(0, 0), False))
    return uniq


def fetch(plane: np.ndarray, y0: int, x0: int, h: int, w: int, dy: int = 0, dx: int = 0) -> np.ndarray:
    """Block at ``(y0 + dy, x0 + dx)`` with edge replication outside the plane."""
    H, W = plane.shape
    ys = np.clip(np.arange(y0 + dy, y0 + dy + h), 0, H - 1)
    xs = np.clip(np.arange(x0 + dx, x0 + dx + w), 0, W - 1)
    return plane[np.ix_(ys, xs)]


_SE_LIMIT = 1 << 12
_SE_TABLE = np.array([se_bits(v) for v in range(-_SE_LIMIT, _SE_LIMIT + 1)], dtype=np.int64)


def _se_bits_vec(v: np.ndarray) -> np.ndarray:
    if v.size and (v.min() < -_SE_LIMIT or v.max() > _SE_LIMIT):
        k = np.where(v > 0, 2 * v - 1, -2 * v) + 1
        return 2 * np.floor(np.log2(k)).astype(np.int64) + 1
    return _SE_TABLE[v + _SE_LIMIT]


def mvd_bits(dx: np.ndarray, dy: np.ndarray) -> np.ndarray:
    return _se_bits_vec(dx) + _se_bits_vec(dy)


def motion_search(block: np.ndarray, ref: np.ndarray, y0: int, x0: int, mvps: list, search_range: int,
                  lam_motion: float, ref_idx_bits: int = 0, list_id: int = 0, ref_idx: int = 0) -> SearchResult:
    """Full integer-pel search in a square window around the first predictor.

    Cost is SAD plus ``lam_motion`` times the bits of the cheapest predictor's
    MV difference, the predictor index and the reference index. The first
    minimum in raster order of the window wins.
    """
    bs_h, bs_w = block.shape
    centers = [(to_int_pel(m.mv.mvx), to_int_pel(m.mv.mvy)) for m in mvps]
    cx, cy = centers[0]
    r = search_range
    region = fetch(ref, y0 + cy - r, x0 + cx - r, bs_h + 2 * r, bs_w + 2 * r)
    win = sliding_window_view(region.astype(np.int16), (bs_h, bs_w))
    sad = np.abs(win - block.astype(np.int16)).sum(axis=(2, 3), dtype=np.int64)
    offs = np.arange(-r, r + 1)
    dys, dxs = np.meshgrid(offs + cy, offs + cx, indexing="ij")
    idx_bits = 1 if len(centers) > 1 else 0
    bits = None
    which = np.zeros(dys.shape, dtype=np.int64)
    for k, (px, py) in enumerate(centers):
        b = mvd_bits(dxs - px, dys - py)
        if bits is None:
            bits = b
        else:
            better = b < bits
            which = np.where(better, k, which)
            bits = np.minimum(bits, b)
    cost = sad + lam_motion * (bits + idx_bits + ref_idx_bits)
    flat = int(np.argmin(cost))
    iy, ix = divmod(flat, cost.shape[1])
    return SearchResult(list_id, ref_idx, (int(dxs[iy, ix]), int(dys[iy, ix])), int(which[iy, ix]),
                        float(cost[iy, ix]))


def best_mvp(mv: tuple, mvps: list) -> tuple[int, int]:
    """Predictor index giving the fewest MVD bits, and that bit count."""
    best = None
    for k, m in enumerate(mvps):
        px, py = to_int_pel(m.mv.mvx), to_int_pel(m.mv.mvy)
        b = se_bits(mv[0] - px) + se_bits(mv[1] - py)
        if best is None or b < best[1]:
            best = (k, b)
    return best


__all__ = [
    "MotionEntry", "MvCandidate", "SearchResult", "MvScaler", "predict_mv", "motion_search", "fetch",
    "to_int_pel", "best_mvp", "ue_bits",
]
