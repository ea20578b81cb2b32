"""Motion vector scaling by view-coordinate offsets, in exact integer arithmetic.

Each axis is scaled on its own: the x component by the ratio of horizontal
view offsets, the y component by the ratio of vertical ones. When either
offset is zero the component is copied unscaled.
"""

from __future__ import annotations

from typing import NamedTuple

MV_MIN = -(1 << 15)
MV_MAX = (1 << 15) - 1


class MotionVector(NamedTuple):
    """Quarter-pel motion vector."""

    mvx: int
    mvy: int


class ScalingAnchors(NamedTuple):
    cur: tuple
    cur_ref: tuple
    donor_ref: tuple
    colocated: tuple | None = None


def clamp_mv(v: int) -> int:
    return MV_MIN if v < MV_MIN else MV_MAX if v > MV_MAX else v


def round_ratio(v: int, num: int, den: int) -> int:
    """``v * num / den`` rounded half away from zero."""
    p = v * num
    q = den
    if q < 0:
        p, q = -p, -q
    r = (2 * abs(p) + q) // (2 * q)
    return r if p >= 0 else -r


def _component(v: int, num: int, den: int) -> tuple[int, bool]:
    if num == 0 or den == 0:
        return v, True
    return clamp_mv(round_ratio(v, num, den)), False


def scale_spatial_flagged(mv2: MotionVector, anchors: ScalingAnchors) -> tuple[MotionVector, tuple[bool, bool]]:
    if anchors.colocated is not None:
        raise ValueError("spatial scaling takes no colocated view")
    (x0, y0), (x1, y1), (x2, y2) = anchors.cur, anchors.cur_ref, anchors.donor_ref
    mx, cx = _component(mv2[0], x1 - x0, x2 - x0)
    my, cy = _component(mv2[1], y1 - y0, y2 - y0)
    return MotionVector(mx, my), (cx, cy)


def scale_temporal_flagged(mv2: MotionVector, anchors: ScalingAnchors) -> tuple[MotionVector, tuple[bool, bool]]:
    if anchors.colocated is None:
        raise ValueError("temporal scaling needs the colocated view")
    (x0, y0), (x1, y1), (x2, y2), (x3, y3) = anchors.cur, anchors.cur_ref, anchors.donor_ref, anchors.colocated
    mx, cx = _component(mv2[0], x1 - x0, x2 - x3)
    my, cy = _component(mv2[1], y1 - y0, y2 - y3)
    return MotionVector(mx, my), (cx, cy)


def scale_spatial(mv2: MotionVector, anchors: ScalingAnchors) -> MotionVector:
    """Neighbor MV pointing at ``donor_ref`` rescaled to point at ``cur_ref``."""
    return scale_spatial_flagged(mv2, anchors)[0]


def scale_temporal(mv2: MotionVector, anchors: ScalingAnchors) -> MotionVector:
    """Colocated MV (colocated view -> donor_ref) rescaled to cur -> cur_ref."""
    return scale_temporal_flagged(mv2, anchors)[0]


def scale_poc_flagged(mv2: MotionVector, cur: int, cur_ref: int, donor_ref: int,
                      colocated: int | None = None) -> tuple[MotionVector, tuple[bool, bool]]:
    """POC-distance scaling of both components (the 1-D convention)."""
    tb = cur_ref - cur
    td = donor_ref - (cur if colocated is None else colocated)
    mx, cx = _component(mv2[0], tb, td)
    my, cy = _component(mv2[1], tb, td)
    return MotionVector(mx, my), (cx, cy)
