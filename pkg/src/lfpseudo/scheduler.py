"""2-D hierarchical coding order, frame classes, reference picture sets and DPB replay.

Each quadrant is indexed outward from the center: row index ``i`` and column
index ``j`` run from 0 (the axis through the center view) to the quadrant edge,
and map to view coordinates as ``x = sx * j``, ``y = sy * i`` with the sign pair
of the quadrant. One axis-order generator therefore serves all four quadrants,
and the right-to-left / bottom-to-top scans of the right and bottom quadrants
fall out of the sign flip.

The axis lines through the center are shared between quadrants; each is coded
by exactly one owner (TL owns both of its axes, TR owns the ``y = 0, x < 0``
row, BR owns the ``x = 0, y < 0`` column), so every quadrant finds its boundary
lines already decoded when its turn comes in the clockwise TL, TR, BR, BL
sequence.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum

from .view_grid import GridGeometry, ViewCoord, assign_poc

QUADRANTS = ("TL", "TR", "BR", "BL")

# (sx, sy, owns_row_axis, owns_col_axis)
_QUADRANT_LAYOUT = {
    "TL": (1, 1, True, True),
    "TR": (-1, 1, True, False),
    "BR": (-1, -1, False, True),
    "BL": (1, -1, False, False),
}


class ScheduleError(RuntimeError):
    """A scheduling rule produced an inconsistent structure."""


class SimulationError(RuntimeError):
    """DPB replay hit a missing or prematurely evicted reference."""


class ConfigError(ValueError):
    pass


class FrameClass(str, Enum):
    ANCHOR = "anchor"  # red
    ROW_REFERENCE = "row_reference"  # green
    IMMEDIATE = "immediate"  # yellow
    NON_REFERENCE = "non_reference"  # black

    @property
    def rank(self) -> int:
        return _CLASS_RANK[self]


_CLASS_RANK = {
    FrameClass.ANCHOR: 1,
    FrameClass.ROW_REFERENCE: 2,
    FrameClass.IMMEDIATE: 3,
    FrameClass.NON_REFERENCE: 4,
}


# --- axis orders ------------------------------------------------------------


def _hierarchy(length: int, ceil_mid: bool, upper_first: bool, depth: dict | None = None):
    """Midpoint-recursive order over ``0..length-1`` plus each position's bracket.

    If ``depth`` is given it is filled with the recursion level of every
    position (endpoints 0, first midpoint 1, ...).
    """
    if length < 1:
        raise ConfigError("axis length must be >= 1")
    depth = {} if depth is None else depth
    order = [0]
    brackets: dict[int, tuple] = {0: ()}
    depth[0] = 0
    if length == 1:
        return order, brackets
    last = length - 1
    order.append(last)
    brackets[last] = (0,)
    depth[last] = 0

    def expand(a: int, b: int, level: int):
        if b - a <= 1:
            return
        m = (a + b + 1) // 2 if ceil_mid else (a + b) // 2
        order.append(m)
        brackets[m] = (a, b)
        depth[m] = level
        halves = ((m, b), (a, m)) if upper_first else ((a, m), (m, b))
        for lo, hi in halves:
            expand(lo, hi, level + 1)

    expand(0, last, 1)
    return order, brackets


def axis_order_2d(length: int) -> list[int]:
    """Ceil-midpoint, upper-half-first order; ``axis_order_2d(7) == [0, 6, 3, 5, 4, 2, 1]``."""
    return _hierarchy(length, ceil_mid=True, upper_first=True)[0]


def gop_order_1d(gop: int) -> list[int]:
    """Floor-midpoint, lower-half-first order over ``0..gop`` (``gop + 1`` entries)."""
    if gop < 1 or gop & (gop - 1):
        raise ConfigError(f"GOP size must be a power of two, got {gop}")
    return _hierarchy(gop + 1, ceil_mid=False, upper_first=False)[0]


def gop_brackets_1d(start: int, end: int) -> tuple[list[int], dict[int, tuple], dict[int, int]]:
    """Hierarchical order, brackets and recursion depth for frames ``start..end``."""
    depth: dict = {}
    order, br = _hierarchy(end - start + 1, ceil_mid=False, upper_first=False, depth=depth)
    return (
        [start + k for k in order],
        {start + k: tuple(start + a for a in v) for k, v in br.items()},
        {start + k: d for k, d in depth.items()},
    )


def _coarse(order: list[int]) -> list[int]:
    return sorted(order[:3])


def _span(k: int, coarse: list[int]) -> tuple[int, ...]:
    if k in coarse:
        return (k,)
    lo = max(c for c in coarse if c < k)
    hi = min(c for c in coarse if c > k)
    return lo, hi


# --- quadrants --------------------------------------------------------------


def quadrant_of(coord: tuple[int, int]) -> str | None:
    x, y = coord
    if x == 0 and y == 0:
        return None
    if y >= 0:
        return "TL" if x >= 0 else "TR"
    return "BR" if x <= 0 else "BL"


def quadrant_partition(geom: GridGeometry) -> dict[int, str | None]:
    pm = assign_poc(geom)
    return {p: quadrant_of(pm.coord(p)) for p in range(len(pm))}


@dataclass(frozen=True)
class _Slot:
    poc: int
    quadrant: str
    i: int
    j: int
    line: tuple  # (quadrant, "row" | "col", index)


def _quadrant_slots(geom: GridGeometry, q: str) -> list[_Slot]:
    sx, sy, own_row, own_col = _QUADRANT_LAYOUT[q]
    pm = assign_poc(geom)
    lr = geom.center[0] + 1
    lc = geom.center[1] + 1
    rows = axis_order_2d(lr)
    cols = axis_order_2d(lc)

    def slot(i, j, line):
        cell = geom.coord_to_cell((sx * j, sy * i))
        if not geom.has_cell(cell):
            return None
        return _Slot(pm.poc(cell), q, i, j, line)

    out = []
    if own_row:
        out += [slot(0, j, (q, "row", 0)) for j in cols if j != 0]
    if own_col:
        out += [slot(i, 0, (q, "col", 0)) for i in rows if i != 0]
    for i in rows:
        if i == 0:
            continue
        out += [slot(i, j, (q, "row", i)) for j in cols if j != 0]
    return [s for s in out if s is not None]


# --- schedule ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CodingSchedule:
    order: tuple
    refs: dict  # poc -> frozenset of POCs the frame itself predicts from
    rps: dict  # poc -> frozenset of POCs held in the buffer when it is coded
    classes: dict
    quadrant: dict
    coords: dict
    geometry: GridGeometry | None = None
    meta: dict = field(default_factory=dict)

    @property
    def lists_hint(self) -> dict:
        return self.rps

    def position(self) -> dict:
        return {p: k for k, p in enumerate(self.order)}

    def qp_offset(self, poc: int) -> int:
        if poc == self.order[0]:
            return 0
        return self.classes[poc].rank

    def to_json(self, lists: dict | None = None) -> dict:
        frames = []
        for p in self.order:
            entry = {
                "poc": p,
                "class": self.classes[p].value,
                "quadrant": self.quadrant.get(p),
                "coord": list(self.coords[p]) if p in self.coords else None,
                "refs": sorted(self.refs[p]),
                "rps": sorted(self.rps[p]),
            }
            if lists is not None and p in lists:
                entry["list0"] = list(lists[p].list0)
                entry["list1"] = list(lists[p].list1)
            frames.append(entry)
        return {
            "geometry": self.geometry.to_json() if self.geometry else None,
            "meta": self.meta,
            "order": list(self.order),
            "frames": frames,
        }

    def digest(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def retained_sets(order, refs) -> dict:
    """RPS by backward scan: decoded frames still referenced by this or a later frame."""
    pos = {p: k for k, p in enumerate(order)}
    for p in order:
        for r in refs[p]:
            if r not in pos or pos[r] >= pos[p]:
                raise ScheduleError(f"frame {p} references {r}, which is not decoded before it")
    needed: set = set()
    rps = {}
    for k in range(len(order) - 1, -1, -1):
        p = order[k]
        needed |= refs[p]
        rps[p] = frozenset(r for r in needed if pos[r] < k)
    return rps


def check_chain(order, rps) -> None:
    for cur, nxt in zip(order, order[1:]):
        extra = rps[nxt] - rps[cur] - {cur}
        if extra:
            raise ScheduleError(f"RPS of {nxt} draws {sorted(extra)} from outside RPS({cur}) + {{{cur}}}")


def _direct_refs(slots: list[_Slot], geom: GridGeometry) -> dict[int, frozenset]:
    pm = assign_poc(geom)
    lr, lc = geom.center[0] + 1, geom.center[1] + 1
    row_order, row_br = _hierarchy(lr, True, True)
    col_order, col_br = _hierarchy(lc, True, True)
    crow, ccol = _coarse(row_order), _coarse(col_order)
    line_of = {}
    for s in slots:
        line_of[s.poc] = s.line

    def poc_at(q, i, j):
        sx, sy, _, _ = _QUADRANT_LAYOUT[q]
        cell = geom.coord_to_cell((sx * j, sy * i))
        return pm.poc(cell) if geom.has_cell(cell) else None

    refs = {}
    for s in slots:
        q, i, j = s.quadrant, s.i, s.j
        is_anchor = i in crow and j in ccol
        cand = set()
        if is_anchor:
            cand |= {(a, j) for a in row_br[i]}
            cand |= {(i, b) for b in col_br[j]}
        else:
            if s.line[1] == "row":
                inline = [(i, b) for b in col_br[j]]
            else:
                inline = [(a, j) for a in row_br[i]]
            for a, b in inline:
                p = poc_at(q, a, b)
                if p is None:
                    continue
                if line_of.get(p) == s.line or (a in crow and b in ccol):
                    cand.add((a, b))
            cand |= {(a, b) for a in _span(i, crow) for b in _span(j, ccol)}
        out = set()
        for a, b in cand:
            if (a, b) == (i, j):
                continue
            p = poc_at(q, a, b)
            if p is not None:
                out.add(p)
        refs[s.poc] = frozenset(out) if out else frozenset({0})
    return refs


def _classify(slots, refs, geom) -> dict:
    lr, lc = geom.center[0] + 1, geom.center[1] + 1
    crow, ccol = _coarse(axis_order_2d(lr)), _coarse(axis_order_2d(lc))
    used: dict[int, int] = {}
    for p, rs in refs.items():
        for r in rs:
            used[r] = used.get(r, 0) + 1
    classes = {0: FrameClass.ANCHOR}
    for s in slots:
        if s.i in crow and s.j in ccol:
            classes[s.poc] = FrameClass.ANCHOR
        elif s.poc not in used:
            classes[s.poc] = FrameClass.NON_REFERENCE
        elif s.i not in crow and s.j in ccol and s.line[1] == "row":
            classes[s.poc] = FrameClass.ROW_REFERENCE
        else:
            classes[s.poc] = FrameClass.IMMEDIATE
    return classes


def build_schedule(
    geom: GridGeometry,
    quadrants=QUADRANTS,
    class_overrides: dict | None = None,
) -> CodingSchedule:
    """Full 2-D hierarchical schedule, or a replay restricted to some quadrants.

    References that point outside the selected quadrants are dropped, which is
    what a single-quadrant replay needs.
    """
    for q in quadrants:
        if q not in _QUADRANT_LAYOUT:
            raise ConfigError(f"unknown quadrant {q!r}")
    pm = assign_poc(geom)
    all_slots = [s for q in QUADRANTS for s in _quadrant_slots(geom, q)]
    if sorted(s.poc for s in all_slots) != list(range(1, len(pm))):
        raise ScheduleError("quadrant passes do not cover every non-center view exactly once")
    refs_all = _direct_refs(all_slots, geom)
    slots = [s for s in all_slots if s.quadrant in quadrants]
    order = (0,) + tuple(s.poc for s in slots)
    members = set(order)
    refs = {0: frozenset()}
    for s in slots:
        kept = frozenset(r for r in refs_all[s.poc] if r in members)
        refs[s.poc] = kept if kept else frozenset({0})
    rps = retained_sets(order, refs)
    check_chain(order, rps)
    classes = _classify(slots, refs, geom)
    if class_overrides:
        referenced = set().union(*rps.values()) if rps else set()
        for p, c in class_overrides.items():
            c = FrameClass(c)
            if c is FrameClass.NON_REFERENCE and p in referenced:
                raise ScheduleError(f"frame {p} is referenced and cannot be NonReference")
            classes[int(p)] = c
    quadrant = {0: None}
    quadrant.update({s.poc: s.quadrant for s in slots})
    coords = {p: pm.coord(p) for p in order}
    return CodingSchedule(
        order=order,
        refs=refs,
        rps=rps,
        classes=classes,
        quadrant=quadrant,
        coords=coords,
        geometry=geom,
        meta={"structure": "2d", "quadrants": list(quadrants)},
    )


def coding_order(geom: GridGeometry) -> tuple:
    return build_schedule(geom).order


def classify_frames(geom: GridGeometry) -> dict:
    return build_schedule(geom).classes


def build_rps(order, refs) -> dict:
    rps = retained_sets(order, refs)
    check_chain(order, rps)
    return rps


# --- DPB --------------------------------------------------------------------


@dataclass(frozen=True)
class DpbTimeline:
    occupancy: tuple  # per coded frame, buffer size when it is coded
    members: tuple  # per coded frame, frozenset of buffered POCs
    order: tuple

    @property
    def peak(self) -> int:
        return max(self.occupancy, default=0)

    @property
    def peak_frame(self):
        if not self.occupancy:
            return None
        return self.order[self.occupancy.index(self.peak)]


def simulate_dpb(schedule: CodingSchedule) -> DpbTimeline:
    """Replay the coding order, keeping exactly what the next RPS asks for."""
    order = schedule.order
    buffer: set = set()
    occ, mem = [], []
    for k, cur in enumerate(order):
        missing = schedule.refs[cur] - buffer
        if missing:
            raise SimulationError(f"frame {cur} needs {sorted(missing)} which are not buffered")
        if set(schedule.rps[cur]) != buffer:
            raise SimulationError(f"buffer before {cur} does not match its RPS")
        occ.append(len(buffer))
        mem.append(frozenset(buffer))
        after = buffer | {cur}
        keep = schedule.rps[order[k + 1]] if k + 1 < len(order) else frozenset()
        evicted = after - keep
        for later in order[k + 1 :]:
            hit = evicted & schedule.refs[later]
            if hit:
                raise SimulationError(f"evicted {sorted(hit)} after {cur} but {later} still needs them")
        buffer = set(keep)
    return DpbTimeline(tuple(occ), tuple(mem), tuple(order))


# --- 1-D hierarchical GOP schedule (used by the anchor) ---------------------


def build_schedule_1d(n_frames: int, gop: int = 16) -> CodingSchedule:
    """Hierarchical-B schedule over a pseudo sequence of ``n_frames`` frames.

    Frame 0 is intra; each GOP ``[k*gop, (k+1)*gop]`` is coded by midpoint
    recursion. A short final GOP uses the same recursion over its span.
    """
    gop_order_1d(gop)  # validates gop
    if n_frames < 1:
        raise ConfigError("need at least one frame")
    order = [0]
    refs = {0: frozenset()}
    layer = {0: 0}
    start = 0
    while start < n_frames - 1:
        end = min(start + gop, n_frames - 1)
        seq, br, depth = gop_brackets_1d(start, end)
        for f in seq[1:]:
            order.append(f)
            refs[f] = frozenset(br[f])
            layer[f] = depth[f]
        start = end
    rps = retained_sets(order, refs)
    check_chain(order, rps)
    used = set().union(*refs.values())
    classes = {}
    for f in order:
        if layer[f] == 0:
            classes[f] = FrameClass.ANCHOR
        elif f not in used:
            classes[f] = FrameClass.NON_REFERENCE
        elif layer[f] == 1:
            classes[f] = FrameClass.ROW_REFERENCE
        else:
            classes[f] = FrameClass.IMMEDIATE
    return CodingSchedule(
        order=tuple(order),
        refs=refs,
        rps=rps,
        classes=classes,
        quadrant={f: None for f in order},
        coords={f: ViewCoord(f, 0) for f in order},
        geometry=None,
        meta={"structure": "1d", "gop": gop, "n_frames": n_frames},
    )


def hm_table(schedule: CodingSchedule, lists: dict, qp: int = 0) -> str:
    """Plain-text per-frame table: coding index, POC, QP offset, class, list hints."""
    lines = ["# idx  poc  qp_offset  class           quadrant  list0 | list1"]
    for k, p in enumerate(schedule.order):
        l0 = " ".join(str(r) for r in lists[p].list0) if p in lists else "-"
        l1 = " ".join(str(r) for r in lists[p].list1) if p in lists else "-"
        lines.append(
            f"{k:5d} {p:4d} {schedule.qp_offset(p):10d}  {schedule.classes[p].value:15s} "
            f"{schedule.quadrant.get(p) or '-':8s}  {l0} | {l1}"
        )
    return "\n".join(lines) + "\n"
