"""Coding plans: what the codec needs from a prediction structure.

A plan fixes the coding order (by frame id), the view each frame carries, its
reference lists, QP offset and the coordinates used for MV scaling. The 2-D
plan uses grid POCs as frame ids; the 1-D anchor numbers frames by their
position in the pseudo sequence.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

from ..reflists import ReferenceLists, lists_for_schedule
from ..scheduler import ConfigError, CodingSchedule, build_schedule, build_schedule_1d
from ..view_grid import GridGeometry, assign_poc


@dataclass(frozen=True)
class StructureConfig:
    kind: str = "2d"  # "2d" | "1d"
    list_mode: str = "distance"  # "distance" | "poc"; 2d only
    mv_scaling: str = "coord"  # "coord" | "poc"; 2d only
    partition_mode: str = "raster"  # "raster" | "row"
    gop: int = 16  # 1d only
    scan: str = "serpentine"  # "serpentine" | "raster"; 1d only

    def __post_init__(self):
        if self.kind not in ("2d", "1d"):
            raise ConfigError(f"unknown structure {self.kind!r}")
        if self.list_mode not in ("distance", "poc"):
            raise ConfigError(f"unknown list mode {self.list_mode!r}")
        if self.mv_scaling not in ("coord", "poc"):
            raise ConfigError(f"unknown MV scaling {self.mv_scaling!r}")
        if self.scan not in ("serpentine", "raster"):
            raise ConfigError(f"unknown scan {self.scan!r}")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, d: dict) -> "StructureConfig":
        return cls(**d)


@dataclass(frozen=True, eq=False)
class CodingPlan:
    structure: StructureConfig
    order: tuple
    view_of: dict
    lists: dict
    qp_offset: dict
    coords: dict
    n_per_list: int
    schedule: CodingSchedule = field(repr=False)

    @property
    def intra(self) -> int:
        return self.order[0]

    def to_json(self) -> dict:
        return {
            "structure": self.structure.to_json(),
            "n_per_list": self.n_per_list,
            "frames": [
                {
                    "id": f,
                    "view": self.view_of[f],
                    "qp_offset": self.qp_offset[f],
                    "coord": list(self.coords[f]),
                    "list0": list(self.lists[f].list0) if f in self.lists else [],
                    "list1": list(self.lists[f].list1) if f in self.lists else [],
                }
                for f in self.order
            ],
        }

    def digest(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def scan_order(geom: GridGeometry, scan: str = "serpentine") -> list[int]:
    """Grid POCs row by row; serpentine reverses every other row."""
    pm = assign_poc(geom)
    out = []
    for r in range(geom.rows):
        cols = range(geom.cols)
        if scan == "serpentine" and r % 2:
            cols = reversed(range(geom.cols))
        out += [pm.poc((r, c)) for c in cols if geom.has_cell((r, c))]
    return out


def make_plan(geom: GridGeometry, structure: StructureConfig | None = None, n_per_list: int = 4) -> CodingPlan:
    structure = structure or StructureConfig()
    if n_per_list < 1:
        raise ConfigError("n_per_list must be >= 1")
    if structure.kind == "2d":
        sched = build_schedule(geom)
        pm = assign_poc(geom)
        lists = lists_for_schedule(sched, pm, n_per_list, structure.list_mode, structure.partition_mode)
        view_of = {p: p for p in sched.order}
        coords = {p: tuple(pm.coord(p)) for p in sched.order}
    else:
        seq = scan_order(geom, structure.scan)
        sched = build_schedule_1d(len(seq), structure.gop)
        lists = lists_for_schedule(sched, None, n_per_list, "poc")
        view_of = {k: seq[k] for k in sched.order}
        coords = {k: (k, 0) for k in sched.order}
    qp_offset = {f: sched.qp_offset(f) for f in sched.order}
    return CodingPlan(structure, sched.order, view_of, lists, qp_offset, coords, n_per_list, sched)


def uses_coord_scaling(plan: CodingPlan) -> bool:
    return plan.structure.kind == "2d" and plan.structure.mv_scaling == "coord"


__all__ = ["StructureConfig", "CodingPlan", "ReferenceLists", "make_plan", "scan_order"]
