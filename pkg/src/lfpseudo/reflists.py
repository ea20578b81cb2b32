"""Forward/backward partition and distance-ordered reference lists."""

from __future__ import annotations

from dataclasses import dataclass

from .scheduler import ScheduleError
from .view_grid import PocMap, distance


@dataclass(frozen=True)
class DirectionPartition:
    forward: frozenset
    backward: frozenset


@dataclass(frozen=True)
class ReferenceLists:
    list0: tuple
    list1: tuple
    n_per_list: int
    # how many leading entries of each list are native to its direction
    native0: int = 0
    native1: int = 0


def _raster_key(poc: int, pocmap: PocMap) -> tuple[int, int]:
    return pocmap.cell(poc)


def partition_directions(cur: int, available, pocmap: PocMap, mode: str = "raster") -> DirectionPartition:
    """Split ``available`` into frames above (forward) and below (backward) ``cur``.

    ``mode="raster"`` compares raster positions of the grid cells, so frames
    earlier in the same row count as forward. ``mode="row"`` only looks at the
    grid row: strictly higher rows are forward, everything else backward.
    """
    r0, c0 = _raster_key(cur, pocmap)
    fwd, bwd = set(), set()
    for p in available:
        r, c = _raster_key(p, pocmap)
        if mode == "raster":
            is_fwd = (r, c) < (r0, c0)
        elif mode == "row":
            is_fwd = r < r0
        else:
            raise ValueError(f"unknown partition mode {mode!r}")
        (fwd if is_fwd else bwd).add(p)
    return DirectionPartition(frozenset(fwd), frozenset(bwd))


def partition_by_poc(cur: int, available) -> DirectionPartition:
    return DirectionPartition(
        frozenset(p for p in available if p < cur), frozenset(p for p in available if p > cur)
    )


def _fill(native: list, other: list, n: int) -> tuple[tuple, int]:
    out = native[:n]
    k = len(out)
    for p in other:
        if len(out) >= n:
            break
        if p not in out:
            out.append(p)
    return tuple(out), k


def order_lists(forward, backward, key, n_per_list: int) -> ReferenceLists:
    if n_per_list < 1:
        raise ValueError("n_per_list must be >= 1")
    if not forward and not backward:
        raise ScheduleError("no reference frames available for an inter frame")
    f = sorted(forward, key=key)
    b = sorted(backward, key=key)
    l0, k0 = _fill(f, b, n_per_list)
    l1, k1 = _fill(b, f, n_per_list)
    return ReferenceLists(l0, l1, n_per_list, k0, k1)


def build_lists(cur: int, partition: DirectionPartition, n_per_list: int, pocmap: PocMap) -> ReferenceLists:
    """list0 from forward frames, list1 from backward, nearest first.

    Ties on distance go to the smaller POC difference, then the smaller POC.
    A direction with fewer than ``n_per_list`` frames borrows the nearest
    unused frames of the other direction after its own entries.
    """
    c = pocmap.coord(cur)

    def key(p):
        return (distance(c, pocmap.coord(p)), abs(p - cur), p)

    return order_lists(partition.forward, partition.backward, key, n_per_list)


def build_lists_poc(cur: int, available, n_per_list: int) -> ReferenceLists:
    """Conventional 1-D lists: direction and order both by POC difference."""
    part = partition_by_poc(cur, available)
    return order_lists(part.forward, part.backward, lambda p: (abs(p - cur), p), n_per_list)


def lists_for_schedule(schedule, pocmap: PocMap | None, n_per_list: int, mode: str = "distance",
                       partition_mode: str = "raster") -> dict:
    """Reference lists for every inter frame of a schedule.

    ``mode="distance"`` uses view-coordinate distance (needs ``pocmap``);
    ``mode="poc"`` uses POC differences only.
    """
    out = {}
    for p in schedule.order[1:]:
        avail = schedule.rps[p]
        if mode == "distance":
            out[p] = build_lists(p, partition_directions(p, avail, pocmap, partition_mode), n_per_list, pocmap)
        elif mode == "poc":
            out[p] = build_lists_poc(p, avail, n_per_list)
        else:
            raise ValueError(f"unknown list mode {mode!r}")
    return out
