import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from lfpseudo.scheduler import (
    ConfigError,
    FrameClass,
    axis_order_2d,
    build_schedule,
    build_schedule_1d,
    check_chain,
    gop_order_1d,
    quadrant_of,
    quadrant_partition,
    simulate_dpb,
)
from lfpseudo.view_grid import GridGeometry, corner_geometry

GOP16 = [0, 16, 8, 4, 2, 1, 3, 6, 5, 7, 12, 10, 9, 11, 14, 13, 15]


@pytest.fixture(scope="module")
def sched(geom13):
    return build_schedule(geom13)


@pytest.mark.parametrize("n,expect", [(7, [0, 6, 3, 5, 4, 2, 1]), (1, [0]), (2, [0, 1]), (5, [0, 4, 2, 3, 1])])
def test_axis_order(n, expect):
    assert axis_order_2d(n) == expect


@pytest.mark.parametrize("g,expect", [(16, GOP16), (2, [0, 2, 1]), (8, [0, 8, 4, 2, 1, 3, 6, 5, 7])])
def test_gop_order(g, expect):
    assert gop_order_1d(g) == expect


@pytest.mark.parametrize("g", [3, 6, 12, 0])
def test_gop_must_be_power_of_two(g):
    with pytest.raises(ConfigError):
        gop_order_1d(g)


def _well_formed(order):
    # every emitted midpoint has both bracketing values already emitted
    seen = set(order[:2])
    for v in order[2:]:
        lo = max(s for s in seen if s < v)
        hi = min(s for s in seen if s > v)
        assert lo < v < hi
        seen.add(v)


@given(st.integers(1, 40))
def test_axis_order_is_hierarchical_permutation(n):
    o = axis_order_2d(n)
    assert sorted(o) == list(range(n))
    if n > 2:
        _well_formed(o)


@given(st.integers(1, 7))
def test_gop_order_is_hierarchical_permutation(k):
    o = gop_order_1d(2**k)
    assert sorted(o) == list(range(2**k + 1))
    _well_formed(o)


def test_quadrant_examples(geom13):
    assert quadrant_of((0, 0)) is None
    assert quadrant_of((3, 2)) == "TL"
    assert quadrant_of((-1, 4)) == "TR"
    sizes = {}
    for q in quadrant_partition(geom13).values():
        sizes[q] = sizes.get(q, 0) + 1
    assert sizes == {None: 1, "TL": 47, "TR": 41, "BR": 41, "BL": 35}


def test_order_is_permutation_center_first(sched):
    assert sched.order[0] == 0
    assert sorted(sched.order) == list(range(165))


def test_quadrants_coded_in_clockwise_order(sched):
    tags = [sched.quadrant[p] for p in sched.order[1:]]
    firsts = [tags.index(q) for q in ("TL", "TR", "BR", "BL")]
    lasts = [len(tags) - 1 - tags[::-1].index(q) for q in ("TL", "TR", "BR", "BL")]
    assert all(lasts[k] < firsts[k + 1] for k in range(3))


def test_tl_axis_lines_before_far_row(sched, pocmap13):
    pos = sched.position()
    tl = [p for p in sched.order if sched.quadrant[p] == "TL"]
    axis = [p for p in tl if pocmap13.coord(p).x == 0 or pocmap13.coord(p).y == 0]
    far = [p for p in tl if pocmap13.coord(p).y == 6 and pocmap13.coord(p).x != 0]
    assert max(pos[p] for p in axis) < min(pos[p] for p in far)


def test_3x3_tl_before_tr():
    s = build_schedule(GridGeometry(3, 3))
    q = [s.quadrant[p] for p in s.order]
    assert q.index("TR") > max(i for i, t in enumerate(q) if t == "TL")


def test_frame14_available_set(sched):
    assert sched.rps[14] == {13, 6, 3, 15, 38, 41, 44, 77, 80, 0}
    assert sched.rps[0] == frozenset()


def test_frame13_frame14_references(sched):
    assert {12, 15} <= sched.refs[13]
    assert 13 in sched.refs[14]
    assert sched.classes[0] == FrameClass.ANCHOR


def test_chain_constraint_exhaustive(sched):
    order = sched.order
    for a, b in zip(order, order[1:]):
        assert sched.rps[b] <= sched.rps[a] | {a}
    check_chain(order, sched.rps)


def test_rps_members_precede(sched):
    pos = sched.position()
    for p in sched.order:
        assert all(pos[r] < pos[p] for r in sched.rps[p])
        assert sched.refs[p] <= sched.rps[p]


def test_nonreference_in_no_rps(sched):
    nonref = {p for p, c in sched.classes.items() if c == FrameClass.NON_REFERENCE}
    for p in sched.order:
        assert not (sched.rps[p] & nonref)


def test_immediate_frames_used_only_by_next(sched):
    pos = sched.position()
    for p, c in sched.classes.items():
        if c == FrameClass.IMMEDIATE:
            users = [q for q in sched.order if p in sched.refs[q]]
            assert users and all(pos[u] == pos[p] + 1 for u in users)


def _oracle_occupancy(order, refs):
    """Buffered frames at each step: decoded earlier and needed now or later."""
    out = []
    for k in range(len(order)):
        needed = set().union(*(refs[q] for q in order[k:]))
        out.append(len(needed & set(order[:k])))
    return out


def test_dpb_peaks(sched, geom13):
    tl = simulate_dpb(sched)
    assert tl.peak == 12
    assert list(tl.occupancy) == _oracle_occupancy(sched.order, sched.refs)
    assert simulate_dpb(build_schedule(geom13, ("TL",))).peak == 10


def test_trivial_grid():
    s = build_schedule(GridGeometry(1, 1))
    assert s.order == (0,)
    assert simulate_dpb(s).peak == 0


def test_1d_gop16_peak():
    s = build_schedule_1d(17)
    assert list(s.order) == GOP16
    assert simulate_dpb(s).peak == 5


def test_schedule_json_deterministic(geom13):
    a = json.dumps(build_schedule(geom13).to_json(), sort_keys=True)
    b = json.dumps(build_schedule(geom13).to_json(), sort_keys=True)
    assert a == b


@given(st.sampled_from([1, 3, 5, 7, 9, 11, 13, 15]), st.sampled_from([1, 3, 5, 7, 9, 11, 13, 15]), st.booleans())
def test_schedule_valid_on_any_grid(rows, cols, corners):
    g = corner_geometry(rows, cols) if corners and rows > 1 and cols > 1 else GridGeometry(rows, cols)
    s = build_schedule(g)
    assert sorted(s.order) == list(range(g.n_views))
    check_chain(s.order, s.rps)
    tl = simulate_dpb(s)
    assert list(tl.occupancy) == _oracle_occupancy(s.order, s.refs)


@given(st.integers(1, 80), st.sampled_from([2, 4, 8, 16]))
def test_1d_schedule_valid(n, gop):
    s = build_schedule_1d(n, gop)
    assert sorted(s.order) == list(range(n))
    check_chain(s.order, s.rps)
    simulate_dpb(s)
