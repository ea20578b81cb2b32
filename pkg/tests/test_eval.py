import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from lfpseudo.eval.bdrate import EvaluationError, bd_rate
from lfpseudo.eval.harness import RdCurve, RdPoint, anchor_1d, bd_status, compare, read_csv, sweep, to_csv
from lfpseudo.eval.metrics import DimensionMismatch, grid_psnr, psnr
from lfpseudo.scheduler import build_schedule_1d, simulate_dpb
from lfpseudo.synth import translating_texture
from lfpseudo.view_grid import corner_geometry

# --- metrics -----------------------------------------------------------------


def _img(rng, shape=(16, 16), chroma=(8, 8)):
    return (rng.integers(0, 255, shape), rng.integers(0, 255, chroma), rng.integers(0, 255, chroma))


def test_identical_is_lossless():
    a = _img(np.random.default_rng(0))
    q = psnr(a, a)
    assert q.lossless and q.status() == "lossless"


def test_plus_one_offset():
    a = _img(np.random.default_rng(1))
    b = tuple(p + 1 for p in a)
    q = psnr(a, b, 8)
    assert abs(q.y - 10 * math.log10(255**2)) < 1e-6
    assert abs(q.yuv - 10 * math.log10(255**2)) < 1e-6


def test_extremes_give_zero():
    z = tuple(np.zeros((4, 4), int) for _ in range(3))
    f = tuple(np.full((4, 4), 255) for _ in range(3))
    assert psnr(z, f, 8).y == pytest.approx(0.0, abs=1e-12)


def test_yuv_weighting_by_hand():
    ref = (np.zeros((4, 4), int), np.zeros((2, 2), int), np.zeros((2, 2), int))
    test = (np.full((4, 4), 2), np.full((2, 2), 4), np.full((2, 2), 8))  # MSE 4, 16, 64
    q = psnr(ref, test, 8)
    py, pu, pv = (10 * math.log10(255**2 / m) for m in (4, 16, 64))
    assert (q.y, q.u, q.v) == pytest.approx((py, pu, pv), abs=1e-9)
    assert q.yuv == pytest.approx((6 * py + pu + pv) / 8, abs=1e-9)


def test_dimension_mismatch():
    a = _img(np.random.default_rng(2))
    b = _img(np.random.default_rng(2), (16, 17))
    with pytest.raises(DimensionMismatch):
        psnr(a, b)


@given(st.integers(0, 2**31))
def test_psnr_symmetric(seed):
    rng = np.random.default_rng(seed)
    a, b = _img(rng), _img(rng)
    assert psnr(a, b) == psnr(b, a)


def test_grid_psnr_pools_samples():
    g = corner_geometry(3)
    a = translating_texture(g, size=(16, 16))
    b = a.replace(0, tuple(p + 1 if k == 0 else p for k, p in enumerate(a[0].planes)))
    n = len(a)
    assert grid_psnr(a, b).y == pytest.approx(10 * math.log10(255**2 * n), abs=1e-9)


# --- BD-rate -----------------------------------------------------------------

A = ([1000, 1800, 3200, 6000], [30.1, 33.0, 35.8, 38.9])
B = ([900, 1500, 2900, 5200], [30.4, 33.1, 36.2, 39.1])


def _oracle(ra, qa, rb, qb, n=200_001):
    """Least-squares cubic by Vandermonde solve, integrated with the trapezoid rule."""
    def fit(q, r):
        v = np.vander(np.asarray(q, float), 4)
        return np.linalg.lstsq(v, np.log10(r), rcond=None)[0]

    lo, hi = max(min(qa), min(qb)), min(max(qa), max(qb))
    x = np.linspace(lo, hi, n)
    ya = np.vander(x, 4) @ fit(qa, ra)
    yb = np.vander(x, 4) @ fit(qb, rb)
    h = x[1] - x[0]
    trap = lambda y: h * (y.sum() - 0.5 * (y[0] + y[-1]))  # noqa: E731
    return (10 ** ((trap(yb) - trap(ya)) / (hi - lo)) - 1) * 100


def test_bd_identical_is_zero():
    assert bd_rate(*A, *A) == 0.0


def test_bd_halved_rates():
    assert bd_rate(*A, [r / 2 for r in A[0]], A[1]) == pytest.approx(-50.0, abs=1e-9)


@pytest.mark.parametrize("a,b", [(A, B), (B, A), (A, ([1100, 2100, 3000, 7000], [29.5, 33.4, 35.0, 39.5]))])
def test_bd_matches_oracle(a, b):
    assert abs(bd_rate(*a, *b) - _oracle(*a, *b)) < 0.01


@given(st.lists(st.floats(0.2, 3.0), min_size=4, max_size=6, unique=True), st.floats(0.5, 1.5),
       st.floats(-0.3, 0.3))
def test_bd_oracle_property(steps, scale, shift):
    q = np.cumsum(steps) + 25
    r = 1000 * 10 ** (0.08 * (q - 25))
    rb = r * scale
    qb = q + shift
    assert abs(bd_rate(r, q, rb, qb) - _oracle(r, q, rb, qb)) < 0.01


def test_bd_antisymmetry_log_domain():
    ab, ba = bd_rate(*A, *B), bd_rate(*B, *A)
    assert math.log10(1 + ab / 100) == pytest.approx(-math.log10(1 + ba / 100), abs=1e-9)


@given(st.floats(0.96, 1.04), st.floats(-0.2, 0.2))
def test_bd_antisymmetry_near_curves(scale, shift):
    rb = [r * scale for r in A[0]]
    qb = [q + shift for q in A[1]]
    ab, ba = bd_rate(*A, rb, qb), bd_rate(rb, qb, *A)
    # (1 + ab)(1 + ba) = 1 exactly, so ab + ba = -ab*ba: the 0.5% tolerance holds while |ab| stays under ~6.5%
    assert (1 + ab / 100) * (1 + ba / 100) == pytest.approx(1.0, abs=1e-9)
    assume(abs(ab) <= 6.5)
    assert abs(ab + ba) < 0.5


def test_bd_pchip_close_to_cubic():
    assert bd_rate(*A, *B, mode="pchip") == pytest.approx(bd_rate(*A, *B), abs=1.0)


def test_bd_errors():
    with pytest.raises(EvaluationError):
        bd_rate(A[0][:3], A[1][:3], *B)
    with pytest.raises(EvaluationError):
        bd_rate(*A, B[0], [q + 20 for q in B[1]])


# --- harness -----------------------------------------------------------------


@pytest.fixture(scope="module")
def small_grid():
    return translating_texture(corner_geometry(5), size=(32, 32))


def test_singleton_ladder_has_explicit_status(small_grid):
    c = sweep(small_grid, "2d", [25])
    assert len(c) == 1 and not c.bd_ready
    assert bd_status(c, c)["status"] == "unavailable"


def test_sweep_csv_deterministic(small_grid):
    a = to_csv([sweep(small_grid, "2d", [30, 20], image="t")])
    b = to_csv([sweep(small_grid, "2d", [20, 30], image="t", jobs=2)])
    assert a == b
    assert a.splitlines()[0] == "image,structure,qp,bits,psnr_y,psnr_yuv"
    assert [p.qp for p in read_csv(a)[0]] == [20, 30]


def test_anchor_uses_same_views(small_grid):
    digest = small_grid.digest()
    bs, pt = anchor_1d(small_grid)
    assert small_grid.digest() == digest
    assert bs.header["structure"]["kind"] == "1d" and pt.bits == 8 * len(bs.to_bytes())


def test_anchor_gop16_dpb():
    assert simulate_dpb(build_schedule_1d(17, 16)).peak == 5


def test_compare_report(small_grid):
    curves, rep = compare(small_grid, [15, 20, 25, 30], image="t")
    assert [c.structure for c in curves] == ["1d", "2d"]
    assert all(c.monotone() for c in curves)
    assert rep["bd_rate"]["2d"]["psnr_y"]["status"] == "ok"
    assert rep["view_digest"] == small_grid.digest()


def test_rdpoint_rejects_zero_bits():
    with pytest.raises(EvaluationError):
        RdPoint(20, 0, 30.0, 30.0)
    assert RdCurve("x", "2d", [RdPoint(30, 5, 1, 1), RdPoint(20, 9, 2, 2)]).points[0].qp == 20
