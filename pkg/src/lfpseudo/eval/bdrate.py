"""Bjontegaard delta rate."""

from __future__ import annotations

import numpy as np
from scipy import interpolate


class EvaluationError(ValueError):
    pass


def _prepare(rates, psnrs):
    r = np.asarray(rates, dtype=float)
    q = np.asarray(psnrs, dtype=float)
    if r.ndim != 1 or r.shape != q.shape:
        raise EvaluationError("rate and PSNR must be 1-D arrays of equal length")
    if len(r) < 4:
        raise EvaluationError(f"BD-rate needs at least 4 points per curve, got {len(r)}")
    if np.any(r <= 0):
        raise EvaluationError("rates must be positive")
    if not np.all(np.isfinite(q)):
        raise EvaluationError("PSNR values must be finite")
    return np.log10(r), q


def bd_rate(rate_a, psnr_a, rate_b, psnr_b, mode: str = "cubic") -> float:
    """Average bitrate difference of curve b relative to curve a, in percent.

    ``mode="cubic"`` fits log10(rate) as a cubic in PSNR and integrates the
    fits in closed form over the common PSNR interval. ``mode="pchip"`` uses
    piecewise-cubic Hermite interpolation with trapezoidal integration.
    Negative means b needs fewer bits for the same quality.
    """
    la, qa = _prepare(rate_a, psnr_a)
    lb, qb = _prepare(rate_b, psnr_b)
    lo = max(qa.min(), qb.min())
    hi = min(qa.max(), qb.max())
    if not hi > lo:
        raise EvaluationError(
            f"PSNR ranges do not overlap: [{qa.min():.3f}, {qa.max():.3f}] vs [{qb.min():.3f}, {qb.max():.3f}]"
        )
    if mode == "cubic":
        pa = np.polyint(np.polyfit(qa, la, 3))
        pb = np.polyint(np.polyfit(qb, lb, 3))
        ia = np.polyval(pa, hi) - np.polyval(pa, lo)
        ib = np.polyval(pb, hi) - np.polyval(pb, lo)
    elif mode == "pchip":
        xs = np.linspace(lo, hi, 101)
        oa, ob = np.argsort(qa), np.argsort(qb)
        ia = np.trapezoid(interpolate.pchip_interpolate(qa[oa], la[oa], xs), xs)
        ib = np.trapezoid(interpolate.pchip_interpolate(qb[ob], lb[ob], xs), xs)
    else:
        raise ValueError(f"unknown BD-rate mode {mode!r}")
    avg = (ib - ia) / (hi - lo)
    return float((10.0 ** avg - 1.0) * 100.0)


def bd_rate_curves(curve_a, curve_b, metric: str = "psnr_y", mode: str = "cubic") -> float:
    """BD-rate of two :class:`RdCurve`-like sequences of points."""
    pa, pb = list(curve_a), list(curve_b)
    return bd_rate([p.bits for p in pa], [getattr(p, metric) for p in pa],
                   [p.bits for p in pb], [getattr(p, metric) for p in pb], mode)
