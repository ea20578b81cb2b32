"""QP-ladder sweeps, the 1-D anchor and 2-D versus 1-D comparison."""

from __future__ import annotations

import csv
import io
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ..codec import Bitstream, CodecConfig, StructureConfig, decode_sequence, encode_sequence
from .bdrate import EvaluationError, bd_rate_curves
from .metrics import grid_psnr

log = logging.getLogger(__name__)

LADDER = (15, 20, 25, 30)
CSV_FIELDS = ("image", "structure", "qp", "bits", "psnr_y", "psnr_yuv")
STRUCTURES = {"2d": StructureConfig("2d"), "1d": StructureConfig("1d")}


class ClosedLoopError(RuntimeError):
    """Decoder output differs from the encoder reconstruction."""


@dataclass(frozen=True)
class RdPoint:
    qp: int
    bits: int
    psnr_y: float
    psnr_yuv: float

    def __post_init__(self):
        if self.bits <= 0:
            raise EvaluationError(f"bitrate must be positive, got {self.bits}")


@dataclass
class RdCurve:
    image: str
    structure: str
    points: list = field(default_factory=list)

    def __post_init__(self):
        self.points = sorted(self.points, key=lambda p: p.qp)

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)

    @property
    def bd_ready(self) -> bool:
        return len(self.points) >= 4

    def monotone(self) -> bool:
        """Higher QP gives strictly fewer bits and no higher PSNR."""
        pts = self.points
        return all(b.bits < a.bits and b.psnr_y <= a.psnr_y for a, b in zip(pts, pts[1:]))

    def rows(self):
        for p in self.points:
            yield (self.image, self.structure, p.qp, p.bits, f"{p.psnr_y:.6f}", f"{p.psnr_yuv:.6f}")


def to_csv(curves) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for c in curves:
        w.writerows(c.rows())
    return buf.getvalue()


def read_csv(text: str) -> list[RdCurve]:
    curves: dict = {}
    for row in csv.DictReader(io.StringIO(text)):
        key = (row["image"], row["structure"])
        pt = RdPoint(int(row["qp"]), int(row["bits"]), float(row["psnr_y"]), float(row["psnr_yuv"]))
        curves.setdefault(key, []).append(pt)
    return [RdCurve(img, st, pts) for (img, st), pts in curves.items()]


def gnuplot_data(curve: RdCurve) -> str:
    """Whitespace-separated ``bits psnr_y psnr_yuv qp`` lines, ascending bitrate."""
    lines = [f"# {curve.image} {curve.structure}", "# bits psnr_y psnr_yuv qp"]
    for p in sorted(curve.points, key=lambda p: p.bits):
        lines.append(f"{p.bits} {p.psnr_y:.6f} {p.psnr_yuv:.6f} {p.qp}")
    return "\n".join(lines) + "\n"


def _structure(s) -> StructureConfig:
    if isinstance(s, StructureConfig):
        return s
    try:
        return STRUCTURES[s]
    except KeyError:
        raise EvaluationError(f"unknown structure {s!r}; expected one of {sorted(STRUCTURES)}") from None


def verify_closed_loop(result) -> None:
    """Decode the serialized stream and require sample-exact equality with the encoder reconstruction."""
    dec = decode_sequence(Bitstream.from_bytes(result.bitstream.to_bytes()))
    rec = result.recon
    for p in rec.pocs():
        for k, (a, b) in enumerate(zip(rec[p].planes, dec[p].planes)):
            if not np.array_equal(a, b):
                raise ClosedLoopError(f"view {p} plane {k}: decoder output differs from encoder reconstruction")


def run_point(grid, structure, cfg: CodecConfig, verify: bool = True):
    """Encode, optionally verify, and measure one ladder point. Returns (RdPoint, EncodeResult)."""
    t0 = time.perf_counter()
    res = encode_sequence(grid, cfg, _structure(structure))
    if verify:
        verify_closed_loop(res)
    q = grid_psnr(grid, res.recon)
    log.info("qp %d %s: %d bits, %.3f dB (%.1f s)", cfg.qp, _structure(structure).kind, res.total_bits,
             q.y, time.perf_counter() - t0)
    return RdPoint(cfg.qp, res.total_bits, q.y, q.yuv), res


def _job(args):
    grid, structure, cfg, verify = args
    return run_point(grid, structure, cfg, verify)[0]


def sweep(grid, structure="2d", ladder=LADDER, cfg: CodecConfig | None = None, image: str = "image",
          jobs: int = 1, verify: bool = True) -> RdCurve:
    """One encode/decode/PSNR cycle per QP. Points are independent and may run in parallel."""
    ladder = list(ladder)
    if not ladder:
        raise EvaluationError("QP ladder is empty")
    cfg = cfg or CodecConfig()
    st = _structure(structure)
    tasks = [(grid, st, replace(cfg, qp=int(q)), verify) for q in ladder]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as ex:
            points = list(ex.map(_job, tasks))
    else:
        points = [_job(t) for t in tasks]
    return RdCurve(image, st.kind, points)


def anchor_1d(grid, cfg: CodecConfig | None = None, verify: bool = True):
    """1-D pseudo-sequence anchor: serpentine scan, GOP-16 hierarchy, POC lists and POC MV scaling.

    Returns ``(Bitstream, RdPoint)``.
    """
    pt, res = run_point(grid, STRUCTURES["1d"], cfg or CodecConfig(), verify)
    return res.bitstream, pt


def bd_status(curve_a: RdCurve, curve_b: RdCurve, metric: str = "psnr_y", mode: str = "cubic") -> dict:
    """BD-rate of b against a, or an explicit unavailable status."""
    if not (curve_a.bd_ready and curve_b.bd_ready):
        return {"status": "unavailable", "reason": "BD-rate needs at least 4 points per curve", "bd_rate": None}
    try:
        v = bd_rate_curves(curve_a, curve_b, metric, mode)
    except EvaluationError as e:
        return {"status": "unavailable", "reason": str(e), "bd_rate": None}
    return {"status": "ok", "bd_rate": v}


def compare(grid, ladder=LADDER, cfg: CodecConfig | None = None, image: str = "image", jobs: int = 1,
            structures=("1d", "2d"), verify: bool = True, mode: str = "cubic"):
    """Sweep every structure and report BD-rates of each against the first (the anchor).

    Returns ``(curves, report)`` where report is JSON-serializable.
    """
    if len(structures) < 2:
        raise EvaluationError("compare needs at least two structures")
    curves = [sweep(grid, s, ladder, cfg, image, jobs, verify) for s in structures]
    anchor = curves[0]
    report = {
        "image": image,
        "anchor": anchor.structure,
        "ladder": sorted(int(q) for q in ladder),
        "view_digest": grid.digest(),
        "curves": {c.structure: [p.__dict__ for p in c.points] for c in curves},
        "bd_rate": {},
    }
    for c in curves[1:]:
        report["bd_rate"][c.structure] = {
            "psnr_y": bd_status(anchor, c, "psnr_y", mode),
            "psnr_yuv": bd_status(anchor, c, "psnr_yuv", mode),
        }
    return curves, report
