"""Block encoder and bit-exact decoder for a coding plan.

Every frame is split into fixed ``block_size`` luma blocks. The intra frame
codes INTRA_DC blocks only; inter frames choose per block between list0,
list1, bi-prediction and INTRA_DC by minimizing ``SSD + lambda * bits``.
Encoder and decoder share :func:`_predict` and :func:`_reconstruct`, so the
decoder output equals the encoder reconstruction sample for sample.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from ..mvscale import MotionVector
from ..scheduler import ConfigError
from ..view_grid import GridGeometry, ViewGrid, chroma_shape, make_grid
from .bitstream import Bitstream
from .entropy import BitCounter, BitReader, BitWriter, DecodeError, decode_coeffs, encode_coeffs
from .motion import MotionEntry, MvScaler, fetch, motion_search, predict_mv, to_int_pel
from .plan import CodingPlan, StructureConfig, make_plan, uses_coord_scaling
from .transform import dequantize_inverse, transform_quantize

log = logging.getLogger(__name__)

MODE_L0, MODE_L1, MODE_BI, MODE_INTRA = 0, 1, 2, 3
FORMAT_VERSION = 1


@dataclass(frozen=True)
class CodecConfig:
    qp: int = 25
    block_size: int = 16
    search_range: int = 8
    n_per_list: int = 4
    lambda_scale: float = 0.85
    deadzone_intra: float = 1 / 3
    deadzone_inter: float = 1 / 6
    hierarchy_qp: bool = True  # add the frame-class QP offset to inter frames

    def __post_init__(self):
        if not 0 <= self.qp <= 51:
            raise ConfigError(f"qp must be in 0..51, got {self.qp}")
        if self.block_size < 4 or self.block_size & (self.block_size - 1):
            raise ConfigError(f"block size must be a power of two >= 4, got {self.block_size}")
        if self.search_range < 0:
            raise ConfigError("search range must be >= 0")
        if self.n_per_list < 1:
            raise ConfigError("n_per_list must be >= 1")

    def frame_qp(self, offset: int) -> int:
        return min(51, self.qp + (offset if self.hierarchy_qp else 0))

    def lam(self, qp: int) -> float:
        return self.lambda_scale * 2.0 ** ((qp - 12) / 3)

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, d: dict) -> "CodecConfig":
        return cls(**d)


class InterPart(NamedTuple):
    list_id: int
    ref_idx: int
    mvp_idx: int
    mvd: tuple
    mv: tuple  # integer pel


class BlockMode(NamedTuple):
    mode: int
    inter: tuple  # InterPart per used list
    levels: tuple  # quantized coefficients per plane


@dataclass
class FrameStats:
    frame: int
    view: int
    qp: int
    bits: int
    sse: tuple
    samples: tuple
    modes: dict = field(default_factory=dict)
    # per block (row-major): tuple of MotionEntry (frame ids, quarter-pel MVs), or None for intra
    motion: list = field(default_factory=list)


@dataclass
class EncodeResult:
    bitstream: Bitstream
    recon: ViewGrid
    stats: list
    plan: CodingPlan

    @property
    def total_bits(self) -> int:
        return 8 * len(self.bitstream.to_bytes())


class _Frame:
    """Padded reconstruction planes plus the per-block motion field."""

    def __init__(self, shapes, nby, nbx):
        self.planes = [np.zeros(s, dtype=np.int32) for s in shapes]
        self.motion = [[None] * nbx for _ in range(nby)]


class _Layout:
    def __init__(self, height, width, chroma_format, bs, bit_depth):
        self.h, self.w = height, width
        self.bs = bs
        self.ph = -(-height // bs) * bs
        self.pw = -(-width // bs) * bs
        self.nby, self.nbx = self.ph // bs, self.pw // bs
        self.sub = 2 if chroma_format == "420" else 1
        self.cbs = bs // self.sub
        self.chroma_format = chroma_format
        self.ch, self.cw = chroma_shape(height, width, chroma_format)
        cshape = (self.ph // self.sub, self.pw // self.sub)
        self.shapes = [(self.ph, self.pw), cshape, cshape]
        self.bit_depth = bit_depth
        self.maxval = (1 << bit_depth) - 1

    def pad(self, planes):
        out = []
        for k, p in enumerate(planes):
            th, tw = self.shapes[k]
            out.append(np.pad(p, ((0, th - p.shape[0]), (0, tw - p.shape[1])), mode="edge").astype(np.int32))
        return out

    def crop(self, planes):
        return (planes[0][: self.h, : self.w].copy(), planes[1][: self.ch, : self.cw].copy(),
                planes[2][: self.ch, : self.cw].copy())

    def block(self, k, by, bx):
        s = self.bs if k == 0 else self.cbs
        return by * s, bx * s, s


def _chroma_mv(v: int, sub: int) -> int:
    if sub == 1:
        return v
    return (abs(v) + 1) // 2 * (1 if v >= 0 else -1)


def _dc(plane, y0, x0, s, bit_depth):
    parts = []
    if y0 > 0:
        parts.append(plane[y0 - 1, x0 : x0 + s])
    if x0 > 0:
        parts.append(plane[y0 : y0 + s, x0 - 1])
    if not parts:
        return 1 << (bit_depth - 1)
    v = np.concatenate(parts)
    return int((int(v.sum()) + len(v) // 2) // len(v))


def _predict(lay: _Layout, mode: int, inter, cur: _Frame, refs, by: int, bx: int):
    """Prediction planes for one block; ``refs`` maps list_id -> list of reference frames."""
    out = []
    for k in range(3):
        y0, x0, s = lay.block(k, by, bx)
        if mode == MODE_INTRA:
            out.append(np.full((s, s), _dc(cur.planes[k], y0, x0, s, lay.bit_depth), dtype=np.int64))
            continue
        preds = []
        for part in inter:
            ref = refs[part.list_id][part.ref_idx]
            dx, dy = part.mv
            if k:
                dx, dy = _chroma_mv(dx, lay.sub), _chroma_mv(dy, lay.sub)
            preds.append(fetch(ref.planes[k], y0, x0, s, s, dy, dx).astype(np.int64))
        if len(preds) == 1:
            out.append(preds[0])
        else:
            out.append((preds[0] + preds[1] + 1) >> 1)
    return out


def _reconstruct(lay: _Layout, pred, levels, qps):
    return [np.clip(pred[k] + dequantize_inverse(levels[k], qps[k]), 0, lay.maxval) for k in range(3)]


def _write_block(w, bm: BlockMode, intra_frame: bool, list_lens, ncands):
    if not intra_frame:
        w.ue(bm.mode)
        for part in bm.inter:
            if list_lens[part.list_id] > 1:
                w.ue(part.ref_idx)
            if ncands[(part.list_id, part.ref_idx)] > 1:
                w.write(part.mvp_idx, 1)
            w.se(part.mvd[0])
            w.se(part.mvd[1])
    for lv in bm.levels:
        encode_coeffs(w, lv)


def _plane_qps(qp: int) -> tuple:
    return (qp, qp, qp)


class _Context:
    """State shared by the encoder and decoder while walking a plan."""

    def __init__(self, plan: CodingPlan, cfg: CodecConfig, lay: _Layout):
        self.plan = plan
        self.cfg = cfg
        self.lay = lay
        self.scaler = MvScaler(plan.coords, uses_coord_scaling(plan))
        self.dpb: dict[int, _Frame] = {}

    def references(self, fid):
        if fid == self.plan.intra:
            return {0: [], 1: []}
        lists = self.plan.lists[fid]
        out = {}
        for lid, lst in ((0, lists.list0), (1, lists.list1)):
            frames = []
            for r in lst:
                if r not in self.dpb:
                    raise DecodeError(f"frame {fid}: reference {r} is not in the decoded picture buffer")
                frames.append(self.dpb[r])
            out[lid] = frames
        return out

    def colocated(self, fid):
        lists = self.plan.lists[fid]
        col = lists.list1[0] if lists.list1 else lists.list0[0]
        return col, self.dpb[col].motion

    def candidates(self, fid, cur: _Frame, list_id, ref_idx, by, bx, col):
        ref_id = (self.plan.lists[fid].list0, self.plan.lists[fid].list1)[list_id][ref_idx]
        col_id, col_field = col
        return predict_mv(fid, ref_id, list_id, bx, by, cur.motion, col_field, col_id, self.scaler)

    def motion_entries(self, fid, inter):
        lists = (self.plan.lists[fid].list0, self.plan.lists[fid].list1)
        return tuple(
            MotionEntry(p.list_id, lists[p.list_id][p.ref_idx], MotionVector(4 * p.mv[0], 4 * p.mv[1]))
            for p in inter
        )

    def retire(self, fid, frame: _Frame):
        """Insert the decoded frame, then keep exactly the next frame's RPS."""
        order = self.plan.order
        k = order.index(fid)
        self.dpb[fid] = frame
        keep = self.plan.schedule.rps[order[k + 1]] if k + 1 < len(order) else frozenset()
        for r in list(self.dpb):
            if r not in keep:
                del self.dpb[r]


# --- encoder ----------------------------------------------------------------


def _ssd(a, b) -> int:
    d = a.astype(np.int64) - b
    return int(np.sum(d * d))


def _encode_frame(ctx: _Context, fid: int, src, qp: int):
    lay, cfg = ctx.lay, ctx.cfg
    intra_frame = fid == ctx.plan.intra
    cur = _Frame(lay.shapes, lay.nby, lay.nbx)
    refs = ctx.references(fid)
    list_lens = {0: len(refs[0]), 1: len(refs[1])}
    col = None if intra_frame else ctx.colocated(fid)
    lam = cfg.lam(qp)
    lam_m = float(np.sqrt(lam))
    qps = _plane_qps(qp)
    w = BitWriter()
    modes = {MODE_L0: 0, MODE_L1: 0, MODE_BI: 0, MODE_INTRA: 0}
    for by in range(lay.nby):
        for bx in range(lay.nbx):
            orig = []
            for k in range(3):
                y0, x0, s = lay.block(k, by, bx)
                orig.append(src[k][y0 : y0 + s, x0 : x0 + s])
            options = []
            ncands = {}
            if not intra_frame:
                best = {}
                for lid in (0, 1):
                    for ridx, ref in enumerate(refs[lid]):
                        cands = ctx.candidates(fid, cur, lid, ridx, by, bx, col)
                        ncands[(lid, ridx)] = len(cands)
                        y0, x0, _ = lay.block(0, by, bx)
                        rbits = 2 * (ridx + 1).bit_length() - 1 if list_lens[lid] > 1 else 0
                        res = motion_search(orig[0], ref.planes[0], y0, x0, cands, cfg.search_range, lam_m,
                                            rbits, lid, ridx)
                        if lid not in best or res.cost < best[lid][0].cost:
                            best[lid] = (res, cands)
                parts = {}
                for lid, (res, cands) in best.items():
                    px, py = to_int_pel(cands[res.mvp_idx].mv.mvx), to_int_pel(cands[res.mvp_idx].mv.mvy)
                    parts[lid] = InterPart(lid, res.ref_idx, res.mvp_idx, (res.mv[0] - px, res.mv[1] - py), res.mv)
                if 0 in parts:
                    options.append((MODE_L0, (parts[0],)))
                if 1 in parts:
                    options.append((MODE_L1, (parts[1],)))
                if 0 in parts and 1 in parts:
                    options.append((MODE_BI, (parts[0], parts[1])))
            options.append((MODE_INTRA, ()))
            chosen = None
            for mode, inter in options:
                pred = _predict(lay, mode, inter, cur, refs, by, bx)
                dz = cfg.deadzone_intra if mode == MODE_INTRA else cfg.deadzone_inter
                levels = tuple(transform_quantize(orig[k] - pred[k], qps[k], dz) for k in range(3))
                rec = _reconstruct(lay, pred, levels, qps)
                bm = BlockMode(mode, inter, levels)
                if len(options) == 1:
                    chosen = (0.0, bm, rec)
                    break
                counter = BitCounter()
                _write_block(counter, bm, intra_frame, list_lens, ncands)
                j = sum(_ssd(orig[k], rec[k]) for k in range(3)) + lam * counter.bits
                if chosen is None or j < chosen[0]:
                    chosen = (j, bm, rec)
            _, bm, rec = chosen
            _write_block(w, bm, intra_frame, list_lens, ncands)
            for k in range(3):
                y0, x0, s = lay.block(k, by, bx)
                cur.planes[k][y0 : y0 + s, x0 : x0 + s] = rec[k]
            cur.motion[by][bx] = ctx.motion_entries(fid, bm.inter) if bm.mode != MODE_INTRA else None
            modes[bm.mode] += 1
    return w.getvalue(), cur, modes


def _header(grid: ViewGrid, cfg: CodecConfig, plan: CodingPlan) -> dict:
    h, w = grid.view_shape
    return {
        "format": "lfpseudo",
        "version": FORMAT_VERSION,
        "geometry": grid.geometry.to_json(),
        "config": cfg.to_json(),
        "structure": plan.structure.to_json(),
        "width": w,
        "height": h,
        "bit_depth": grid.bit_depth,
        "chroma_format": grid.chroma_format,
        "plan_hash": plan.digest(),
    }


def encode_sequence(grid: ViewGrid, cfg: CodecConfig | None = None, structure: StructureConfig | None = None,
                    plan: CodingPlan | None = None) -> EncodeResult:
    cfg = cfg or CodecConfig()
    plan = plan or make_plan(grid.geometry, structure, cfg.n_per_list)
    views = {plan.view_of[f] for f in plan.order}
    if views != set(grid.views) or len(plan.order) != len(grid.views):
        raise ConfigError("coding plan does not cover the view grid")
    h, w = grid.view_shape
    lay = _Layout(h, w, grid.chroma_format, cfg.block_size, grid.bit_depth)
    ctx = _Context(plan, cfg, lay)
    payloads, stats, recon = [], [], {}
    for fid in plan.order:
        view = plan.view_of[fid]
        src = lay.pad(grid[view].planes)
        qp = cfg.frame_qp(plan.qp_offset[fid])
        payload, frame, modes = _encode_frame(ctx, fid, src, qp)
        payloads.append(payload)
        out = lay.crop(frame.planes)
        recon[view] = out
        orig = grid[view].planes
        stats.append(FrameStats(
            frame=fid, view=view, qp=qp, bits=8 * len(payload),
            sse=tuple(_ssd(orig[k], out[k]) for k in range(3)),
            samples=tuple(int(orig[k].size) for k in range(3)),
            modes={"L0": modes[0], "L1": modes[1], "BI": modes[2], "INTRA": modes[3]},
            motion=[m for row in frame.motion for m in row],
        ))
        ctx.retire(fid, frame)
    bitstream = Bitstream(_header(grid, cfg, plan), payloads)
    rgrid = make_grid(grid.geometry, recon, grid.bit_depth, grid.chroma_format)
    log.debug("encoded %d frames, %d bits", len(payloads), bitstream.size_bits())
    return EncodeResult(bitstream, rgrid, stats, plan)


# --- decoder ----------------------------------------------------------------


def _decode_frame(ctx: _Context, fid: int, payload: bytes, qp: int) -> _Frame:
    lay = ctx.lay
    intra_frame = fid == ctx.plan.intra
    cur = _Frame(lay.shapes, lay.nby, lay.nbx)
    refs = ctx.references(fid)
    col = None if intra_frame else ctx.colocated(fid)
    qps = _plane_qps(qp)
    r = BitReader(payload)
    for by in range(lay.nby):
        for bx in range(lay.nbx):
            inter = ()
            mode = MODE_INTRA
            if not intra_frame:
                mode = r.ue()
                if mode > MODE_INTRA:
                    raise DecodeError(f"frame {fid}: invalid block mode {mode} at byte {r.byte_offset}")
                used = {MODE_L0: (0,), MODE_L1: (1,), MODE_BI: (0, 1), MODE_INTRA: ()}[mode]
                parts = []
                for lid in used:
                    n = len(refs[lid])
                    if n == 0:
                        raise DecodeError(f"frame {fid}: block uses empty list{lid} at byte {r.byte_offset}")
                    ridx = r.ue() if n > 1 else 0
                    if ridx >= n:
                        raise DecodeError(f"frame {fid}: ref_idx {ridx} >= {n} at byte {r.byte_offset}")
                    cands = ctx.candidates(fid, cur, lid, ridx, by, bx, col)
                    mvp_idx = r.read(1) if len(cands) > 1 else 0
                    mvd = (r.se(), r.se())
                    m = cands[mvp_idx].mv
                    mv = (to_int_pel(m.mvx) + mvd[0], to_int_pel(m.mvy) + mvd[1])
                    parts.append(InterPart(lid, ridx, mvp_idx, mvd, mv))
                inter = tuple(parts)
            levels = []
            for k in range(3):
                _, _, s = lay.block(k, by, bx)
                levels.append(decode_coeffs(r, s))
            pred = _predict(lay, mode, inter, cur, refs, by, bx)
            rec = _reconstruct(lay, pred, levels, qps)
            for k in range(3):
                y0, x0, s = lay.block(k, by, bx)
                cur.planes[k][y0 : y0 + s, x0 : x0 + s] = rec[k]
            cur.motion[by][bx] = ctx.motion_entries(fid, inter) if mode != MODE_INTRA else None
    if not r.at_end():
        raise DecodeError(f"frame {fid}: trailing data at byte {r.byte_offset}")
    return cur


def decode_sequence(bitstream: Bitstream | bytes) -> ViewGrid:
    if isinstance(bitstream, (bytes, bytearray)):
        bitstream = Bitstream.from_bytes(bytes(bitstream))
    hdr = bitstream.header
    try:
        geom = GridGeometry.from_json(hdr["geometry"])
        cfg = CodecConfig.from_json(hdr["config"])
        structure = StructureConfig.from_json(hdr["structure"])
        h, w = int(hdr["height"]), int(hdr["width"])
        bit_depth, chroma = int(hdr["bit_depth"]), hdr["chroma_format"]
    except (KeyError, TypeError, ValueError) as e:
        raise DecodeError(f"malformed header: {e}") from None
    plan = make_plan(geom, structure, cfg.n_per_list)
    if plan.digest() != hdr.get("plan_hash"):
        raise DecodeError("schedule hash mismatch: header does not match the rebuilt coding plan")
    if len(bitstream.payloads) != len(plan.order):
        raise DecodeError(f"expected {len(plan.order)} frame payloads, found {len(bitstream.payloads)}")
    lay = _Layout(h, w, chroma, cfg.block_size, bit_depth)
    ctx = _Context(plan, cfg, lay)
    recon = {}
    for fid, payload in zip(plan.order, bitstream.payloads):
        frame = _decode_frame(ctx, fid, payload, cfg.frame_qp(plan.qp_offset[fid]))
        recon[plan.view_of[fid]] = lay.crop(frame.planes)
        ctx.retire(fid, frame)
    return make_grid(geom, recon, bit_depth, chroma)
