"""Command-line entry point: ``lfpseudo <subcommand> ...``.

Exit codes: 0 success, 1 domain error, 2 usage error or missing input.
Every subcommand that writes files also writes ``<output>.manifest.json``
recording inputs, parameters and sha256 hashes of the outputs.

Option precedence: explicit flags, then ``--config`` JSON (keys are option
names with dashes or underscores), then built-in defaults.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from . import io as lfio
from .codec import Bitstream, CodecConfig, StructureConfig, decode_sequence, encode_sequence
from .eval.bdrate import EvaluationError
from .eval.metrics import DimensionMismatch, grid_psnr
from .mvscale import MotionVector, ScalingAnchors, scale_spatial_flagged, scale_temporal_flagged
from .reflists import lists_for_schedule
from .scheduler import QUADRANTS, build_schedule, hm_table, simulate_dpb
from .view_grid import GridGeometry, assign_poc, corner_geometry, decompose_lenslet, subsample_chroma

log = logging.getLogger("lfpseudo")


class UsageError(Exception):
    pass


# --- helpers ----------------------------------------------------------------


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _hash_tree(path: Path) -> dict:
    if path.is_dir():
        return {str(p.relative_to(path)): sha256_file(p) for p in sorted(path.rglob("*")) if p.is_file()}
    return sha256_file(path)


def write_manifest(output, args, inputs=(), outputs=(), extra=None) -> dict:
    """Manifest beside ``output``. Holds no timestamps so reruns are byte-identical."""
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "config", "verbose")}
    man = {
        "tool": "lfpseudo",
        "version": __version__,
        "subcommand": args.command,
        "parameters": params,
        "inputs": {str(p): _hash_tree(Path(p)) for p in inputs},
        "outputs": {str(p): _hash_tree(Path(p)) for p in outputs},
    }
    if extra:
        man.update(extra)
    lfio.write_json(Path(str(output) + ".manifest.json"), man)
    return man


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _pair(text: str) -> tuple[int, int]:
    v = _ints(text)
    if len(v) != 2:
        raise argparse.ArgumentTypeError(f"expected two comma-separated integers, got {text!r}")
    return v[0], v[1]


def _require(path, kind="file"):
    p = Path(path)
    ok = p.is_dir() if kind == "dir" else p.is_file()
    if not ok:
        raise FileNotFoundError(f"input {kind} not found: {p}")
    return p


def geometry_from_args(args) -> GridGeometry:
    if args.geometry:
        d = json.loads(_require(args.geometry).read_text())
        return GridGeometry.from_json(d.get("geometry", d))
    if args.no_corners:
        cols = args.cols or args.rows
        return GridGeometry(args.rows, cols, frozenset(), args.pitch)
    return corner_geometry(args.rows, args.cols, args.pitch)


def codec_config(args) -> CodecConfig:
    return CodecConfig(qp=args.qp, block_size=args.block_size, search_range=args.search_range,
                       n_per_list=args.n_per_list, hierarchy_qp=not args.flat_qp)


def structure_config(kind: str, args) -> StructureConfig:
    if kind == "1d":
        return StructureConfig("1d", gop=args.gop, scan=args.scan)
    return StructureConfig("2d", list_mode=args.list_mode, mv_scaling=args.mv_scaling)


# --- subcommands ------------------------------------------------------------


def cmd_decompose(args) -> int:
    src = _require(args.input)
    img = lfio.read_raw(src)
    geom = geometry_from_args(args)
    grid = decompose_lenslet(img, geom)
    if args.chroma == "420":
        grid = subsample_chroma(grid)
    files = lfio.write_view_dir(args.output, grid)
    write_manifest(args.output, args, [src, lfio.sidecar_path(src)], [args.output],
                   {"geometry": geom.to_json(), "n_views": len(files)})
    print(f"wrote {len(files)} views to {args.output}")
    return 0


def cmd_synth(args) -> int:
    from .synth import FIXTURES

    geom = geometry_from_args(args)
    size = (args.size, args.size)
    if args.lenslet:
        grid = FIXTURES[args.fixture](geom, size=size, chroma_format="444", seed=args.seed)
        from .view_grid import recompose

        lfio.write_raw(args.output, recompose(grid))
        outs = [args.output, lfio.sidecar_path(args.output)]
    else:
        grid = FIXTURES[args.fixture](geom, size=size, chroma_format=args.chroma, seed=args.seed)
        lfio.write_view_dir(args.output, grid)
        outs = [args.output]
    write_manifest(args.output, args, (), outs, {"geometry": geom.to_json()})
    print(f"wrote {args.fixture} fixture ({len(grid)} views, {args.size}x{args.size}) to {args.output}")
    return 0


def cmd_schedule(args) -> int:
    geom = geometry_from_args(args)
    quads = tuple(args.quadrant) if args.quadrant else QUADRANTS
    sched = build_schedule(geom, quads)
    lists = lists_for_schedule(sched, assign_poc(geom), args.n_per_list)
    tl = simulate_dpb(sched)
    report = {
        "views": len(sched.order),
        "quadrants": list(quads),
        "peak_dpb": tl.peak,
        "peak_frame": tl.peak_frame,
        "occupancy": list(tl.occupancy),
    }
    print(f"coding order: {len(sched.order)} frames, quadrants {','.join(quads)}")
    print(f"peak DPB {tl.peak} (first reached before POC {tl.peak_frame})")
    outs = []
    if args.output:
        lfio.write_json(args.output, {"schedule": sched.to_json(lists), "dpb": report})
        outs.append(args.output)
    if args.hm_table:
        lfio.write_text(args.hm_table, hm_table(sched, lists))
        outs.append(args.hm_table)
    if outs:
        write_manifest(outs[0], args, (), outs, {"geometry": geom.to_json()})
    return 0


def cmd_encode(args) -> int:
    src = _require(args.input, "dir")
    grid = lfio.read_view_dir(src)
    cfg = codec_config(args)
    res = encode_sequence(grid, cfg, structure_config(args.structure, args))
    lfio.write_bytes(args.output, res.bitstream.to_bytes())
    outs = [args.output]
    if args.recon:
        lfio.write_view_dir(args.recon, res.recon)
        outs.append(args.recon)
    q = grid_psnr(grid, res.recon)
    write_manifest(args.output, args, [src], outs, {"config": cfg.to_json(), "bits": res.total_bits})
    print(f"{len(res.stats)} frames, {res.total_bits} bits, {q.status()}")
    return 0


def cmd_decode(args) -> int:
    src = _require(args.input)
    dec = decode_sequence(Bitstream.from_bytes(src.read_bytes()))
    if args.verify:
        ref = lfio.read_view_dir(_require(args.verify, "dir"))
        bad = [p for p in ref.pocs() if any(
            a.shape != b.shape or (a != b).any() for a, b in zip(ref[p].planes, dec[p].planes))]
        if bad or set(ref.pocs()) != set(dec.pocs()):
            print(f"verify: MISMATCH in views {bad[:8]}", file=sys.stderr)
            return 1
        print("verify: sample-exact")
    outs = []
    if args.output:
        lfio.write_view_dir(args.output, dec)
        outs.append(args.output)
        write_manifest(args.output, args, [src], outs)
    print(f"decoded {len(dec)} views")
    return 0


def cmd_eval(args) -> int:
    ref = lfio.read_view_dir(_require(args.reference, "dir"))
    test = lfio.read_view_dir(_require(args.test, "dir"))
    q = grid_psnr(ref, test)
    result = {"status": "lossless" if q.lossless else "ok",
              **{k: (v if v != float("inf") else None) for k, v in q._asdict().items()}}
    print(q.status())
    if args.output:
        lfio.write_json(args.output, result)
        write_manifest(args.output, args, [args.reference, args.test], [args.output])
    return 0


def _ladder_outputs(args, curves, extra_inputs):
    from .eval.harness import gnuplot_data, to_csv

    outs = []
    if args.csv:
        lfio.write_text(args.csv, to_csv(curves))
        outs.append(args.csv)
    if args.gnuplot_dir:
        for c in curves:
            p = Path(args.gnuplot_dir) / f"{c.image}_{c.structure}.dat"
            lfio.write_text(p, gnuplot_data(c))
            outs.append(p)
    return outs


def cmd_sweep(args) -> int:
    from .eval.harness import sweep

    src = _require(args.input, "dir")
    grid = lfio.read_view_dir(src)
    curve = sweep(grid, structure_config(args.structure, args), args.qps, codec_config(args),
                  image=args.image or src.name, jobs=args.jobs)
    for p in curve:
        print(f"qp {p.qp:2d}: {p.bits:9d} bits  Y {p.psnr_y:.4f} dB  YUV {p.psnr_yuv:.4f} dB")
    if not curve.bd_ready:
        print("BD-rate: unavailable (fewer than 4 ladder points)")
    outs = _ladder_outputs(args, [curve], [src])
    if outs:
        write_manifest(outs[0], args, [src], outs)
    return 0


def cmd_compare(args) -> int:
    from .eval.harness import compare

    src = _require(args.input, "dir")
    grid = lfio.read_view_dir(src)
    kinds = [s.strip() for s in args.structures.split(",") if s.strip()]
    if len(kinds) < 2 or args.anchor not in kinds:
        raise UsageError(f"--structures needs at least two entries including the anchor {args.anchor!r}")
    order = [args.anchor] + [k for k in kinds if k != args.anchor]
    structs = [structure_config(k, args) for k in order]
    curves, report = compare(grid, args.qps, codec_config(args), image=args.image or src.name, jobs=args.jobs,
                             structures=structs, mode=args.bd_mode)
    for name, entry in report["bd_rate"].items():
        for metric, st in entry.items():
            if st["status"] == "ok":
                print(f"BD-rate {name} vs {report['anchor']} ({metric}): {st['bd_rate']:+.3f}%")
            else:
                print(f"BD-rate {name} vs {report['anchor']} ({metric}): unavailable ({st['reason']})")
    outs = _ladder_outputs(args, curves, [src])
    if args.output:
        lfio.write_json(args.output, report)
        outs.insert(0, args.output)
    if outs:
        write_manifest(outs[0], args, [src], outs)
    return 0


def cmd_scale_mv(args) -> int:
    anchors = ScalingAnchors(args.cur, args.cur_ref, args.donor_ref, args.colocated)
    mv = MotionVector(*args.mv)
    if args.colocated is None:
        out, flags = scale_spatial_flagged(mv, anchors)
    else:
        out, flags = scale_temporal_flagged(mv, anchors)
    print(json.dumps({"mv": list(out), "copied": list(flags)}))
    return 0


# --- parser -----------------------------------------------------------------


def _geometry_opts(p):
    g = p.add_argument_group("geometry")
    g.add_argument("--geometry", help="geometry JSON (a GridGeometry or a view directory's geometry.json)")
    g.add_argument("--rows", type=int, default=13)
    g.add_argument("--cols", type=int, default=None, help="defaults to --rows")
    g.add_argument("--pitch", type=int, default=None, help="microlens pitch in samples (default: grid size)")
    g.add_argument("--no-corners", action="store_true", help="keep the four corner views")


def _codec_opts(p):
    g = p.add_argument_group("codec")
    g.add_argument("--qp", type=int, default=25)
    g.add_argument("--block-size", type=int, default=16)
    g.add_argument("--search-range", type=int, default=8)
    g.add_argument("--n-per-list", type=int, default=4)
    g.add_argument("--flat-qp", action="store_true", help="no per-class QP offsets")
    g.add_argument("--list-mode", choices=("distance", "poc"), default="distance")
    g.add_argument("--mv-scaling", choices=("coord", "poc"), default="coord")
    g.add_argument("--gop", type=int, default=16)
    g.add_argument("--scan", choices=("serpentine", "raster"), default="serpentine")


def _ladder_opts(p):
    p.add_argument("--qps", type=_ints, default=[15, 20, 25, 30])
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--csv")
    p.add_argument("--gnuplot-dir")
    p.add_argument("--image", help="label for CSV rows (default: input directory name)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lfpseudo", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"lfpseudo {__version__}")
    ap.add_argument("--config", help="JSON file of option defaults; explicit flags win")
    ap.add_argument("--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="split a planar raw lenslet image into views")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--chroma", choices=("444", "420"), default="444")
    _geometry_opts(p)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("synth", help="write a synthetic light field (view directory or lenslet raw)")
    p.add_argument("--fixture", choices=("texture", "pinhole", "noise"), default="texture")
    p.add_argument("--output", required=True)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--chroma", choices=("444", "420"), default="420")
    p.add_argument("--lenslet", action="store_true", help="write an interleaved 4:4:4 lenslet raw instead")
    _geometry_opts(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("schedule", help="coding order, reference sets and DPB report")
    p.add_argument("--quadrant", action="append", choices=QUADRANTS, help="replay only these quadrants")
    p.add_argument("--n-per-list", type=int, default=4)
    p.add_argument("--output", help="schedule JSON")
    p.add_argument("--hm-table", help="plain-text per-frame table")
    _geometry_opts(p)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("encode", help="encode a view directory")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--recon", help="also write the encoder reconstruction as a view directory")
    p.add_argument("--structure", choices=("2d", "1d"), default="2d")
    _codec_opts(p)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="decode a bitstream")
    p.add_argument("--input", required=True)
    p.add_argument("--output")
    p.add_argument("--verify", metavar="DIR", help="compare against a reconstruction view directory")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("eval", help="PSNR between two view directories")
    p.add_argument("--reference", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--output")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="R-D curve over a QP ladder")
    p.add_argument("--input", required=True)
    p.add_argument("--structure", choices=("2d", "1d"), default="2d")
    _ladder_opts(p)
    _codec_opts(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="BD-rate of structures against an anchor")
    p.add_argument("--input", required=True)
    p.add_argument("--structures", default="2d,1d")
    p.add_argument("--anchor", default="1d")
    p.add_argument("--bd-mode", choices=("cubic", "pchip"), default="cubic")
    p.add_argument("--output", help="BD-rate report JSON")
    _ladder_opts(p)
    _codec_opts(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("scale-mv", help="scale one MV by view-coordinate offsets")
    p.add_argument("--mv", type=_pair, required=True, help="quarter-pel mvx,mvy")
    p.add_argument("--cur", type=_pair, required=True, help="x,y of the current view")
    p.add_argument("--cur-ref", type=_pair, required=True)
    p.add_argument("--donor-ref", type=_pair, required=True)
    p.add_argument("--colocated", type=_pair, help="x,y of the colocated view (temporal scaling)")
    p.set_defaults(func=cmd_scale_mv)
    return ap


def _apply_config(ap, argv):
    """Re-parse with ``--config`` values installed as subparser defaults."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return ap.parse_args(argv)
    cfg = json.loads(_require(known.config).read_text())
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    sub = next(a for a in ap._actions if isinstance(a, argparse._SubParsersAction))
    for sp in sub.choices.values():
        dests = {a.dest for a in sp._actions}
        sp.set_defaults(**{k: v for k, v in cfg.items() if k in dests})
    return ap.parse_args(argv)


DOMAIN_ERRORS = (ValueError, RuntimeError, KeyError, EvaluationError, DimensionMismatch, FileExistsError)


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = _apply_config(ap, argv)
    except FileNotFoundError as e:
        print(f"lfpseudo: error: {e}", file=sys.stderr)
        return 2
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (FileNotFoundError, UsageError) as e:
        print(f"lfpseudo {args.command}: error: {e}", file=sys.stderr)
        return 2
    except DOMAIN_ERRORS as e:
        print(f"lfpseudo {args.command}: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
