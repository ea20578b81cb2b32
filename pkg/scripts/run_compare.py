"""2-D structure versus the 1-D anchor on the synthetic light fields.

Writes rd.csv, bd_report.json and gnuplot .dat files under --out.

    python scripts/run_compare.py --rows 7 --size 64 --out results/
"""

import argparse
import json
import logging
import time
from pathlib import Path

from lfpseudo import io as lfio
from lfpseudo.codec import CodecConfig
from lfpseudo.eval.harness import LADDER, compare, gnuplot_data, to_csv
from lfpseudo.synth import FIXTURES
from lfpseudo.view_grid import corner_geometry


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=7)
    ap.add_argument("--size", type=int, default=64)
    ap.add_argument("--qps", type=lambda s: [int(q) for q in s.split(",")], default=list(LADDER))
    ap.add_argument("--fixtures", default=",".join(FIXTURES))
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    out = Path(args.out)
    geom = corner_geometry(args.rows)
    all_curves, reports = [], {}
    for name in args.fixtures.split(","):
        t0 = time.perf_counter()
        grid = FIXTURES[name](geom, size=(args.size, args.size))
        curves, rep = compare(grid, args.qps, CodecConfig(), image=name, jobs=args.jobs)
        all_curves += curves
        reports[name] = rep
        bd = rep["bd_rate"]["2d"]["psnr_y"]
        shown = f"{bd['bd_rate']:+.2f}%" if bd["status"] == "ok" else bd["status"]
        print(f"{name:8s} BD-rate 2d vs 1d: {shown}  ({time.perf_counter() - t0:.0f} s)")
        for c in curves:
            lfio.write_text(out / f"{name}_{c.structure}.dat", gnuplot_data(c))
    lfio.write_text(out / "rd.csv", to_csv(all_curves))
    lfio.write_text(out / "bd_report.json", json.dumps(reports, indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
