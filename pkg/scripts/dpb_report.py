"""Reference-buffer occupancy of the 2-D structure and the 1-D GOP-16 anchor.

    python scripts/dpb_report.py [--rows 13]
"""

import argparse

from lfpseudo.reflists import lists_for_schedule
from lfpseudo.scheduler import QUADRANTS, build_schedule, build_schedule_1d, simulate_dpb
from lfpseudo.view_grid import assign_poc, corner_geometry


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=13)
    ap.add_argument("--frame", type=int, default=14, help="print RPS and lists for this POC")
    args = ap.parse_args()

    geom = corner_geometry(args.rows)
    full = build_schedule(geom)
    print(f"{geom.rows}x{geom.cols} grid, {geom.n_views} views")
    print(f"  full schedule peak DPB: {simulate_dpb(full).peak}")
    for q in QUADRANTS:
        sizes = sum(1 for p in full.order if full.quadrant[p] == q)
        print(f"  {q}-only replay peak DPB: {simulate_dpb(build_schedule(geom, (q,))).peak}  ({sizes} views)")
    tl = simulate_dpb(full)
    print(f"  peak first reached before POC {tl.peak_frame}")

    one_d = build_schedule_1d(17, 16)
    print(f"1-D GOP-16 peak DPB: {simulate_dpb(one_d).peak}")

    f = args.frame
    if f in full.rps:
        lists = lists_for_schedule(full, assign_poc(geom), 4)[f]
        print(f"frame {f}: RPS {sorted(full.rps[f])}, list0 {list(lists.list0)}, list1 {list(lists.list1)}")


if __name__ == "__main__":
    main()
