"""Make the first q eigenvalues of the disk simple in each perturbation mode.

    python3 scripts/simplify_disk.py --q 3 --h 0.0625
"""

import argparse

from fraclab import Problem, SimplificationPlan, disk, simplify


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--s", type=float, default=0.5)
    ap.add_argument("--h", type=float, default=1 / 16)
    ap.add_argument("--q", type=int, default=3)
    ap.add_argument("--eps", type=float, default=0.1)
    args = ap.parse_args()
    p = Problem(disk(), args.s, "grid", h=args.h)
    for mode in ("domain", "potential", "weight"):
        rep = simplify(p, SimplificationPlan(mode=mode, q=args.q, eps=args.eps))
        steps = ", ".join(f"{it['candidate']['label']} t={it['amplitude']:.2e}" for it in rep.iterations)
        print(f"{mode:9s} success={rep.success} iterations={len(rep.iterations)} "
              f"min gap {rep.min_relative_gap:.4f} total {rep.total_norm:.4f}  [{steps}]")


if __name__ == "__main__":
    main()
