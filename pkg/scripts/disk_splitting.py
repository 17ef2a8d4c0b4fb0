"""Splitting of the degenerate pair (lambda2, lambda3) on the unit disk.

For each boundary mode cos(k theta), sin(k theta) the script prints the
splitting matrix deviation and the Hadamard slopes next to finite differences.

    python3 scripts/disk_splitting.py --s 0.5 --h 0.0625
"""

import argparse

from fraclab import Problem, cluster, disk, hadamard_check, normal_mode, solve, splitting_matrix_domain


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--s", type=float, default=0.5)
    ap.add_argument("--h", type=float, default=1 / 16)
    ap.add_argument("--modes", type=int, nargs="+", default=[1, 2, 3, 4])
    args = ap.parse_args()
    p = Problem(disk(), args.s, "grid", h=args.h)
    spec = solve(p.operator, 6)
    pair = next(c for c in cluster(spec) if c.size == 2)
    print(f"cluster {pair.start + 1}..{pair.stop}: lambda = {spec.eigenvalues[pair.start:pair.stop]}")
    for k in args.modes:
        for kind in ("cos", "sin"):
            psi = normal_mode(p.domain, k, kind)
            M = splitting_matrix_domain(pair, spec, psi)
            rows = hadamard_check(p, psi, [pair.start + 1, pair.stop])
            fd = " ".join(f"{r['slope_fd']:+.4f}" for r in rows)
            print(f"  {kind}({k} theta): deviation {M.deviation:.4f}  slopes "
                  f"{' '.join(f'{v:+.4f}' for v in M.slopes)}  fd {fd}")


if __name__ == "__main__":
    main()
