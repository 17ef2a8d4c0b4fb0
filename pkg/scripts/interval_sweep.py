"""Eigenvalues of (-1, 1) across s, with Pohozaev residuals.

    python3 scripts/interval_sweep.py --k 6 --N 64
"""

import argparse

import numpy as np

from fraclab import Interval, assemble_1d_spectral, pohozaev_residual, solve


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=int, default=6)
    ap.add_argument("--N", type=int, default=64)
    args = ap.parse_args()
    print(f"{'s':>5} " + " ".join(f"{'lambda' + str(k):>10}" for k in range(1, args.k + 1)) + "  max residual")
    for s in np.round(np.arange(0.1, 1.0, 0.1), 2):
        spec = solve(assemble_1d_spectral(s, args.N, Interval(-1, 1)), args.k)
        res = max(pohozaev_residual(spec, k) for k in range(1, args.k + 1))
        print(f"{s:5.2f} " + " ".join(f"{v:10.6f}" for v in spec.eigenvalues) + f"  {res:.1e}")


if __name__ == "__main__":
    main()
