"""Kelvin constants and seminorm isometry defects under refinement.

For each hyperbola point the table lists alpha, A, B, the composite constant
C and the isometry defect of the test family at increasing log-grid
resolution.  Invariant branches (q = 2, q = 2*) shrink to round-off; other
points settle at a positive value.  ``--per-profile`` splits the defect into
the plain bumps and the harmonic bumps.
"""
import argparse

from nodal_lane_emden.exponents import hyperbola_complete, sobolev_star
from nodal_lane_emden.kelvin import isometry_defect, kelvin_constant, lp_isometry_defect

DEFAULT_POINTS = ["5:2", "6:3", "6:4", "5:3", "4:4", "7:1.75"]


def parse_point(text):
    N, q = text.split(":")
    return hyperbola_complete(int(N), q=q)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("points", nargs="*", default=DEFAULT_POINTS, help="N:q pairs")
    ap.add_argument("--resolutions", type=int, nargs="*", default=[512, 1024, 2048, 4096])
    ap.add_argument("--per-profile", action="store_true")
    args = ap.parse_args()
    head = " ".join(f"{'n=' + str(n):>11}" for n in args.resolutions)
    print(f"{'N':>2} {'q':>6} {'alpha':>8} {'A':>8} {'B':>8} {'C':>10} {'Lp':>8} {head}")
    for text in args.points:
        e = parse_point(text)
        rep = kelvin_constant(e)
        defects = [isometry_defect(e, n) for n in args.resolutions]
        tag = " (2*)" if e.q == sobolev_star(e.N) else ""
        print(f"{e.N:>2} {str(e.q):>6} {rep.alpha:8.4f} {rep.A:8.4f} {rep.B:8.4f} {rep.constant_C:10.4f} "
              f"{lp_isometry_defect(e):8.1e} " + " ".join(f"{d:11.3e}" for d in defects) + tag)
        if args.per_profile:
            per = isometry_defect(e, args.resolutions[-1], per_profile=True)
            half = len(per) // 2
            print(f"{'':>2} {'':>6} plain bumps {max(per[:half]):.4e}, harmonic bumps {max(per[half:]):.4e}")


if __name__ == "__main__":
    main()
