"""Minimise the two-regime monotonicity ratio and print the C0 table.

The printed values are the ones frozen in functional.RECORDED_C0.
For q' >= 2 the ratio is 0-homogeneous, so it is scanned on s = 1,
t in [-1, 1); for 1 < q' < 2 the infimum sits on the diagonal s = t and
is cross-checked against a polar (s, t) grid.
"""
import argparse

from nodal_lane_emden.functional import RECORDED_C0, monotonicity_constant


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--qp", type=float, nargs="*", default=sorted(RECORDED_C0))
    args = ap.parse_args()
    print(f"{'qp':>6} {'C0 (oracle)':>16} {'recorded':>14}")
    for qp in args.qp:
        c0 = monotonicity_constant(qp)
        rec = RECORDED_C0.get(round(qp, 12))
        print(f"{qp:6.3g} {c0:16.10f} {rec if rec is not None else '-':>14}")


if __name__ == "__main__":
    main()
