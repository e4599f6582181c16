"""Sign-changing G_1 benchmark at N = 4, p = q = 4 on bi-radial grids.

Each (R, resolution) pair is solved from the biradial seed; the table lists
energy, its ratio to the Yamabe level, the system residuals, the identity
defect and timing.  The defaults reproduce the refinement (R fixed, h
halved) and domain (R doubled, h fixed) comparisons; expect several
minutes for the 512 runs.
"""
import argparse
import time

import numpy as np

from nodal_lane_emden.exponents import hyperbola_complete
from nodal_lane_emden.inversion import inversion_defect, second_component, system_residual
from nodal_lane_emden.solver import SolveConfig, minimize_equivariant
from nodal_lane_emden.symmetry import SymmetrySpec

YAMABE_N4 = 16 * np.pi**2 / 3


def parse(text):
    R, n = text.split(":")
    return float(R), int(n)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("runs", nargs="*", default=["16:128", "16:256", "16:512", "32:512"], help="R:resolution")
    ap.add_argument("--gauge-radius", type=float, default=1.0)
    args = ap.parse_args()
    e = hyperbola_complete(4, q=4)
    print(f"{'R':>5} {'n':>5} {'J':>14} {'J/J*':>8} {'residual_1':>11} {'pointwise':>10} "
          f"{'identity':>9} {'newton':>6} {'time':>7}")
    for R, n in map(parse, args.runs):
        t0 = time.perf_counter()
        r = minimize_equivariant(SolveConfig(e, SymmetrySpec(4, 1), R=R, resolution=n,
                                             gauge_radius=args.gauge_radius))
        dt = time.perf_counter() - t0
        r1 = system_residual(r.field, r.v)[0]
        r1p = system_residual(r.field)[0]
        idef = inversion_defect(r.field, second_component(r.field))
        print(f"{R:5.0f} {n:5d} {r.energy:14.8f} {r.energy / YAMABE_N4:8.4f} {r1:11.3e} {r1p:10.3e} "
              f"{idef:9.1e} {r.newton_steps:6d} {dt:6.0f}s" + ("" if r.converged else "  NOT CONVERGED"))


if __name__ == "__main__":
    main()
