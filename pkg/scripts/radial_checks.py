"""Radial ground-state checks at the Yamabe and Paneitz points.

Prints the converged energy against the bubble level, the core agreement of
v with u at the Yamabe point as the domain grows in bubble units, the
dilation family energies and a short continuation sweep in N = 5.
"""
import argparse
from fractions import Fraction

import numpy as np

from nodal_lane_emden.discretize import build_grid
from nodal_lane_emden.exponents import hyperbola_complete
from nodal_lane_emden.functional import energy, nehari_scale, rescale
from nodal_lane_emden.solver import SolveConfig, continuation_sweep, ground_state_radial

YAMABE_N4 = 16 * np.pi**2 / 3
PANEITZ_N5 = 130.27055245823175


def nehari_energy(f):
    return energy(f.with_values(nehari_scale(f) * f.values)).energy


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--skip-large", action="store_true", help="omit the R = 320 run")
    args = ap.parse_args()

    e4 = hyperbola_complete(4, q=4)
    r = ground_state_radial(SolveConfig(e4, None, R=20.0, resolution=2000))
    print(f"Yamabe N=4   J = {r.energy:.10f}  J/J* = {r.energy / YAMABE_N4:.5f}  converged {r.converged}")
    big = build_grid("radial_1d", 4, 0, 40.0, 4000)
    for eps, grid in ((0.5, None), (2.0, big)):
        ratio = nehari_energy(rescale(r.field, eps, grid=grid)) / r.energy
        print(f"  dilation eps={eps}: J ratio {ratio:.5f}")

    print("v/u on r < 2 rho0 (clamped tail perturbs it like (rho0/R)^{4/3})")
    sizes = [(20.0, 2000), (80.0, 8000), (160.0, 16000)] + ([] if args.skip_large else [(320.0, 32000)])
    for R, n in sizes:
        s = ground_state_radial(SolveConfig(e4, None, R=R, resolution=n, gauge_radius=0.447))
        u, v, rr = s.field.values, s.v.values, s.field.grid.radius
        core = rr < 2 * 0.447
        print(f"  R={R:6.1f} n={n:6d}  R/rho0={R / 0.447:6.1f}  max|v/u-1| = {np.abs(v[core] / u[core] - 1).max():.2e}"
              f"  J/J* = {s.energy / YAMABE_N4:.5f}")

    e5 = hyperbola_complete(5, q=2)
    base = SolveConfig(e5, None, R=20.0, resolution=2000, gauge_radius=0.1)
    p = ground_state_radial(base)
    print(f"Paneitz N=5  J = {p.energy:.10f}  J/J* = {p.energy / PANEITZ_N5:.5f}  converged {p.converged}")
    print("sweep N=5")
    for row in continuation_sweep(base, [Fraction(2), Fraction(7, 3), Fraction(3)]):
        print(f"  q={str(row.exponents.q):>4}  p={str(row.exponents.p):>5}  J = {row.result.energy:.6f}"
              f"  converged {row.converged}")


if __name__ == "__main__":
    main()
