"""Closed-form energy levels of the explicit bubbles.

Every number is computed twice: from a Beta-function closed form and by
adaptive quadrature of the radial integral.  The tests freeze these.

Yamabe point (p = q = 2*): w = c (1 + r^2)^{-(N-2)/2} solves -Lap w = w^{2*-1}
with c^{2*-2} = N(N-2); the system has v = w and J = (2/N) int w^{2*}.

Paneitz point (q = 2, p = 2N/(N-4)): w = c (1 + r^2)^{-(N-4)/2} solves
Lap^2 w = w^{p-1} with c^{p-2} = (N-4)(N-2)N(N+2); J = (2/N) int |Lap w|^2.
"""
import numpy as np
from scipy.integrate import quad
from scipy.special import beta

from nodal_lane_emden.discretize import sphere_area


def radial_integral(N, power):
    """int_{R^N} (1 + r^2)^{-power} dx."""
    closed = 0.5 * sphere_area(N) * beta(N / 2, power - N / 2)
    numeric = sphere_area(N) * quad(lambda r: r ** (N - 1) * (1 + r * r) ** -power, 0, np.inf)[0]
    return closed, numeric


def yamabe_level(N):
    star = 2 * N / (N - 2)
    c = (N * (N - 2)) ** (1 / (star - 2))
    closed, numeric = radial_integral(N, N)       # w^{2*} ~ (1 + r^2)^{-N}
    return 2 / N * c**star * closed, 2 / N * c**star * numeric


def paneitz_level(N):
    p = 2 * N / (N - 4)
    k = (N - 4) * (N - 2) * N * (N + 2)
    c = k ** (1 / (p - 2))
    # int |Lap w|^2 = int w Lap^2 w = int w^p
    closed, numeric = radial_integral(N, N)
    return 2 / N * c**p * closed, 2 / N * c**p * numeric


def main():
    print("int (1+r^2)^-4 over R^4:", radial_integral(4, 4), "pi^2/6 =", np.pi**2 / 6)
    print("int (1+r^2)^-5 over R^5:", radial_integral(5, 5), "pi^3/32 =", np.pi**3 / 32)
    for N in (4, 5, 6):
        print(f"Yamabe level N={N}:", yamabe_level(N))
    print("  N=4 closed form 16 pi^2/3 =", 16 * np.pi**2 / 3)
    for N in (5, 6):
        print(f"Paneitz level N={N}:", paneitz_level(N))


if __name__ == "__main__":
    main()
