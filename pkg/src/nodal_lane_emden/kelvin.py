"""Kelvin transform u_i(x) = |x|^{-2N/p} u(x/|x|^2) and the seminorm invariance test.

The map is an isometry of L^p for every p.  The q'-seminorm int |Lap u|^{q'}
is invariant only on the Yamabe and Paneitz branches q = 2* and q = 2;
elsewhere the composite operator Lap(|Lap u|^{q'-2} Lap u) applied to
|x|^alpha, the image of the constant 1, leaves a nonzero multiple of a power
of |x|.  The fixed profile of the map is |x|^(alpha/2).
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .discretize import Field, Grid, build_annulus
from .exponents import Exponents, hyperbola_complete, sobolev_star
from .functional import _padded_interpolator, signed_power

ANNULUS = (0.02, 50.0)
BUMP_CENTERS = (0.5, 1.0, 2.0)
HARMONIC_LOG_WIDTH = 2.5


@dataclass
class KelvinReport:
    N: int
    q: str
    alpha: float
    A: float
    B: float
    constant_C: float
    is_zero: bool
    isometry_defect: Optional[float] = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def _exact_zero(x) -> bool:
    if isinstance(x, Fraction):
        return x == 0
    return abs(float(x)) < 1e-12


def kelvin_constant(e: Exponents) -> KelvinReport:
    """alpha = -2N/p, A = alpha(N-2+alpha), B = (q'-1)(alpha-2) and
    C = |A|^{q'-2} A B (B+N-2), with C = 0 when A = 0.

    ``is_zero`` is decided on the exact factors A and B+N-2, so rational
    exponents give an exact answer.
    """
    N = e.N
    alpha = -2 * N / e.p
    A = alpha * (N - 2 + alpha)
    B = (e.qp - 1) * (alpha - 2)
    zero_A = _exact_zero(A)
    is_zero = zero_A or _exact_zero(B + N - 2)
    if zero_A:
        C = 0.0
    else:
        C = abs(float(A)) ** (float(e.qp) - 2) * float(A) * float(B) * float(B + N - 2)
    return KelvinReport(N, str(e.q), float(alpha), float(A), float(B), float(C), bool(is_zero))


def _inverted(grid: Grid) -> list:
    r = grid.radius
    if np.any(r == 0):
        raise ValueError("grid contains the origin; use an annulus")
    if grid.kind != "cartesian" and grid.inner == 0:
        raise ValueError("Kelvin transform needs an annulus grid (origin excluded)")
    return [c / r**2 for c in grid.mesh()]


def _field_at(u: Field, pts: list) -> np.ndarray:
    xs = np.stack([c.ravel() for c in pts], axis=1)
    g = u.grid
    if g.kind != "radial_1d" or g.inner == 0:
        return _padded_interpolator(u)(xs).reshape(pts[0].shape)
    # annulus nodes are cell centred: extrapolate the half cell next to
    # each edge, zero beyond the annulus
    interp = RegularGridInterpolator(g.axes, u.values, method="cubic", bounds_error=False,
                                     fill_value=None, solver_args={"atol": 1e-13, "rtol": 1e-13})
    r = xs[:, 0]
    out = np.where((r >= g.inner * (1 - 1e-12)) & (r <= g.extent * (1 + 1e-12)), interp(xs), 0.0)
    return out.reshape(pts[0].shape)


def kelvin_transform(u, e: Exponents, grid: Optional[Grid] = None) -> Field:
    """Sample |x|^{-2N/p} u(x/|x|^2) on ``grid``.

    ``u`` is a callable of the grid coordinate arrays (evaluated exactly) or
    a Field (cubic interpolation, zero outside its grid).
    """
    if isinstance(u, Field):
        grid = grid or u.grid
    if grid is None:
        raise ValueError("a callable needs a target grid")
    pts = _inverted(grid)
    amp = grid.radius ** (-2.0 * grid.N / float(e.p))
    if isinstance(u, Field):
        vals = _field_at(u, pts)
    else:
        vals = u(*pts)
    return Field(grid, amp * vals, e)


def bump(center: float, width: float = 0.4):
    """C-infinity radial bump supported in |r - c| < width * c."""
    def f(r):
        x = (np.asarray(r) - center) / (width * center)
        out = np.zeros_like(x, dtype=float)
        inside = np.abs(x) < 1
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - x[inside] ** 2))
        return out
    return f


def _smooth_step(x):
    x = np.clip(x, 0.0, 1.0)
    a = np.where(x > 0, np.exp(-1.0 / np.maximum(x, 1e-300)), 0.0)
    b = np.where(x < 1, np.exp(-1.0 / np.maximum(1.0 - x, 1e-300)), 0.0)
    return a / (a + b)


def harmonic_bump(center: float, N: int, log_width: float = HARMONIC_LOG_WIDTH):
    """(r/c)^{2-N} times a C-infinity bump in log(r/c) of half-width ``log_width``.

    The factor r^{2-N} is harmonic and its Kelvin image r^{alpha+N-2} is
    harmonic only on the invariant branches, so this profile probes the
    seminorm defect more sharply than a plain bump.
    """
    def f(r):
        r = np.asarray(r, dtype=float)
        t = np.log(r / center) / log_width
        return _smooth_step(t + 1.0) * _smooth_step(1.0 - t) * (r / center) ** (2.0 - N)
    return f


def test_family(N: int, centers=BUMP_CENTERS) -> list:
    """Plain bumps and harmonic bumps at each center."""
    return [bump(c) for c in centers] + [harmonic_bump(c, N) for c in centers]


class LogProfileGrid:
    """Uniform grid in t = log r on an annulus, for radial profiles.

    Inversion r -> 1/r is t -> -t, so a profile and its Kelvin image are
    resolved equally well.  Lap f = r^{-2} (f_tt + (N-2) f_t) with
    fourth-order differences; integrals use the trapezoid rule in t, which
    is spectrally accurate for profiles vanishing near both ends.
    """

    def __init__(self, N: int, annulus=ANNULUS, resolution: int = 512):
        if not 0 < annulus[0] < annulus[1]:
            raise ValueError("annulus must satisfy 0 < r_in < r_out")
        if resolution < 16:
            raise ValueError("resolution must be >= 16")
        self.N = N
        self.t = np.linspace(np.log(annulus[0]), np.log(annulus[1]), resolution)
        self.dt = self.t[1] - self.t[0]
        self.r = np.exp(self.t)

    def laplacian(self, f: np.ndarray) -> np.ndarray:
        g = np.concatenate([np.zeros(2), f, np.zeros(2)])
        d1 = (g[:-4] - 8 * g[1:-3] + 8 * g[3:-1] - g[4:]) / (12 * self.dt)
        d2 = (-g[:-4] + 16 * g[1:-3] - 30 * g[2:-2] + 16 * g[3:-1] - g[4:]) / (12 * self.dt**2)
        return (d2 + (self.N - 2) * d1) / self.r**2

    def integrate(self, f: np.ndarray) -> float:
        from .discretize import sphere_area

        return float(sphere_area(self.N) * np.sum(f * self.r**self.N) * self.dt)

    def seminorm(self, f: np.ndarray, qp: float) -> float:
        return self.integrate(np.abs(self.laplacian(f)) ** qp) ** (1.0 / qp)

    def lp(self, f: np.ndarray, p: float) -> float:
        return self.integrate(np.abs(f) ** p) ** (1.0 / p)


def radial_kelvin(profile, e: Exponents):
    """Radial profile r -> r^{-2N/p} f(1/r)."""
    alpha = -2.0 * e.N / float(e.p)
    return lambda r: np.asarray(r, dtype=float) ** alpha * profile(1.0 / np.asarray(r, dtype=float))


def isometry_defect(e: Exponents, resolution: int = 512, centers=BUMP_CENTERS,
                    annulus=ANNULUS, per_profile: bool = False):
    """max over the test family of | |Lap u_i|_{q'} / |Lap u|_{q'} - 1 |.

    Radial-profile quadrature on a log-radius grid over the annulus; the
    profiles and their images stay inside it.  The ratio is dilation
    invariant, so profiles of one shape give one value whatever the center.
    """
    if len(centers) < 3:
        raise ValueError("need at least three test profiles")
    g = LogProfileGrid(e.N, annulus, resolution)
    qp = float(e.qp)
    out = []
    for b in test_family(e.N, centers):
        base = g.seminorm(b(g.r), qp)
        if base == 0:
            continue
        out.append(abs(g.seminorm(radial_kelvin(b, e)(g.r), qp) / base - 1.0))
    if not out:
        raise ValueError("all test profiles have vanishing seminorm")
    return out if per_profile else max(out)


def lp_isometry_defect(e: Exponents, resolution: int = 512, centers=BUMP_CENTERS,
                       annulus=ANNULUS) -> float:
    """max over bumps of | |u_i|_p / |u|_p - 1 |; small for every q."""
    g = LogProfileGrid(e.N, annulus, resolution)
    p = float(e.p)
    return max(abs(g.lp(radial_kelvin(b, e)(g.r), p) / g.lp(b(g.r), p) - 1.0)
               for b in test_family(e.N, centers))


@dataclass
class OperatorFit:
    power: float
    constant: float
    predicted_power: float
    predicted_constant: float

    @property
    def power_error(self) -> float:
        return abs(self.power - self.predicted_power) / max(abs(self.predicted_power), 1.0)

    @property
    def constant_error(self) -> float:
        return abs(self.constant - self.predicted_constant) / abs(self.predicted_constant)


def operator_fit(e: Exponents, annulus=(0.5, 2.0), resolution: int = 2048, trim: int = 8) -> OperatorFit:
    """Fit L(u) = Lap(|Lap u|^{q'-2} Lap u) on u = |x|^alpha to C |x|^beta.

    The discrete operator is applied on an annulus; ``trim`` nodes at each
    end are dropped because the ghost values there are not those of the
    power law.
    """
    rep = kelvin_constant(e)
    if rep.A == 0:
        raise ValueError("A = 0: Lap |x|^alpha vanishes and there is nothing to fit")
    grid = build_annulus(e.N, annulus[0], annulus[1], resolution)
    L = grid.laplacian_matrix
    r = grid.radius.ravel()
    u = r ** rep.alpha
    w = signed_power(L @ u, float(e.qp))
    out = L @ w
    sl = slice(trim, r.size - trim)
    rr, oo = r[sl], out[sl]
    if not (np.all(oo > 0) or np.all(oo < 0)):
        raise ValueError("operator output changes sign on the annulus")
    slope, icpt = np.polyfit(np.log(rr), np.log(np.abs(oo)), 1)
    beta = (float(e.qp) - 1) * (rep.alpha - 2) - 2
    return OperatorFit(float(slope), float(np.sign(oo[0]) * np.exp(icpt)), beta, rep.constant_C)


def rational_sweep(N: int, count: int = 50) -> list:
    """``count`` exact hyperbola points for dimension N, always including
    q = 2* and (for N >= 5) q = 2."""
    lo = Fraction(N, N - 2)
    special = [sobolev_star(N)] + ([Fraction(2)] if N >= 5 else [])
    qs = list(special)
    k = 1
    while len(qs) < count:
        for cand in (lo + Fraction(k, 7), lo + Fraction(11 * k, 3)):
            if cand not in qs and len(qs) < count:
                qs.append(cand)
        k += 1
    return [hyperbola_complete(N, q=q) for q in qs]


def zero_locus_sweep(dims=range(4, 11), count: int = 50) -> list:
    """Rows (N, q, is_zero, expected) over the rational sweep."""
    rows = []
    for N in dims:
        star = sobolev_star(N)
        for e in rational_sweep(N, count):
            expected = e.q == star or e.q == 2
            rows.append((N, e.q, kelvin_constant(e).is_zero, expected))
    return rows
