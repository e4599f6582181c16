"""The energy J(u) = (1/q') int |Lap u|^q' - (1/p) int |u|^p and friends."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.optimize import minimize_scalar

from .discretize import Field, Grid
from .exponents import Exponents


@dataclass
class EnergyReport:
    seminorm_qp: float   # int |Lap u|^q'
    lp_norm_p: float     # int |u|^p
    energy: float
    nehari_defect: float
    quotient: float

    def to_json(self, **extra) -> str:
        return json.dumps({**asdict(self), **extra}, indent=2)


def signed_power(a: np.ndarray, e: float, eps: float = 0.0) -> np.ndarray:
    """|a|^(e-1) a, or (a^2 + eps^2)^((e-1)/2) a when eps > 0."""
    if eps > 0:
        return (a * a + eps * eps) ** ((e - 1) / 2) * a
    return np.sign(a) * np.abs(a) ** (e - 1)


class EnergyModel:
    """Flat-array evaluation of J and J' on one grid, shared by the solver."""

    def __init__(self, grid: Grid, exponents: Exponents):
        self.grid = grid
        self.exponents = exponents
        self.p, self.q, self.qp, self.pp = exponents.floats
        self.L = grid.laplacian_matrix
        self.LT = self.L.T.tocsr()
        self.w = grid.weights.ravel()
        self.support = grid.support.ravel()

    def norms(self, u: np.ndarray, eps: float = 0.0):
        Lu = self.L @ u
        if eps > 0:
            a = np.sum(self.w * ((Lu * Lu + eps * eps) ** (self.qp / 2) - eps**self.qp))
        else:
            a = np.sum(self.w * np.abs(Lu) ** self.qp)
        b = np.sum(self.w * np.abs(u) ** self.p)
        return float(a), float(b), Lu

    def energy(self, u: np.ndarray, eps: float = 0.0) -> float:
        a, b, _ = self.norms(u, eps)
        return a / self.qp - b / self.p

    def report(self, u: np.ndarray) -> EnergyReport:
        a, b, _ = self.norms(u)
        quotient = a / b ** (self.qp / self.p) if b > 0 else float("inf")
        return EnergyReport(a, b, a / self.qp - b / self.p, a - b, quotient)

    def gradient(self, u: np.ndarray, eps: float = 0.0, Lu=None) -> np.ndarray:
        """Riesz representative of J'(u) in the weighted inner product."""
        if Lu is None:
            Lu = self.L @ u
        flux = signed_power(Lu, self.qp, eps)
        g = (self.LT @ (self.w * flux)) / self.w - signed_power(u, self.p)
        return np.where(self.support, g, 0.0)

    def nehari_scale(self, u: np.ndarray) -> float:
        a, b, _ = self.norms(u)
        if a <= 0 or b <= 0:
            raise ValueError("nehari_scale needs a nonzero field")
        return (a / b) ** (1.0 / (self.p - self.qp))


def _model(u: Field) -> EnergyModel:
    if u.exponents is None:
        raise ValueError("field carries no exponents")
    return EnergyModel(u.grid, u.exponents)


def energy(u: Field) -> EnergyReport:
    return _model(u).report(u.values.ravel())


def gradient(u: Field, eps_reg: float = 0.0) -> Field:
    """g = W^{-1} L^T W (|Lu|^{q'-2} Lu) - |u|^{p-2} u on free nodes, 0 elsewhere."""
    g = _model(u).gradient(u.values.ravel(), eps_reg)
    return u.with_values(g, equivariant=False)


def nehari_scale(u: Field) -> float:
    """t* with ||t u||_{q'}^{q'} = |t u|_p^p; the maximiser of t -> J(t u)."""
    return _model(u).nehari_scale(u.values.ravel())


def nehari_project(u: Field) -> Field:
    return u.with_values(nehari_scale(u) * u.values)


def inner(f: Field, g: Field) -> float:
    return float(np.sum(f.values * g.values * f.grid.weights))


# ------------------------------------------------------------------ rescaling

def _padded_interpolator(f: Field) -> RegularGridInterpolator:
    g = f.grid
    axes, vals = [], f.values
    for k, x in enumerate(g.axes):
        if g.kind == "cartesian" or g.inner > 0:
            axes.append(x)
            continue
        # mirror node at -h/2 (even reflection) and a zero node one step out
        h = g.spacings[k]
        axes.append(np.concatenate([[-x[0]], x, [x[-1] + h]]))
        first = np.take(vals, [0], axis=k)
        zero = np.zeros_like(first)
        vals = np.concatenate([first, vals, zero], axis=k)
    # the spline system is solved iteratively; the default tolerance leaves
    # errors near 1e-5 at the nodes themselves
    return RegularGridInterpolator(axes, vals, method="cubic", bounds_error=False, fill_value=0.0,
                                   solver_args={"atol": 1e-13, "rtol": 1e-13})


def rescale(u, eps: float, xi=None, *, grid: Grid | None = None,
            exponents: Exponents | None = None, spec=None) -> Field:
    """x -> eps^(-N/p) u((x - xi)/eps), sampled on ``grid``.

    ``u`` is a Field (interpolated, cubic) or a callable taking the grid's
    coordinate arrays.  ``xi`` must be a fixed point of the group so that
    equivariance survives; on reduced or radial grids only xi = 0 exists.
    The result vanishes off the grid's support (clamped boundary).
    """
    if eps <= 0:
        raise ValueError("dilation factor must be positive")
    if isinstance(u, Field):
        grid = grid or u.grid
        exponents = exponents or u.exponents
        spec = spec or u.symmetry
    if grid is None or exponents is None:
        raise ValueError("need a target grid and exponents")
    N = grid.N
    xi = np.zeros(N) if xi is None else np.asarray(xi, dtype=float)
    if spec is not None:
        from .symmetry import is_fixed_point

        if not is_fixed_point(spec, xi):
            raise ValueError(f"xi={xi.tolist()} is not a fixed point of the group")
    if grid.kind != "cartesian" and np.any(xi != 0):
        raise ValueError("reduced and radial grids only represent xi = 0")
    amp = eps ** (-N / float(exponents.p))
    coords = grid.mesh()
    if grid.kind == "cartesian":
        coords = [c - xi[k] for k, c in enumerate(coords)]
    coords = [c / eps for c in coords]
    if isinstance(u, Field):
        interp = _padded_interpolator(u)
        vals = amp * interp(np.stack([c.ravel() for c in coords], axis=1)).reshape(grid.shape)
        return Field(grid, np.where(grid.support, vals, 0.0), exponents, spec, u.equivariant, dict(u.meta))
    return Field(grid, np.where(grid.support, amp * u(*coords), 0.0), exponents, spec)


# ------------------------------------------------------- monotonicity (A.1)

# minima of the (A.1) ratio from the oracle in scripts/monotonicity_oracle.py
RECORDED_C0 = {1.2: 0.4552580741, 1.5: 0.8660254038, 2.0: 1.0, 3.0: 0.5, 4.0: 0.25}
C0_MARGIN = 0.99


def _ratio_terms(s, t, qp):
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    lhs = (signed_power(s, qp) - signed_power(t, qp)) * (s - t)
    d = np.abs(s - t)
    if qp >= 2:
        base = d**qp
    else:
        base = d**2 / (np.abs(s) ** qp + np.abs(t) ** qp + 1) ** (2 - qp)
    return lhs, base


@lru_cache(maxsize=None)
def monotonicity_constant(qp: float) -> float:
    """Infimum over (s, t) of lhs / base for the two-regime inequality."""
    if qp <= 1:
        raise ValueError("q' must exceed 1")
    if qp >= 2:
        # degree-0 homogeneous: s = 1, t = x in [-1, 1)
        def f(x):
            return (1 - signed_power(np.array(x), qp)) / abs(1 - x) ** (qp - 1)

        xs = np.linspace(-1, 0.999, 4000)
        vals = np.array([f(x) for x in xs])
        x0 = xs[np.argmin(vals)]
        res = minimize_scalar(f, bounds=(max(-1, x0 - 1e-3), min(0.9999, x0 + 1e-3)), method="bounded")
        return float(min(res.fun, vals.min()))

    # 1 < q' < 2: the infimum is approached along s = t
    def diag(x):
        return (qp - 1) * x ** (qp - 2) * (2 * x**qp + 1) ** (2 - qp)

    res = minimize_scalar(diag, bounds=(1e-8, 1e3), method="bounded", options={"xatol": 1e-12})
    rho = np.exp(np.linspace(-8, 8, 801))
    ang = np.linspace(0, 2 * np.pi, 1601)
    R, A = np.meshgrid(rho, ang)
    S, T = R * np.cos(A), R * np.sin(A)
    off = np.abs(S - T) > 1e-6 * np.maximum(np.abs(S), np.abs(T))
    lhs, base = _ratio_terms(S[off], T[off], qp)
    return float(min(res.fun, np.min(lhs / base)))


def monotonicity_gap(s, t, qp: float, C0: float | None = None):
    """Return (lhs, rhs_bound) for the two-regime monotonicity inequality.

    rhs_bound uses the certified constant C0_MARGIN * (sharp constant) unless
    ``C0`` is given; callers assert lhs >= rhs_bound.
    """
    if qp <= 1:
        raise ValueError("q' must exceed 1")
    if C0 is None:
        key = round(float(qp), 12)
        sharp = RECORDED_C0.get(key)
        if sharp is None:
            sharp = monotonicity_constant(float(qp))
        C0 = C0_MARGIN * sharp
    lhs, base = _ratio_terms(s, t, qp)
    return lhs, C0 * base
