"""Least-energy solutions on the (equivariant) Nehari set.

Each iteration takes a preconditioned descent step inside the space of
phi-equivariant fields, restores the dilation gauge, rescales onto the
Nehari set and accepts the step only if the energy decreases (Armijo
backtracking).

The continuum problem is dilation invariant, but a fixed grid is not: the
discrete energy keeps dropping as a profile concentrates, and an
unconstrained discrete minimiser collapses onto a few cells.  The solver
therefore fixes the dilation gauge with the 0-homogeneous constraint

    C(u) = int m(|x|/rho0) |u|^p / int |u|^p = 1/2,   m(x) = x^4/(1+x^4),

which every profile meets after a suitable dilation, so the level is
unchanged while the discrete minimiser stays at scale rho0.

Preconditioners (metric M for the direction d = M^{-1} grad):
  lagged       B^T L^T W D(u) L B, D = (q'-1)(|Lu|^2+eps^2)^{(q'-2)/2}, refactored
               every ``refactor_every`` steps (lagged-diffusivity metric)
  bilaplacian  B^T L^T W L B, factored once
  none         B^T W B, the plain quadrature metric
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spl
from scipy.optimize import brentq

from .discretize import Field, Grid, build_grid, load_field
from .exponents import Exponents, hyperbola_complete
from .functional import EnergyModel, EnergyReport, rescale, signed_power
from .symmetry import SymmetrySpec, equivariant_basis, symmetrize_values

log = logging.getLogger(__name__)

SEEDS = ("biradial_seed", "biradial_ring", "radial_seed", "file")
GAUGE_TARGET = 0.5


@dataclass
class SolveConfig:
    exponents: Exponents
    symmetry: Optional[SymmetrySpec] = None      # None: radial ground state
    R: float = 8.0
    resolution: int = 128
    gauge_radius: Optional[float] = None          # default sqrt(h R)
    seeds: Sequence[str] = ("biradial_seed",)
    init_path: Optional[str] = None
    step_initial: float = 1.0
    backtrack: float = 0.5
    max_iterations: int = 400
    energy_rel_tol: float = 1e-9
    residual_tol: float = 1e-6
    window: int = 50
    eps_reg_start: float = 1e-2
    eps_reg_decay: float = 0.1
    eps_reg_min: float = 1e-16
    preconditioner: str = "lagged"
    refactor_every: int = 1
    newton_steps: int = 20

    def __post_init__(self):
        for name in ("R", "step_initial", "energy_rel_tol", "residual_tol", "eps_reg_start"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack factor must lie in (0, 1)")
        if self.max_iterations < 1 or self.window < 1 or self.refactor_every < 1 or self.newton_steps < 0:
            raise ValueError("iteration counts must be positive")
        if self.preconditioner not in ("lagged", "bilaplacian", "none"):
            raise ValueError(f"unknown preconditioner {self.preconditioner!r}")
        for s in self.seeds:
            if s not in SEEDS:
                raise ValueError(f"unknown seed {s!r}")
        if self.gauge_radius is not None and not 0 < self.gauge_radius < self.R:
            raise ValueError("gauge radius must lie in (0, R)")
        self.seeds = tuple(self.seeds)

    @property
    def rho0(self) -> float:
        """Gauge radius.  The default sqrt(h R) sends both the truncation error
        (rho0/R) and the discretization error (h/rho0) to zero under refinement."""
        if self.gauge_radius is not None:
            return self.gauge_radius
        return self.R / np.sqrt(self.resolution)

    def grid_kind(self) -> str:
        spec = self.symmetry
        if spec is None or spec.j == 0:
            return "radial_1d"
        if spec.j == 1:
            return "biradial_2d" if spec.N == 4 else "biradial_radial_3d"
        return "cartesian"

    def build_grid(self) -> Grid:
        if self.grid_kind() != "cartesian" and self.resolution < 16:
            raise ValueError("resolution must be >= 16")
        j = self.symmetry.j if self.symmetry is not None else 0
        return build_grid(self.grid_kind(), self.exponents.N, j, self.R, self.resolution)

    def as_dict(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out["exponents"] = self.exponents.as_dict()
        out["symmetry"] = self.symmetry.as_dict() if self.symmetry is not None else None
        out["seeds"] = list(self.seeds)
        return out


@dataclass
class SolveResult:
    field: Field
    report: EnergyReport
    trace: list
    residual: float                 # relative Euler-Lagrange residual
    tangential_residual: float      # same, with the gauge multiplier removed
    gauge_multiplier: float
    sign_change: bool
    converged: bool
    iterations: int
    message: str
    seed: str = ""
    wall_time: float = 0.0
    system_merit: float = float("nan")   # mixed-form residual after the Newton polish
    newton_steps: int = 0
    v: Optional[Field] = None            # second component carried by the mixed Newton polish

    @property
    def energy(self) -> float:
        return self.report.energy

    def metrics(self) -> dict:
        return {
            **self.report.__dict__, "residual": self.residual,
            "tangential_residual": self.tangential_residual,
            "gauge_multiplier": self.gauge_multiplier, "sign_change": self.sign_change,
            "converged": self.converged, "iterations": self.iterations,
            "message": self.message, "seed": self.seed, "system_merit": self.system_merit,
            "newton_steps": self.newton_steps,
        }


def has_sign_change(u: np.ndarray, floor: float = 1e-10) -> bool:
    thr = floor * np.abs(u).max() if u.size else 0.0
    return bool(u.max() > thr and u.min() < -thr)


# ---------------------------------------------------------------- seeds

def _cutoff(r: np.ndarray, R: float) -> np.ndarray:
    """C-infinity step: 1 for r <= 0.6 R, 0 for r >= 0.9 R."""
    x = np.clip((r / R - 0.6) / 0.3, 0.0, 1.0)
    a = np.where(x < 1, np.exp(-1.0 / np.maximum(1 - x, 1e-300)), 0.0)
    b = np.where(x > 0, np.exp(-1.0 / np.maximum(x, 1e-300)), 0.0)
    return a / (a + b)


def _seed_profile(kind: str, grid: Grid, spec: Optional[SymmetrySpec], ell: float) -> np.ndarray:
    """Seeds P(x) (1 + |x|^2/ell^2)^(-a) times a cutoff near the boundary.

    P is 1 (radial) or the product over blocks of |z1|^2 - |z2|^2, which is
    harmonic of degree 2j.  With a = (N-2)/2 + 2j the Laplacian of the seed
    has the sign of -P everywhere, the sign pattern of the solutions, so
    the only zeros of the Laplacian sit in the cutoff layer.  Seeds with
    spurious zeros stall the lagged metric, whose weight blows up there.
    """
    X = grid.mesh()
    rho2 = grid.radius**2 / ell**2
    chi = _cutoff(grid.radius, grid.extent)
    N = grid.N
    if kind == "radial_seed":
        return (1 + rho2) ** (-(N - 2) / 2) * chi
    if grid.reduced:
        s, t = X[0] / ell, X[1] / ell
        poly, j = s**2 - t**2, 1
    elif grid.kind == "cartesian":
        poly, j = np.ones(grid.shape), spec.j
        for b in range(j):
            poly = poly * ((X[4 * b]**2 + X[4 * b + 1]**2) - (X[4 * b + 2]**2 + X[4 * b + 3]**2)) / ell**2
    else:
        raise ValueError(f"seed {kind!r} needs a reduced or Cartesian grid")
    a = (N - 2) / 2 + 2 * j
    if kind == "biradial_ring":
        return poly * np.exp(-rho2) * chi
    return poly * (1 + rho2) ** (-a) * chi


class _Gauge:
    def __init__(self, grid: Grid, p: float, rho0: float):
        x = grid.radius.ravel() / rho0
        self.m = x**4 / (1 + x**4)
        self.w = grid.weights.ravel()
        self.p = p

    def _density(self, u):
        # C is scale invariant; normalizing first keeps trial steps from overflowing
        a = np.abs(u)
        top = a.max()
        return self.w * (a / top) ** self.p if top > 0 else self.w * a

    def value(self, u):
        dens = self._density(u)
        return float(np.sum(dens * self.m) / np.sum(dens))

    def grad(self, u):
        """Euclidean gradient of C with respect to node values."""
        top = np.abs(u).max()
        if top == 0:
            return np.zeros_like(u)
        x = u / top                           # grad C is homogeneous of degree -1
        dens = self.w * np.abs(x) ** self.p
        S = np.sum(dens)
        C = np.sum(dens * self.m) / S
        return self.p * self.w * signed_power(x, self.p) * (self.m - C) / S / top


# ---------------------------------------------------------------- core loop

class _Descent:
    def __init__(self, cfg: SolveConfig, grid: Grid, spec: Optional[SymmetrySpec]):
        self.cfg = cfg
        self.grid = grid
        self.spec = spec
        self.model = EnergyModel(grid, cfg.exponents)
        self.gauge = _Gauge(grid, self.model.p, cfg.rho0)
        sym = spec if (spec is not None and spec.j >= 1) else None
        self.B = equivariant_basis(grid, sym, mask=grid.support.ravel()).tocsc()
        if self.B.shape[1] == 0:
            raise ValueError("no nonzero equivariant field on this grid")
        self.BT = self.B.T.tocsr()
        self.LB = (self.model.L @ self.B).tocsc()
        self.LBT = self.LB.T.tocsr()
        self.w = self.model.w
        self.factor = None
        self.eps_rel = cfg.eps_reg_start
        self.since_refactor = 0

    # coordinates a <-> fields u = B a
    def field_of(self, a):
        return self.B @ a

    def coords_of(self, u):
        return self.BT @ u  # B has orthonormal columns

    def refactor(self, a):
        u = self.field_of(a)
        kind = self.cfg.preconditioner
        if kind == "none":
            M = (self.BT @ sp.diags(self.w) @ self.B).tocsc()
        else:
            if kind == "bilaplacian":
                if self.factor is not None:
                    return
                D = np.ones_like(self.w)
            else:
                Lu = self.model.L @ u
                eps = max(self.eps_rel, self.cfg.eps_reg_min) * max(np.abs(Lu).max(), 1e-300)
                # (q'-1) makes this the Hessian of the principal part at eps = 0
                D = (self.model.qp - 1) * (Lu * Lu + eps * eps) ** ((self.model.qp - 2) / 2)
                self.eps_rel = max(self.eps_rel * self.cfg.eps_reg_decay, self.cfg.eps_reg_min)
            M = (self.LBT @ sp.diags(self.w * D) @ self.LB).tocsc()
        self.factor = spl.splu(M)
        self.since_refactor = 0

    def solve(self, rhs):
        return self.factor.solve(rhs)

    def euclid_grad(self, a, u=None):
        u = self.field_of(a) if u is None else u
        g = self.model.gradient(u)
        return self.BT @ (self.w * g), g

    def restore_gauge(self, a, z):
        """Move along z until C = 1/2 (Newton, bracketed fallback)."""
        def c_of(lam):
            return self.gauge.value(self.field_of(a + lam * z)) - GAUGE_TARGET

        c0 = c_of(0.0)
        if abs(c0) < 1e-14:
            return a
        lam = 0.0
        for _ in range(30):
            u = self.field_of(a + lam * z)
            if not np.all(np.isfinite(u)):
                break
            c = self.gauge.value(u) - GAUGE_TARGET
            if abs(c) < 1e-14:
                return a + lam * z
            dc = float(self.BT @ self.gauge.grad(u) @ z)
            if dc == 0 or not np.isfinite(dc):
                break
            lam -= c / dc
        # bracket search
        scale = 1e-3
        for _ in range(30):
            lo, hi = -scale, scale
            if np.sign(c_of(lo)) != np.sign(c_of(hi)):
                lam = brentq(c_of, lo, hi, xtol=1e-15, rtol=1e-15)
                return a + lam * z
            scale *= 2
        raise RuntimeError("could not restore the dilation gauge")

    def nehari(self, a):
        return self.model.nehari_scale(self.field_of(a)) * a

    def residuals(self, a):
        u = self.field_of(a)
        g = self.model.gradient(u)
        c = self.gauge.grad(u) / self.w            # weighted Riesz form of C'
        c = np.where(self.model.support, c, 0.0)
        wc = self.w * c
        mu = float(np.dot(g, wc) / np.dot(c, wc)) if np.dot(c, wc) > 0 else 0.0
        f = signed_power(u, self.model.p)
        pp = self.model.pp
        denom = np.sum(self.w * np.abs(f) ** pp) ** (1 / pp)
        full = np.sum(self.w * np.abs(g) ** pp) ** (1 / pp) / denom
        tang = np.sum(self.w * np.abs(g - mu * c) ** pp) ** (1 / pp) / denom
        return float(full), float(tang), mu

    # ------------------------------------------------------------ Newton
    def _newton_parts(self, a, b, mu, mixed):
        """Residual blocks and Jacobian of the gauge-constrained Euler-Lagrange system."""
        m = self.model
        p, q, qp = m.p, m.q, m.qp
        w = self.w
        u = self.field_of(a)
        Lu = m.L @ u
        f = signed_power(u, p)
        gC = self.gauge.grad(u)
        S = np.sum(w * np.abs(u) ** p)
        C = self.gauge.value(u)
        dC = p * (p - 1) * w * np.abs(u) ** (p - 2) * (self.gauge.m - C) / S
        e = self.BT @ gC
        if mixed:
            v = self.Bv @ b
            R1 = self.BvT @ (w * (Lu + signed_power(v, q)))
            R2 = self.BT @ (-w * (m.L @ v) - w * f + mu * gC)
            J11 = self.BvT @ sp.diags(w) @ self.LB
            J12 = self.BvT @ sp.diags(w * (q - 1) * np.abs(v) ** (q - 2)) @ self.Bv
            J21 = self.BT @ sp.diags(-w * (p - 1) * np.abs(u) ** (p - 2) + mu * dC) @ self.B
            J22 = -(self.BT @ sp.diags(w) @ self.LBv)
            K = sp.bmat([[J21, J22], [J11, J12]], format="csc")
            R = np.concatenate([R2, R1])
            border = np.concatenate([e, np.zeros(b.size)])
        else:
            Lmax = max(np.abs(Lu).max(), 1e-300)
            D = (qp - 1) * np.maximum(np.abs(Lu), 1e-14 * Lmax) ** (qp - 2)
            R = self.BT @ (w * m.gradient(u)) + mu * e
            K = (self.LBT @ sp.diags(w * D) @ self.LB
                 + self.BT @ sp.diags(-w * (p - 1) * np.abs(u) ** (p - 2) + mu * dC) @ self.B).tocsc()
            border = e
        return R, K, border, C - GAUGE_TARGET

    def _merit(self, a, b, mu, mixed):
        m = self.model
        w = self.w
        u = self.field_of(a)
        f = signed_power(u, m.p)
        c = np.where(m.support, self.gauge.grad(u) / w, 0.0)
        if mixed:
            v = self.Bv @ b
            psi = signed_power(v, m.q)
            r1 = _lnorm(w, (m.L @ u) + psi, m.qp) / max(_lnorm(w, psi, m.qp), 1e-300)
            g = np.where(m.support, -(m.L @ v) - f, 0.0)
        else:
            r1 = 0.0
            g = m.gradient(u)
        r2 = _lnorm(w, g + mu * c, m.pp) / _lnorm(w, f, m.pp)
        return max(r1, r2) + abs(self.gauge.value(u) - GAUGE_TARGET)

    def polish(self, a, max_steps: int = 30):
        """Newton on the gauge-constrained Euler-Lagrange system.

        Mixed (u, v) form when q >= 2, where |v|^{q-2} v is C^1; primal
        otherwise, where |Lu|^{q'-2} Lu is.  Steps are damped to decrease the
        relative residual; the iterate is returned unchanged if none does.
        """
        m = self.model
        mixed = m.q >= 2
        if mixed and not hasattr(self, "Bv"):
            sym = self.spec if (self.spec is not None and self.spec.j >= 1) else None
            # v matters on free nodes and their stencil neighbours
            reach = abs(m.L[m.support]).sum(axis=0).A1 > 0
            self.Bv = equivariant_basis(self.grid, sym, mask=reach | m.support).tocsc()
            self.BvT = self.Bv.T.tocsr()
            self.LBv = (m.L @ self.Bv).tocsc()
        u = self.field_of(a)
        b = self.BvT @ (-signed_power(m.L @ u, m.qp)) if mixed else None
        mu = self._lsq_mu(a)
        merit = self._merit(a, b, mu, mixed)
        history = [merit]
        for _ in range(max_steps):
            R, K, e, cgap = self._newton_parts(a, b, mu, mixed)
            try:
                lu = spl.splu(K)
            except RuntimeError:
                break
            x0 = lu.solve(-R)
            y = lu.solve(e)
            ee = e[: a.size]
            dmu = (ee @ x0[: a.size] + cgap) / (ee @ y[: a.size])
            dx = x0 - dmu * y
            eta, improved = 1.0, False
            while eta > 1e-4:
                a_c = a + eta * dx[: a.size]
                b_c = b + eta * dx[a.size:] if mixed else None
                mu_c = mu + eta * dmu
                m_c = self._merit(a_c, b_c, mu_c, mixed)
                if np.isfinite(m_c) and m_c < merit:
                    improved = True
                    break
                eta *= 0.5
            if not improved:
                break
            a, b, mu, merit = a_c, b_c, mu_c, m_c
            history.append(merit)
            if merit < 1e-15:
                break
        v = self.Bv @ b if mixed else -signed_power(m.L @ self.field_of(a), m.qp)
        return a, history, v

    def _lsq_mu(self, a):
        """Multiplier minimising |W g + mu grad C| in the weighted dual norm."""
        u = self.field_of(a)
        g = self.model.gradient(u)
        c = np.where(self.model.support, self.gauge.grad(u) / self.w, 0.0)
        wc = self.w * c
        den = float(np.dot(c, wc))
        return -float(np.dot(g, wc)) / den if den > 0 else 0.0

    def run(self, a, seed_lp: float):
        """Projected descent.  Returns (a, trace, settled, message).

        ``settled`` means the energy has stopped moving: either the relative
        change over ``window`` accepted steps fell below energy_rel_tol, or the
        predicted decrease of a unit step did (the line search then works at
        round-off and further progress needs the Newton polish).
        """
        cfg = self.cfg
        trace = []
        J = self.model.energy(self.field_of(a))
        eta = cfg.step_initial
        settled = False
        message = "max_iterations reached"
        self.refactor(a)
        while len(trace) < cfg.max_iterations:
            if cfg.preconditioner == "lagged" and self.since_refactor >= cfg.refactor_every:
                self.refactor(a)
            G, _ = self.euclid_grad(a)
            Gc = self.BT @ self.gauge.grad(self.field_of(a))
            d = self.solve(G)
            z = self.solve(Gc)
            d = d - (Gc @ d) / (Gc @ z) * z
            slope = float(G @ d)
            if slope < cfg.energy_rel_tol * abs(J) and self.since_refactor == 0:
                settled, message = True, "energy settled"
                break
            accepted = False
            if slope > 0:
                eta = min(cfg.step_initial, eta / cfg.backtrack)
                while eta > 1e-10:
                    cand = a - eta * d
                    u_pre = self.field_of(cand)
                    lp = np.sum(self.w * np.abs(u_pre) ** self.model.p) ** (1 / self.model.p)
                    if lp < 1e-8 * seed_lp:
                        eta *= cfg.backtrack        # zero-collapse guard
                        continue
                    try:
                        cand = self.nehari(self.restore_gauge(cand, z))
                    except (RuntimeError, ValueError):
                        eta *= cfg.backtrack
                        continue
                    Jc = self.model.energy(self.field_of(cand))
                    if Jc <= J - 1e-4 * eta * slope and Jc < J:
                        accepted = True
                        break
                    eta *= cfg.backtrack
            if not accepted:
                if self.since_refactor > 0 and cfg.preconditioner != "bilaplacian":
                    self.refactor(a)
                    continue
                settled = slope < cfg.energy_rel_tol * abs(J)
                message = "energy settled" if settled else "line search stalled"
                break
            if log.isEnabledFor(logging.DEBUG):
                log.debug("it %d J=%.12g eta=%.3g slope=%.3g", len(trace), Jc, eta, slope)
            a, J = cand, Jc
            trace.append(J)
            self.since_refactor += 1
            if len(trace) > cfg.window:
                if (trace[-1 - cfg.window] - J) / abs(J) < cfg.energy_rel_tol:
                    settled, message = True, "energy settled"
                    break
        return a, trace, settled, message


def _lnorm(w, x, r):
    return float(np.sum(w * np.abs(x) ** r) ** (1 / r))


def _initial_coords(desc: _Descent, cfg: SolveConfig, seed: str, init: Optional[Field]):
    grid, spec = desc.grid, desc.spec
    if seed == "file" or init is not None:
        src = init if init is not None else load_field(cfg.init_path)

        def dilated(eps):
            return rescale(src, eps, grid=grid, exponents=cfg.exponents, spec=None).values.ravel()

        # a warm start from other exponents or grids is off gauge; dilate it back
        u0 = src.values.ravel().copy() if src.grid.same_as(grid) else dilated(1.0)
        c0 = desc.gauge.value(u0) - GAUGE_TARGET
        if abs(c0) > 1e-3:
            def c_of_eps(eps):
                return desc.gauge.value(dilated(eps)) - GAUGE_TARGET

            lo, hi = 0.25, 4.0
            if np.sign(c_of_eps(lo)) != np.sign(c_of_eps(hi)):
                u0 = dilated(brentq(c_of_eps, lo, hi, xtol=1e-6))
        ref = u0
    else:
        def c_of_ell(ell):
            return desc.gauge.value(_seed_profile(seed, grid, spec, ell).ravel()) - GAUGE_TARGET

        lo, hi = cfg.rho0 / 20, cfg.rho0 * 5
        ell = brentq(c_of_ell, lo, hi) if np.sign(c_of_ell(lo)) != np.sign(c_of_ell(hi)) else cfg.rho0
        u0 = _seed_profile(seed, grid, spec, ell).ravel()
        ref = u0
    u0 = np.where(grid.support.ravel(), u0, 0.0)
    a = desc.coords_of(u0)
    if not np.any(a):
        raise ValueError(f"seed {seed!r} has no equivariant component")
    return a, ref


def solve(cfg: SolveConfig, init: Optional[Field] = None, grid: Optional[Grid] = None) -> SolveResult:
    """Run every configured seed and return the lowest-energy result."""
    grid = grid or cfg.build_grid()
    spec = cfg.symmetry
    seeds = ("file",) if init is not None else cfg.seeds
    best = None
    for seed in seeds:
        t0 = time.perf_counter()
        desc = _Descent(cfg, grid, spec)
        a, ref = _initial_coords(desc, cfg, seed, init)
        seed_lp = np.sum(desc.w * np.abs(desc.field_of(a)) ** desc.model.p) ** (1 / desc.model.p)
        desc.refactor(a)
        z = desc.solve(desc.BT @ desc.gauge.grad(desc.field_of(a)))
        a = desc.nehari(desc.restore_gauge(a, z))
        desc.factor = None
        a, trace, settled, message = desc.run(a, seed_lp)
        if cfg.newton_steps > 0:
            a, history, v = desc.polish(a, cfg.newton_steps)
            t = desc.model.nehari_scale(desc.field_of(a))
            a, v = t * a, t ** (desc.model.qp - 1) * v
        else:
            history = [desc.residuals(a)[1]]
            v = -signed_power(desc.model.L @ desc.field_of(a), desc.model.qp)
        converged = settled and history[-1] < cfg.residual_tol
        if settled and not converged:
            message = f"energy settled but system residual {history[-1]:.2e} > {cfg.residual_tol:.1e}"
        elif converged:
            message = "converged"
        u = desc.field_of(a)
        if np.sum(grid.weights.ravel() * u * ref) < 0:
            u, v = -u, -v
        if spec is not None and spec.j >= 1:
            u = symmetrize_values(u, grid, spec).ravel()
            v = symmetrize_values(v, grid, spec).ravel()
        full, tang, mu = desc.residuals(desc.coords_of(u))
        fld = Field(grid, u, cfg.exponents, spec, equivariant=spec is not None and spec.j >= 1,
                    meta={"seed": seed, "gauge_radius": cfg.rho0})
        vfld = fld.with_values(v.reshape(grid.shape))
        res = SolveResult(fld, desc.model.report(u), trace, full, tang, mu, has_sign_change(u),
                          converged, len(trace), message, seed, time.perf_counter() - t0,
                          history[-1], len(history) - 1, vfld)
        log.info("seed %s: J=%.10g iterations=%d %s", seed, res.energy, res.iterations, message)
        if best is None or (res.converged, -res.energy) > (best.converged, -best.energy):
            best = res
    return best


def minimize_equivariant(cfg: SolveConfig, init: Optional[Field] = None) -> SolveResult:
    """Least energy on the phi-equivariant Nehari set (j=1 reduced, j>=2 Cartesian)."""
    if cfg.symmetry is None or cfg.symmetry.j < 1:
        raise ValueError("minimize_equivariant needs a G_j symmetry with j >= 1")
    if cfg.symmetry.N != cfg.exponents.N:
        raise ValueError("symmetry and exponents disagree on N")
    return solve(cfg, init)


def ground_state_radial(cfg: SolveConfig, init: Optional[Field] = None) -> SolveResult:
    """Positive radial least-energy solution on a radial grid."""
    cfg = replace(cfg, symmetry=None, seeds=tuple(s for s in cfg.seeds if s in ("radial_seed", "file"))
                  or ("radial_seed",))
    return solve(cfg, init)


@dataclass
class SweepEntry:
    exponents: Exponents
    result: Optional[SolveResult]
    error: Optional[str] = None

    @property
    def converged(self) -> bool:
        return self.result is not None and self.result.converged


def continuation_sweep(base: SolveConfig, exponent_list: Sequence, given: str = "q") -> list:
    """Solve along the hyperbola, warm-starting each run from the previous one.

    ``exponent_list`` holds Exponents records or values of ``given``
    ('p' or 'q') at the base dimension.  Failures are recorded, not raised.
    """
    N = base.exponents.N
    out = []
    prev = None
    for item in exponent_list:
        try:
            e = item if isinstance(item, Exponents) else hyperbola_complete(N, **{given: item})
        except ValueError as err:
            out.append(SweepEntry(None, None, str(err)))
            continue
        cfg = replace(base, exponents=e, symmetry=base.symmetry)
        run = ground_state_radial if base.symmetry is None else minimize_equivariant
        try:
            res = None
            if prev is not None:
                try:
                    res = run(cfg, Field(prev.grid, prev.values, e, prev.symmetry, prev.equivariant))
                except (RuntimeError, ValueError) as err:
                    log.warning("warm start at %s failed (%s); starting cold", e, err)
            if res is None:
                res = run(cfg)
            out.append(SweepEntry(e, res))
            prev = res.field
        except Exception as err:  # noqa: BLE001 - a failed row must not stop the sweep
            log.warning("sweep point %s failed: %s", e, err)
            out.append(SweepEntry(e, None, f"{type(err).__name__}: {err}"))
    return out
