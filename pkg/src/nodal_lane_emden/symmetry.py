"""The groups G_j = Gamma^j x Lambda_j, the sign homomorphism and symmetrizers.

Coordinates: R^N = (C^2)^j x R^(N-4j), and a block z = (zeta1, zeta2) sits in
four consecutive real coordinates (Re zeta1, Im zeta1, Re zeta2, Im zeta2).
Gamma is generated by the circle e^{i theta} z and the flip
rho(zeta1, zeta2) = (-conj zeta2, conj zeta1); phi(e^{i theta}) = 1,
phi(rho) = -1.  Lambda_j is O(N-4j), or trivial.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize_scalar

from .discretize import Field, Grid

TWO_PI = 2.0 * np.pi


class GridNotClosedError(ValueError):
    """The grid is not mapped to itself by a sampled group element."""

    def __init__(self, message: str, node=None):
        super().__init__(message)
        self.node = node


# ------------------------------------------------------------------ elements

@dataclass(frozen=True)
class GammaElement:
    """rho^flip composed with e^{i theta}; the rotation acts first."""

    theta: float = 0.0
    flip: bool = False

    def __post_init__(self):
        object.__setattr__(self, "theta", float(self.theta) % TWO_PI)

    @property
    def phi(self) -> int:
        return -1 if self.flip else 1

    def __mul__(self, other: "GammaElement") -> "GammaElement":
        # uses rho e^{ia} = e^{-ia} rho and rho^2 = e^{i pi}
        a, b = self.theta, other.theta
        if not self.flip and not other.flip:
            return GammaElement(a + b, False)
        if not self.flip and other.flip:
            return GammaElement(b - a, True)
        if self.flip and not other.flip:
            return GammaElement(a + b, True)
        return GammaElement(np.pi + b - a, False)

    def matrix(self) -> np.ndarray:
        """4x4 real matrix of the action on one block."""
        c, s = np.cos(self.theta), np.sin(self.theta)
        rot = np.array([[c, -s, 0, 0], [s, c, 0, 0], [0, 0, c, -s], [0, 0, s, c]])
        if not self.flip:
            return rot
        rho = np.array([[0, 0, -1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, -1, 0, 0]], dtype=float)
        return rho @ rot

    def same(self, other: "GammaElement", tol: float = 1e-12) -> bool:
        d = abs((self.theta - other.theta + np.pi) % TWO_PI - np.pi)
        return self.flip == other.flip and d < tol


RHO = GammaElement(0.0, True)


@dataclass(frozen=True)
class GroupElement:
    """(gamma_1, ..., gamma_j, eta) in G_j; ``lam`` is None for eta = 1."""

    blocks: tuple
    lam: Optional[np.ndarray] = None

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        blocks = tuple(a * b for a, b in zip(self.blocks, other.blocks))
        if self.lam is None:
            lam = other.lam
        elif other.lam is None:
            lam = self.lam
        else:
            lam = self.lam @ other.lam
        return GroupElement(blocks, lam)

    def matrix(self, N: int) -> np.ndarray:
        M = np.eye(N)
        for i, g in enumerate(self.blocks):
            M[4 * i:4 * i + 4, 4 * i:4 * i + 4] = g.matrix()
        if self.lam is not None:
            k = self.lam.shape[0]
            M[N - k:, N - k:] = self.lam
        return M


def phi_value(g) -> int:
    """phi_j(gamma_1, ..., gamma_j, eta) = phi(gamma_1) ... phi(gamma_j)."""
    if isinstance(g, GammaElement):
        return g.phi
    out = 1
    for b in g.blocks:
        out *= b.phi
    return out


def act(g, x) -> np.ndarray:
    """Apply a group element to points of R^N (last axis is the coordinate)."""
    x = np.asarray(x, dtype=float)
    if isinstance(g, GammaElement):
        if x.shape[-1] != 4:
            raise ValueError(f"Gamma acts on C^2 = R^4, got dimension {x.shape[-1]}")
        return x @ g.matrix().T
    N = x.shape[-1]
    k = N - 4 * len(g.blocks)
    if k < 0 or (g.lam is not None and g.lam.shape != (k, k)):
        raise ValueError(f"element of G_{len(g.blocks)} cannot act on R^{N}")
    return x @ g.matrix(N).T


# ---------------------------------------------------------------- the groups

@dataclass(frozen=True)
class SymmetrySpec:
    """G_j with phi_j acting on R^N.

    ``j = 0`` gives the trivial group (a negative control with phi = 1).
    ``lambda_kind='auto'`` uses O(N-4j) for j < floor(N/4) and the trivial
    group for j = floor(N/4).
    """

    N: int
    j: int = 1
    lambda_kind: str = "auto"
    haar_samples: int = 4

    def __post_init__(self):
        if self.N < 4:
            raise ValueError("no admissible group for N < 4")
        if not 0 <= self.j <= self.N // 4:
            raise ValueError(f"j={self.j} outside 0..{self.N // 4}")
        if self.lambda_kind not in ("auto", "orthogonal", "trivial"):
            raise ValueError(f"lambda_kind {self.lambda_kind!r}")
        if self.haar_samples < 1:
            raise ValueError("haar_samples must be positive")
        if self.lambda_kind == "auto":
            kind = "orthogonal" if 0 < self.j < self.N // 4 else "trivial"
            if self.j == 0:
                kind = "trivial"
            object.__setattr__(self, "lambda_kind", kind)
        if self.k == 0:
            object.__setattr__(self, "lambda_kind", "trivial")

    @property
    def k(self) -> int:
        return self.N - 4 * self.j

    @property
    def phi_surjective(self) -> bool:
        return self.j >= 1

    @property
    def fixed_point_dim(self) -> int:
        """dim (R^N)^G."""
        return self.k if self.lambda_kind == "trivial" else 0

    def identity(self) -> GroupElement:
        return GroupElement(tuple(GammaElement() for _ in range(self.j)), None)

    def block_element(self, block: int, gamma: GammaElement) -> GroupElement:
        blocks = [GammaElement() for _ in range(self.j)]
        blocks[block] = gamma
        return GroupElement(tuple(blocks), None)

    def lambda_element(self, mat: np.ndarray) -> GroupElement:
        if self.lambda_kind != "orthogonal":
            raise ValueError("Lambda is trivial for this spec")
        return GroupElement(self.identity().blocks, np.asarray(mat, dtype=float))

    def gamma_samples(self) -> list:
        M = self.haar_samples
        return [GammaElement(TWO_PI * m / M, f) for f in (False, True) for m in range(M)]

    def lambda_samples(self) -> list:
        """Signed permutation matrices (the full hyperoctahedral group for k <= 4)."""
        if self.lambda_kind != "orthogonal":
            return [None]
        k = self.k
        perms = list(itertools.permutations(range(k))) if k <= 4 else \
            [tuple(np.roll(np.arange(k), s)) for s in range(k)]
        out = []
        for perm in perms:
            P = np.eye(k)[list(perm)]
            for signs in itertools.product((1.0, -1.0), repeat=k):
                out.append(np.diag(signs) @ P)
        return out

    def samples(self) -> list:
        """All sampled group elements (product of per-factor samples)."""
        gam = self.gamma_samples()
        out = []
        for blocks in itertools.product(gam, repeat=self.j):
            for lam in self.lambda_samples():
                out.append(GroupElement(tuple(blocks), lam))
        return out

    def as_dict(self) -> dict:
        return {"N": self.N, "j": self.j, "lambda_kind": self.lambda_kind,
                "haar_samples": self.haar_samples}

    @classmethod
    def from_dict(cls, d: dict) -> "SymmetrySpec":
        return cls(int(d["N"]), int(d["j"]), d.get("lambda_kind", "auto"),
                   int(d.get("haar_samples", 4)))


def haar_average(func, spec: SymmetrySpec, points) -> np.ndarray:
    """(1/|S|) sum_g phi(g) func(g x) over the sampled elements S.

    ``func`` takes an (..., N) array of points and returns (...) values.
    """
    x = np.asarray(points, dtype=float)
    acc = np.zeros(x.shape[:-1])
    elems = spec.samples()
    for g in elems:
        acc += phi_value(g) * func(act(g, x))
    return acc / len(elems)


# ---------------------------------------------------------- grid actions

@dataclass
class _GridAction:
    """One factor of the sampled group as signed node permutations."""

    perms: list
    signs: list


def _cartesian_perm(grid: Grid, M: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    pts = np.stack([c.ravel() for c in grid.mesh()], axis=1)
    img = pts @ M.T
    n = grid.counts[0]
    h = grid.spacings[0]
    fidx = img / h + (n - 1) / 2
    idx = np.rint(fidx)
    bad = np.any((np.abs(fidx - idx) > tol) | (idx < 0) | (idx > n - 1), axis=1)
    if bad.any():
        first = int(np.argmax(bad))
        raise GridNotClosedError(
            f"node {pts[first].tolist()} is mapped off the grid to {img[first].tolist()}",
            node=pts[first])
    return np.ravel_multi_index(tuple(idx.astype(int).T), grid.shape)


def _swap_perm(grid: Grid) -> np.ndarray:
    cs, ct = grid.counts[0], grid.counts[1]
    if cs != ct or abs(grid.spacings[0] - grid.spacings[1]) > 1e-15 * grid.spacings[0]:
        s, t = grid.axes[0], grid.axes[1]
        i = min(cs, ct) - 1
        node = (s[min(i + 1, cs - 1)], t[0])
        raise GridNotClosedError(f"biradial grid is not closed under (s,t)-swap at node {node}",
                                 node=np.array(node))
    idx = np.arange(grid.size).reshape(grid.shape)
    return np.swapaxes(idx, 0, 1).ravel()


def grid_factors(grid: Grid, spec: SymmetrySpec) -> list:
    """The sampled group as a list of commuting factors acting on nodes."""
    if grid.N != spec.N:
        raise ValueError(f"grid in R^{grid.N} vs group on R^{spec.N}")
    ident = np.arange(grid.size)
    if grid.kind == "radial_1d":
        # every element preserves |x|; only the sign average survives
        if spec.phi_surjective:
            return [_GridAction([ident, ident], [1, -1])]
        return []
    if grid.reduced:
        if spec.j == 0:
            return []
        if spec.j != 1:
            raise ValueError("reduced grids represent j=1 only")
        sw = _swap_perm(grid)
        # rotations fix (s,t); the flip swaps them
        M = spec.haar_samples
        return [_GridAction([ident] * M + [sw] * M, [1] * M + [-1] * M)]
    factors = []
    for b in range(spec.j):
        perms, signs = [], []
        for gam in spec.gamma_samples():
            g = spec.block_element(b, gam)
            perms.append(_cartesian_perm(grid, g.matrix(spec.N)))
            signs.append(gam.phi)
        factors.append(_GridAction(perms, signs))
    if spec.lambda_kind == "orthogonal":
        k = spec.k
        flips, swaps = [], []
        for signs in itertools.product((1.0, -1.0), repeat=k):
            flips.append(_cartesian_perm(grid, spec.lambda_element(np.diag(signs)).matrix(spec.N)))
        for perm in itertools.permutations(range(k)):
            swaps.append(_cartesian_perm(grid, spec.lambda_element(np.eye(k)[list(perm)]).matrix(spec.N)))
        factors.append(_GridAction(flips, [1] * len(flips)))
        factors.append(_GridAction(swaps, [1] * len(swaps)))
    return factors


def symmetrize_values(values: np.ndarray, grid: Grid, spec: SymmetrySpec) -> np.ndarray:
    f = np.asarray(values, dtype=float).ravel()
    for fac in grid_factors(grid, spec):
        acc = np.zeros_like(f)
        for perm, sign in zip(fac.perms, fac.signs):
            acc += sign * f[perm]
        f = acc / len(fac.perms)
    return f.reshape(grid.shape)


def symmetrize(f: Field, spec: Optional[SymmetrySpec] = None) -> Field:
    """Discrete Haar average (1/|S|) sum phi(g) f(g x) over the sampled group."""
    spec = spec or f.symmetry
    if spec is None:
        raise ValueError("no symmetry given")
    out = f.with_values(symmetrize_values(f.values, f.grid, spec), equivariant=True)
    out.symmetry = spec
    return out


def _cartesian_generators(grid: Grid, spec: SymmetrySpec) -> list:
    gens = []
    M = spec.haar_samples
    for b in range(spec.j):
        for gam in (GammaElement(TWO_PI / M), RHO):
            g = spec.block_element(b, gam)
            gens.append((_cartesian_perm(grid, g.matrix(spec.N)), gam.phi))
    if spec.lambda_kind == "orthogonal":
        k = spec.k
        for a in range(k):
            d = np.ones(k)
            d[a] = -1.0
            gens.append((_cartesian_perm(grid, spec.lambda_element(np.diag(d)).matrix(spec.N)), 1))
        for a in range(k - 1):
            P = np.eye(k)
            P[[a, a + 1]] = P[[a + 1, a]]
            gens.append((_cartesian_perm(grid, spec.lambda_element(P).matrix(spec.N)), 1))
    return gens


def equivariant_basis(grid: Grid, spec: Optional[SymmetrySpec], mask=None) -> sp.csr_matrix:
    """Orthonormal basis E (nodes x m) of the phi-equivariant fields.

    E E^T is the symmetrizer.  ``mask`` keeps only orbits inside the mask
    (the mask must be group invariant).
    """
    n = grid.size
    mask = np.ones(n, dtype=bool) if mask is None else np.asarray(mask).ravel()
    if spec is None or spec.j == 0:
        idx = np.nonzero(mask)[0]
        return sp.csr_matrix((np.ones(idx.size), (idx, np.arange(idx.size))), shape=(n, idx.size))
    if grid.N != spec.N:
        raise ValueError(f"grid in R^{grid.N} vs group on R^{spec.N}")
    if grid.kind == "radial_1d":
        return sp.csr_matrix((n, 0))
    if grid.reduced:
        sw = _swap_perm(grid)
        x = np.arange(n)
        rep = (x < sw[x]) & mask
        a, b = x[rep], sw[x[rep]]
        m = a.size
        rows = np.concatenate([a, b])
        cols = np.concatenate([np.arange(m), np.arange(m)])
        vals = np.concatenate([np.full(m, 1.0), np.full(m, -1.0)]) / np.sqrt(2.0)
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, m))

    # Cartesian: orbits are components of the generator graph; an orbit with
    # inconsistent signs has a stabilizer element with phi=-1 and carries 0.
    gens = _cartesian_generators(grid, spec)
    sign = np.zeros(n)
    comp = -np.ones(n, dtype=int)
    dead = []
    ncomp = 0
    for start in range(n):
        if comp[start] >= 0:
            continue
        comp[start] = ncomp
        sign[start] = 1.0
        stack = [start]
        ok = True
        while stack:
            x = stack.pop()
            for perm, s in gens:
                y = perm[x]
                sy = s * sign[x]
                if comp[y] < 0:
                    comp[y] = ncomp
                    sign[y] = sy
                    stack.append(y)
                elif sign[y] != sy:
                    ok = False
        dead.append(not ok)
        ncomp += 1
    inside = np.ones(ncomp, dtype=bool)
    np.logical_and.at(inside, comp, mask)
    keep = ~np.array(dead) & inside
    col = -np.ones(ncomp, dtype=int)
    col[keep] = np.arange(keep.sum())
    rows = np.nonzero(keep[comp])[0]
    cols = col[comp[rows]]
    sizes = np.bincount(cols, minlength=int(keep.sum()))
    vals = sign[rows] / np.sqrt(sizes[cols])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, int(keep.sum())))


# ---------------------------------------------------------- orbit geometry

def orbit_dimension(spec: SymmetrySpec, x, tol: float = 1e-10) -> int:
    """Rank of the infinitesimal generators evaluated at x."""
    x = np.asarray(x, dtype=float)
    vecs = []
    for b in range(spec.j):
        v = np.zeros(spec.N)
        x0, x1, x2, x3 = x[4 * b:4 * b + 4]
        v[4 * b:4 * b + 4] = (-x1, x0, -x3, x2)
        vecs.append(v)
    if spec.lambda_kind == "orthogonal":
        off = 4 * spec.j
        y = x[off:]
        for a in range(spec.k):
            for c in range(a + 1, spec.k):
                v = np.zeros(spec.N)
                v[off + a] = y[c]
                v[off + c] = -y[a]
                vecs.append(v)
    if not vecs:
        return 0
    return int(np.linalg.matrix_rank(np.array(vecs), tol=tol * max(1.0, np.linalg.norm(x))))


def is_fixed_point(spec: SymmetrySpec, x, tol: float = 1e-12) -> bool:
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x[:4 * spec.j]) > tol):
        return False
    if spec.lambda_kind == "orthogonal" and np.any(np.abs(x[4 * spec.j:]) > tol):
        return False
    return True


def _generators(spec: SymmetrySpec) -> list:
    gens = []
    for b in range(spec.j):
        gens.append(spec.block_element(b, GammaElement(TWO_PI / max(spec.haar_samples, 3))))
        gens.append(spec.block_element(b, RHO))
    if spec.lambda_kind == "orthogonal":
        for mat in spec.lambda_samples()[1:]:
            gens.append(spec.lambda_element(mat))
    return gens


def block_stabilizer(z, tol: float = 1e-9) -> list:
    """Elements of Gamma fixing z in C^2 = R^4, found coset by coset.

    For each coset (rotations, flips) the distance |g z - z| is minimised
    over theta; a minimum below ``tol`` is a stabilizer element.  A zero
    block is fixed by everything, reported as both cosets with theta=None.
    """
    z = np.asarray(z, dtype=float)
    if np.linalg.norm(z) < tol:
        return [(None, False), (None, True)]
    found = []
    for flip in (False, True):
        def dist(th):
            return np.linalg.norm(GammaElement(th, flip).matrix() @ z - z)

        grid = np.linspace(0, TWO_PI, 721)
        th0 = grid[np.argmin([dist(t) for t in grid])]
        res = minimize_scalar(dist, bounds=(th0 - 0.01, th0 + 0.01), method="bounded",
                              options={"xatol": 1e-13})
        if res.fun < tol * max(1.0, np.linalg.norm(z)):
            found.append((float(res.x) % TWO_PI, flip))
    return found


@dataclass
class SymmetryReport:
    s1_pass: bool
    s2_pass: bool
    phi_surjective: bool
    s2_witness: Optional[np.ndarray]
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.s1_pass and self.s2_pass and self.phi_surjective


def verify_s1_s2(spec: SymmetrySpec, sample_count: int = 200, seed: int = 0) -> SymmetryReport:
    """Sampled check of (S1) and (S2), plus surjectivity of phi."""
    rng = np.random.default_rng(seed)
    N = spec.N
    pts = [np.zeros(N)]
    for b in range(spec.j):
        e = np.zeros(N)
        e[4 * b] = 1.0
        pts.append(e)
    if spec.k:
        e = np.zeros(N)
        e[-1] = 1.0
        pts.append(e)
    pts.extend(rng.standard_normal((sample_count, N)))
    # points with some blocks switched off
    for _ in range(sample_count // 4):
        x = rng.standard_normal(N)
        x[:4 * spec.j] *= rng.integers(0, 2, size=spec.j).repeat(4)
        pts.append(x)

    gens = _generators(spec)
    violations = []
    for x in pts:
        if orbit_dimension(spec, x) > 0:
            continue
        moved = max((np.linalg.norm(act(g, x) - x) for g in gens), default=0.0)
        if moved > 1e-10:
            violations.append(f"S1: x={np.round(x, 6).tolist()} has a finite nontrivial orbit")
    s1 = not violations

    witness = None
    s2 = True
    if spec.j:
        xi = np.zeros(N)
        for b in range(spec.j):
            xi[4 * b] = 1.0
        for b in range(spec.j):
            for theta, flip in block_stabilizer(xi[4 * b:4 * b + 4]):
                if flip:
                    s2 = False
                    violations.append(f"S2: flip with theta={theta} fixes block {b} of xi")
        witness = xi
    else:
        witness = np.zeros(N)  # phi = 1: (S2) holds for any xi

    surj = any(phi_value(g) == -1 for g in _generators(spec))
    if not surj:
        violations.append("phi is not surjective")
    return SymmetryReport(s1, s2, surj, witness, violations)


# ---------------------------------------------------------- reduced coords

@dataclass(frozen=True)
class ReducedPoint:
    s: float
    t: float
    r: Optional[float] = None


def reduce_coordinates(x, j: int = 1) -> ReducedPoint:
    """(s, t, r) = (|z1|, |z2|, |y|) for the j=1 quotient."""
    if j != 1:
        raise ValueError("reduced coordinates exist for j=1 only")
    x = np.asarray(x, dtype=float)
    if x.size < 4:
        raise ValueError("need at least four coordinates")
    s = float(np.hypot(x[0], x[1]))
    t = float(np.hypot(x[2], x[3]))
    r = float(np.linalg.norm(x[4:])) if x.size > 4 else None
    return ReducedPoint(s, t, r)


def distinctness_witness(u: Field, w: Field, spec_u: Optional[SymmetrySpec] = None,
                         spec_w: Optional[SymmetrySpec] = None, tol: float = 1e-12):
    """A node certifying u != w for phi_i- and phi_j-equivariant fields, i < j.

    rho applied in block j fixes u (it lies in Lambda_i, where phi_i = 1) and
    negates w.  Returns the coordinates of a node where u and w differ, or
    None when w vanishes on every node.
    """
    spec_u = spec_u or u.symmetry
    spec_w = spec_w or w.symmetry
    if spec_u is None or spec_w is None:
        raise ValueError("both fields need a symmetry spec")
    if not spec_u.j < spec_w.j:
        raise ValueError(f"need i < j, got i={spec_u.j}, j={spec_w.j}")
    if not u.grid.same_as(w.grid) or u.grid.kind != "cartesian":
        raise ValueError("fields must share one Cartesian grid")
    grid = u.grid
    flip = spec_w.block_element(spec_w.j - 1, RHO)
    perm = _cartesian_perm(grid, flip.matrix(grid.N))
    uv, wv = u.values.ravel(), w.values.ravel()
    scale = max(np.abs(wv).max(), np.abs(uv).max(), 1e-300)
    pts = np.stack([c.ravel() for c in grid.mesh()], axis=1)
    order = np.argsort(-np.abs(wv))
    for x in order:
        if abs(wv[x]) <= tol * scale:
            break
        if abs(uv[x] - wv[x]) > tol * scale:
            return pts[x]
        xr = perm[x]
        if abs(uv[xr] - wv[xr]) > tol * scale:
            return pts[xr]
    return None
