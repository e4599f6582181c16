"""Structured grids, the reduced Laplacian, quadrature and field I/O.

All reduced axes are cell-centred (first node at h/2), so the polar factors
1/s, 1/t, 1/r never meet a node on an axis.  The Laplacian is assembled in
finite-volume form

    (Lu)_i = [A_{i+1/2}(u_{i+1}-u_i) - A_{i-1/2}(u_i-u_{i-1})] / (h V_i)

with face areas A = r^(d-1) and cell volumes V = (r_{i+1/2}^d - r_{i-1/2}^d)/d
for an axis carrying a d-dimensional radial variable.  The face at r=0 has
zero area, which is the even reflection across the axis.  Beyond the last
node the field is zero.  With the quadrature weights equal to the cell
volumes, ``W @ L`` is symmetric and r^2 is differentiated exactly.

Reduced grids carry two padding layers outside the ball of radius R; nodes
with |x| >= R are held at zero, so the solver sees a clamped boundary
(value and normal derivative zero) and the energy still counts the
Laplacian on the padding layers.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.special import gamma

from .exponents import Exponents

KINDS = ("radial_1d", "biradial_2d", "biradial_radial_3d", "cartesian")
KIND_CODES = {k: i for i, k in enumerate(KINDS)}
MAGIC = b"LEFD"
FORMAT_VERSION = 1
PAD_LAYERS = 2


class FieldFormatError(ValueError):
    """Raised for corrupt or truncated field files."""


class FieldVersionError(FieldFormatError):
    """Raised when a field file carries an unsupported format version."""


def sphere_area(d: int) -> float:
    """Area of the unit sphere S^{d-1} in R^d (d=1 gives 2, two points)."""
    return 2.0 * np.pi ** (d / 2) / gamma(d / 2)


def ball_volume(N: int, R: float = 1.0) -> float:
    return sphere_area(N) / N * R**N


def _fv_axis(x: np.ndarray, h: float, d: int, reflect: bool, lo_face: float):
    """1D finite-volume pieces for one axis.

    Returns (volume, operator) with operator = V^{-1} D, D symmetric.
    ``reflect`` closes the low face (even reflection across an axis).
    """
    n = x.size
    faces = np.concatenate([[lo_face], x + h / 2])
    if d == 1:
        area = np.ones(n + 1)
        vol = np.full(n, h)
    else:
        area = faces ** (d - 1)
        vol = (faces[1:] ** d - faces[:-1] ** d) / d
    if reflect:
        area[0] = 0.0
    up = area[1:] / h
    lo = area[:-1] / h
    D = sp.diags([up[:-1], -(up + lo), lo[1:]], [1, 0, -1], shape=(n, n), format="csr")
    return vol, sp.diags(1.0 / vol) @ D


@dataclass(frozen=True, eq=False)
class Grid:
    """Immutable structured grid.

    ``axes_dims`` records the radial dimension carried by each axis: 2 for
    the moduli s=|z1|, t=|z2|; N-4 for r=|y|; N for a radial grid; 1 for a
    Cartesian axis.
    """

    kind: str
    N: int
    j: int
    extent: float
    spacings: tuple
    counts: tuple
    inner: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown grid kind {self.kind!r}")
        if self.extent <= 0 or self.inner < 0 or self.inner >= self.extent:
            raise ValueError(f"bad extent R={self.extent}, inner={self.inner}")
        if len(self.spacings) != len(self.counts) or len(self.counts) != len(self.axes_dims):
            raise ValueError("axis description does not match grid kind")

    @property
    def axes_dims(self) -> tuple:
        if self.kind == "radial_1d":
            return (self.N,)
        if self.kind == "biradial_2d":
            return (2, 2)
        if self.kind == "biradial_radial_3d":
            return (2, 2, self.N - 4)
        return (1,) * self.N

    @property
    def reduced(self) -> bool:
        return self.kind in ("biradial_2d", "biradial_radial_3d")

    @property
    def ndim(self) -> int:
        return len(self.counts)

    @property
    def shape(self) -> tuple:
        return tuple(self.counts)

    @property
    def size(self) -> int:
        return int(np.prod(self.counts))

    @cached_property
    def axes(self) -> list:
        out = []
        for n, h in zip(self.counts, self.spacings):
            if self.kind == "cartesian":
                out.append((np.arange(n) - (n - 1) / 2) * h)
            else:
                out.append(self.inner + (np.arange(n) + 0.5) * h)
        return out

    def mesh(self) -> list:
        return np.meshgrid(*self.axes, indexing="ij")

    @cached_property
    def radius(self) -> np.ndarray:
        """|x| at every node (Euclidean norm in R^N)."""
        return np.sqrt(sum(c**2 for c in self.mesh()))

    @cached_property
    def support(self) -> np.ndarray:
        """Nodes whose values are free; the rest are clamped to zero."""
        if self.kind == "cartesian" or self.inner > 0:
            return np.ones(self.shape, dtype=bool)
        return self.radius < self.extent

    @cached_property
    def _pieces(self):
        vols, ops = [], []
        for x, h, d in zip(self.axes, self.spacings, self.axes_dims):
            if self.kind == "cartesian":
                v, op = _fv_axis(x, h, 1, reflect=False, lo_face=x[0] - h / 2)
            else:
                lo = self.inner
                v, op = _fv_axis(x, h, d, reflect=(lo == 0.0), lo_face=lo)
                v = v * (sphere_area(d) if d > 1 or lo == 0.0 else 1.0)
            vols.append(v)
            ops.append(op)
        return vols, ops

    @cached_property
    def weights(self) -> np.ndarray:
        """Quadrature weight (volume element of R^N) per node."""
        vols, _ = self._pieces
        w = vols[0]
        for v in vols[1:]:
            w = np.multiply.outer(w, v)
        return np.asarray(w).reshape(self.shape)

    @cached_property
    def laplacian_matrix(self) -> sp.csr_matrix:
        """Sparse Laplacian acting on row-major flattened node values."""
        _, ops = self._pieces
        eyes = [sp.identity(n, format="csr") for n in self.counts]
        total = None
        for k, op in enumerate(ops):
            factors = eyes[:k] + [op] + eyes[k + 1:]
            term = factors[0]
            for f in factors[1:]:
                term = sp.kron(term, f, format="csr")
            total = term if total is None else total + term
        return total.tocsr()

    def descriptor(self) -> dict:
        return {
            "kind": self.kind, "N": self.N, "j": self.j, "extent": self.extent,
            "spacings": list(self.spacings), "counts": list(self.counts), "inner": self.inner,
        }

    @classmethod
    def from_descriptor(cls, d: dict) -> "Grid":
        return cls(kind=d["kind"], N=int(d["N"]), j=int(d["j"]), extent=float(d["extent"]),
                   spacings=tuple(float(h) for h in d["spacings"]),
                   counts=tuple(int(n) for n in d["counts"]), inner=float(d.get("inner", 0.0)))

    def same_as(self, other: "Grid") -> bool:
        return self.descriptor() == other.descriptor()

    def refined(self, factor: int = 2) -> "Grid":
        """Same extent, spacing divided by ``factor``."""
        res = self.resolution * factor
        return build_grid(self.kind, self.N, self.j, self.extent, res, inner=self.inner)

    @property
    def resolution(self) -> int:
        if self.kind == "cartesian":
            return self.counts[0]
        return int(round((self.extent - self.inner) / self.spacings[0]))


def build_grid(kind: str, N: int, j: int, R: float, resolution: int,
               inner: float = 0.0) -> Grid:
    """Build a grid of the given kind.

    Reduced and radial grids use spacing h = R/resolution and add two
    padding layers beyond R.  ``inner > 0`` makes a radial annulus
    [inner, R] without padding.  Cartesian grids cover [-R, R]^N with
    ``resolution`` (even) nodes per axis and are meant for tiny sizes.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown grid kind {kind!r}")
    if R <= 0:
        raise ValueError(f"extent must be positive, got R={R}")
    if N < 4:
        raise ValueError(f"dimension N={N} < 4 unsupported")
    if kind == "biradial_2d" and N != 4:
        raise ValueError("biradial_2d is the j=1 quotient of R^4 only")
    if kind == "biradial_radial_3d" and N <= 4:
        raise ValueError("biradial_radial_3d needs N > 4")
    if kind in ("biradial_2d", "biradial_radial_3d") and j != 1:
        raise ValueError("reduced grids exist for j=1 only")
    if inner and kind != "radial_1d":
        raise ValueError("annulus grids are radial only")
    if kind == "cartesian":
        if resolution < 2 or resolution % 2:
            raise ValueError("cartesian resolution must be even and >= 2")
        h = 2.0 * R / resolution
        return Grid(kind, N, j, float(R), (h,) * N, (resolution,) * N)
    if resolution < 16:
        raise ValueError(f"resolution must be >= 16, got {resolution}")
    h = (R - inner) / resolution
    n = resolution if inner else resolution + PAD_LAYERS
    ndim = {"radial_1d": 1, "biradial_2d": 2, "biradial_radial_3d": 3}[kind]
    return Grid(kind, N, j, float(R), (h,) * ndim, (n,) * ndim, inner=float(inner))


def build_annulus(N: int, r_in: float, r_out: float, resolution: int) -> Grid:
    return build_grid("radial_1d", N, 0, r_out, resolution, inner=r_in)


@dataclass
class Field:
    """Samples of a real function on a grid plus metadata."""

    grid: Grid
    values: np.ndarray
    exponents: Optional[Exponents] = None
    symmetry: Optional[object] = None
    equivariant: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(self.grid.shape)
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite values")

    def with_values(self, values, equivariant: Optional[bool] = None) -> "Field":
        eq = self.equivariant if equivariant is None else equivariant
        return Field(self.grid, values, self.exponents, self.symmetry, eq, dict(self.meta))

    @classmethod
    def from_function(cls, grid: Grid, func, **kw) -> "Field":
        """Sample ``func`` on the grid coordinates (reduced or Cartesian)."""
        return cls(grid, func(*grid.mesh()), **kw)


def laplacian(f: Field) -> Field:
    vals = f.grid.laplacian_matrix @ f.values.ravel()
    return f.with_values(vals, equivariant=False)


def integrate(f: Field) -> float:
    return float(np.sum(f.values * f.grid.weights))


# --------------------------------------------------------------------- I/O

def _sidecar(path: Path) -> Path:
    return path.with_name(path.name + ".json")


def save_field(f: Field, path) -> Path:
    """Write the LEFD binary plus a JSON sidecar; returns the binary path."""
    path = Path(path)
    g = f.grid
    head = MAGIC + struct.pack("<IBBBB", FORMAT_VERSION, KIND_CODES[g.kind], g.N, g.j, g.ndim)
    for n, h in zip(g.counts, g.spacings):
        head += struct.pack("<Id", n, h)
    head += struct.pack("<d", g.extent)
    path.write_bytes(head + f.values.astype("<f8").tobytes(order="C"))
    meta = {
        "format": "LEFD", "version": FORMAT_VERSION, "grid": g.descriptor(),
        "exponents": f.exponents.as_dict() if f.exponents is not None else None,
        "symmetry": f.symmetry.as_dict() if f.symmetry is not None else None,
        "equivariant": f.equivariant, "meta": f.meta,
    }
    _sidecar(path).write_text(json.dumps(meta, indent=2))
    return path


def load_field(path) -> Field:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < 12 or raw[:4] != MAGIC:
        raise FieldFormatError(f"{path}: missing LEFD magic header")
    version, kind, N, j, naxes = struct.unpack_from("<IBBBB", raw, 4)
    if version != FORMAT_VERSION:
        raise FieldVersionError(f"{path}: format version {version}, expected {FORMAT_VERSION}")
    if kind >= len(KINDS):
        raise FieldFormatError(f"{path}: bad grid kind code {kind}")
    off = 12
    need = off + naxes * 12 + 8
    if len(raw) < need:
        raise FieldFormatError(f"{path}: truncated header")
    counts, spacings = [], []
    for _ in range(naxes):
        n, h = struct.unpack_from("<Id", raw, off)
        counts.append(n)
        spacings.append(h)
        off += 12
    (extent,) = struct.unpack_from("<d", raw, off)
    off += 8
    size = int(np.prod(counts))
    if len(raw) != off + 8 * size:
        raise FieldFormatError(f"{path}: expected {size} values, file holds {(len(raw) - off) / 8:g}")
    values = np.frombuffer(raw, dtype="<f8", offset=off).astype(float).reshape(counts)

    meta = {}
    side = _sidecar(path)
    if side.exists():
        try:
            meta = json.loads(side.read_text())
        except json.JSONDecodeError as err:
            raise FieldFormatError(f"{side}: {err}") from err
    inner = float(meta.get("grid", {}).get("inner", 0.0))
    grid = Grid(KINDS[kind], N, j, extent, tuple(spacings), tuple(counts), inner=inner)
    exps = Exponents.from_dict(meta["exponents"]) if meta.get("exponents") else None
    sym = None
    if meta.get("symmetry"):
        from .symmetry import SymmetrySpec

        sym = SymmetrySpec.from_dict(meta["symmetry"])
    return Field(grid, values, exps, sym, bool(meta.get("equivariant", False)), meta.get("meta", {}))


def export_csv(f: Field, path) -> Path:
    """One row per node: coordinates then value."""
    path = Path(path)
    cols = [c.ravel() for c in f.grid.mesh()] + [f.values.ravel()]
    names = {"radial_1d": ["r"], "biradial_2d": ["s", "t"],
             "biradial_radial_3d": ["s", "t", "r"]}.get(f.grid.kind)
    if names is None:
        names = [f"x{i}" for i in range(f.grid.N)]
    np.savetxt(path, np.column_stack(cols), delimiter=",", header=",".join(names + ["value"]),
               comments="", fmt="%.17g")
    return path
