"""Second Lane-Emden component and the system form of a solution.

For u solving the fourth-order problem, v = -|Lap u|^{q'-2} Lap u and the
pair (u, v) solves

    -Lap u = |v|^{q-2} v,    -Lap v = |u|^{p-2} u.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .discretize import Field, save_field
from .functional import signed_power


class DecayFitError(ValueError):
    """The shell averages in the fit window are unusable (sign change or zero)."""


@dataclass
class SystemPair:
    u: Field
    v: Field
    residual_1: float
    residual_2: float
    decay_slopes: Optional[tuple] = None

    def report(self) -> dict:
        return {"residual_1": self.residual_1, "residual_2": self.residual_2,
                "decay_slopes": list(self.decay_slopes) if self.decay_slopes else None}


def second_component(u: Field) -> Field:
    """v = -|L u|^{q'-2} L u, nodewise."""
    if u.exponents is None:
        raise ValueError("field carries no exponents")
    qp = float(u.exponents.qp)
    Lu = u.grid.laplacian_matrix @ u.values.ravel()
    v = -signed_power(Lu, qp)
    return u.with_values(v.reshape(u.grid.shape))


def _norm(w, x, r):
    return float(np.sum(w * np.abs(x) ** r) ** (1.0 / r))


def _relative(num: float, den: float) -> float:
    if den == 0:
        return 0.0 if num == 0 else float("inf")
    return num / den


def system_residual(u: Field, v: Optional[Field] = None) -> tuple:
    """(residual_1, residual_2) for the pair (u, v).

    residual_1 = |L v + |u|^{p-2}u|_{p'} / ||u|^{p-2}u|_{p'} on free nodes,
    residual_2 = |L u + |v|^{q-2}v|_{q'} / ||v|^{q-2}v|_{q'} on all nodes.
    ``u`` may also be a SystemPair.
    """
    if isinstance(u, SystemPair):
        u, v = u.u, u.v
    if v is None:
        v = second_component(u)
    if not u.grid.same_as(v.grid):
        raise ValueError("u and v live on different grids")
    p, q, qp, pp = u.exponents.floats
    g = u.grid
    L = g.laplacian_matrix
    w = g.weights.ravel()
    free = g.support.ravel()
    uu, vv = u.values.ravel(), v.values.ravel()
    f = signed_power(uu, p)
    r1 = _relative(_norm(w[free], (L @ vv + f)[free], pp), _norm(w[free], f[free], pp))
    psi = signed_power(vv, q)
    r2 = _relative(_norm(w, L @ uu + psi, qp), _norm(w, psi, qp))
    return r1, r2


def inversion_defect(u: Field, v: Field) -> float:
    """max |  |v|^{q-2}v + L u | / max |L u|, the nodewise identity defect."""
    Lu = u.grid.laplacian_matrix @ u.values.ravel()
    psi = signed_power(v.values.ravel(), float(u.exponents.q))
    scale = np.abs(Lu).max()
    return float(np.abs(psi + Lu).max() / scale) if scale > 0 else float(np.abs(psi).max())


def decay_exponent(f: Field, window: tuple, absolute: bool = False, bins: int = 24) -> float:
    """Least-squares slope of log|shell average of f| against log r.

    Shells are ``bins`` logarithmically spaced annuli covering ``window``.
    With ``absolute`` the shells average |f| (needed for equivariant fields,
    whose plain shell averages vanish).
    """
    lo, hi = window
    g = f.grid
    r = g.radius.ravel()
    if not 0 < lo < hi or hi > g.extent:
        raise ValueError(f"window {window} must satisfy 0 < lo < hi <= R = {g.extent}")
    w = g.weights.ravel()
    vals = np.abs(f.values.ravel()) if absolute else f.values.ravel()
    edges = np.geomspace(lo, hi, bins + 1)
    idx = np.digitize(r, edges) - 1
    rs, avgs = [], []
    for k in range(bins):
        sel = idx == k
        if not np.any(sel) or w[sel].sum() == 0:
            continue
        rs.append(np.sum(w[sel] * r[sel]) / w[sel].sum())
        avgs.append(np.sum(w[sel] * vals[sel]) / w[sel].sum())
    avgs = np.asarray(avgs)
    if avgs.size < 3:
        raise DecayFitError("fewer than three populated shells in the window")
    if np.any(avgs == 0) or (avgs.min() < 0 < avgs.max()):
        raise DecayFitError("shell average changes sign or vanishes in the window")
    slope, _ = np.polyfit(np.log(rs), np.log(np.abs(avgs)), 1)
    return float(slope)


def default_window(f: Field) -> tuple:
    """A tail window between the bulk and the clamped boundary layer."""
    R = f.grid.extent
    return (0.15 * R, 0.5 * R)


def make_pair(u: Field, v: Optional[Field] = None, window: Optional[tuple] = None) -> SystemPair:
    v = second_component(u) if v is None else v
    r1, r2 = system_residual(u, v)
    slopes = None
    window = window or default_window(u)
    try:
        slopes = (decay_exponent(u, window, absolute=True), decay_exponent(v, window, absolute=True))
    except DecayFitError:
        slopes = None
    return SystemPair(u, v, r1, r2, slopes)


def export_pair(pair: SystemPair, directory) -> dict:
    """Write u.lefd, v.lefd and residuals.json into ``directory``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    save_field(pair.u, d / "u.lefd")
    save_field(pair.v, d / "v.lefd")
    report = pair.report()
    (d / "residuals.json").write_text(json.dumps(report, indent=2))
    return report
