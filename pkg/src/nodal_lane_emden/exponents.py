"""Exponent arithmetic on the critical hyperbola 1/p + 1/q = (N-2)/N.

Rational inputs (int, Fraction, or strings like ``"12/5"``) stay exact, so
zero tests such as the Kelvin constant are not polluted by rounding.  Float
inputs fall back to float arithmetic.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Union

Number = Union[int, float, Fraction]

HYPERBOLA_TOL = 1e-12


def as_number(x) -> Number:
    """Coerce ``x`` to a Fraction when it is rational, else to float."""
    if isinstance(x, bool):
        raise TypeError("boolean is not an exponent")
    if isinstance(x, Rational):
        return Fraction(x)
    if isinstance(x, str):
        s = x.strip()
        try:
            return Fraction(s)
        except ValueError:
            return float(s)
    return float(x)


def conjugate(r) -> Number:
    """Hoelder conjugate r/(r-1)."""
    r = as_number(r)
    if r <= 1:
        raise ValueError(f"conjugate exponent needs r > 1, got {r}")
    return r / (r - 1)


def sobolev_star(N: int) -> Fraction:
    """2* = 2N/(N-2)."""
    return Fraction(2 * N, N - 2)


def lower_star(N: int) -> Fraction:
    """2_* = 2N/(N-4), the Paneitz exponent."""
    return Fraction(2 * N, N - 4)


@dataclass(frozen=True)
class Exponents:
    N: int
    p: Number
    q: Number
    qp: Number
    pp: Number

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise ValueError("not on the critical hyperbola: " + "; ".join(problems))

    @property
    def exact(self) -> bool:
        return all(isinstance(x, Fraction) for x in (self.p, self.q, self.qp, self.pp))

    @property
    def floats(self) -> tuple[float, float, float, float]:
        """(p, q, q', p') as floats."""
        return float(self.p), float(self.q), float(self.qp), float(self.pp)

    def violations(self, tol: float = HYPERBOLA_TOL) -> list[str]:
        N, p, q, qp, pp = self.N, self.p, self.q, self.qp, self.pp
        out = []
        lower = Fraction(N, N - 2) if N > 2 else 0
        if N < 4:
            out.append(f"N={N} < 4")
        if not (p > lower and q > lower):
            out.append("exponents must exceed N/(N-2)")
            return out
        checks = {
            "1/p+1/q=(N-2)/N": 1 / p + 1 / q - Fraction(N - 2, N),
            "q'=q/(q-1)": qp - q / (q - 1),
            "p'=p/(p-1)": pp - p / (p - 1),
            "p=Nq'/(N-2q')": p - N * qp / (N - 2 * qp),
            "1/q'-1/p=2/N": 1 / qp - 1 / p - Fraction(2, N),
        }
        for name, gap in checks.items():
            # p blows up as q nears the asymptote; compare p relative to its size
            scale = max(1.0, abs(float(p))) if name.startswith("p=") else 1.0
            if abs(float(gap)) > tol * scale:
                out.append(f"{name} off by {float(gap):.3e}")
        return out

    def as_dict(self) -> dict:
        d = {k: str(getattr(self, k)) for k in ("p", "q", "qp", "pp")}
        return {"N": self.N, **d, "exact": self.exact}

    @classmethod
    def from_dict(cls, d: dict) -> "Exponents":
        q = Fraction(d["q"]) if d.get("exact", True) else float(d["q"])
        return hyperbola_complete(int(d["N"]), q=q)


def hyperbola_complete(N: int, p=None, q=None) -> Exponents:
    """Complete ``(N, p)`` or ``(N, q)`` to the full exponent record.

    Raises ValueError for N <= 3 or for a given exponent at or below the
    asymptote N/(N-2).
    """
    if (p is None) == (q is None):
        raise ValueError("give exactly one of p or q")
    if int(N) != N or N <= 3:
        raise ValueError(f"dimension must be an integer >= 4, got {N}")
    N = int(N)
    given = as_number(p if p is not None else q)
    if given <= Fraction(N, N - 2):
        raise ValueError(f"exponent {given} must exceed N/(N-2) = {Fraction(N, N - 2)}")
    if p is not None:
        p_ = given
        pp = conjugate(p_)
        # symmetric role: q = N p'/(N - 2p')
        q_ = N * pp / (N - 2 * pp)
        qp = conjugate(q_)
    else:
        q_ = given
        qp = conjugate(q_)
        p_ = N * qp / (N - 2 * qp)
        pp = conjugate(p_)
    return Exponents(N=N, p=p_, q=q_, qp=qp, pp=pp)


def special_case(e: Exponents) -> str:
    """Tag the exponent pair: 'yamabe' (p=q=2*), 'paneitz' (q=2) or 'generic'."""
    star = sobolev_star(e.N)
    if _close(e.p, star) and _close(e.q, star):
        return "yamabe"
    if _close(e.q, 2):
        return "paneitz"
    return "generic"


def _close(a, b) -> bool:
    if isinstance(a, Fraction) and isinstance(b, (int, Fraction)):
        return a == b
    return abs(float(a) - float(b)) <= HYPERBOLA_TOL
