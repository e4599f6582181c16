import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nodal_lane_emden.discretize import Field, build_annulus, build_grid
from nodal_lane_emden.exponents import hyperbola_complete, sobolev_star
from nodal_lane_emden.kelvin import (
    KelvinReport, LogProfileGrid, bump, harmonic_bump, isometry_defect, kelvin_constant,
    kelvin_transform, lp_isometry_defect, operator_fit, radial_kelvin, rational_sweep,
    zero_locus_sweep,
)


# ------------------------------------------------------------ constant

def test_constant_paneitz():
    r = kelvin_constant(hyperbola_complete(5, q=2))
    assert (r.alpha, r.A, r.B) == (-1.0, -2.0, -3.0)
    assert r.constant_C == 0.0 and r.is_zero


def test_constant_yamabe_n6():
    r = kelvin_constant(hyperbola_complete(6, q=3))
    assert r.alpha == -4.0 and r.A == 0.0
    assert r.constant_C == 0.0 and r.is_zero


def test_constant_n6_q4():
    r = kelvin_constant(hyperbola_complete(6, q=4))
    assert r.alpha == -5.0 and r.A == 5.0
    assert r.B == pytest.approx(-7.0 / 3.0, abs=1e-15)
    assert r.constant_C == pytest.approx(5 ** (1 / 3) * (-35 / 9), rel=1e-14)
    assert r.constant_C == pytest.approx(-6.648, abs=5e-3)
    assert not r.is_zero


def test_report_json_roundtrip():
    r = kelvin_constant(hyperbola_complete(6, q=4))
    assert KelvinReport(**json.loads(r.to_json())) == r


def test_zero_locus_sweep():
    rows = zero_locus_sweep()
    assert len(rows) == 7 * 50
    assert all(z == exp for _, _, z, exp in rows)
    for N in range(4, 11):
        zeros = {q for n, q, z, _ in rows if n == N and z}
        assert zeros == ({sobolev_star(N), Fraction(2)} if N >= 5 else {sobolev_star(N)})


def test_sweep_points_exact_and_distinct():
    pts = rational_sweep(7)
    assert len({e.q for e in pts}) == 50
    assert all(isinstance(e.q, Fraction) for e in pts)


@settings(max_examples=50, deadline=None)
@given(st.integers(4, 10), st.integers(1, 400), st.integers(1, 60))
def test_is_zero_only_on_branches(N, a, b):
    q = Fraction(N, N - 2) + Fraction(a, b)
    e = hyperbola_complete(N, q=q)
    assert kelvin_constant(e).is_zero == (q == sobolev_star(N) or q == 2)


# ------------------------------------------------------------ transform

def test_power_profiles():
    e = hyperbola_complete(5, q=3)
    g = build_annulus(5, 0.5, 2.0, 200)
    alpha = -2 * 5 / float(e.p)
    r = g.radius
    np.testing.assert_allclose(kelvin_transform(lambda x: x**alpha, e, g).values, 1.0, rtol=1e-13)
    np.testing.assert_allclose(kelvin_transform(lambda x: np.ones_like(x), e, g).values, r**alpha, rtol=1e-13)
    half = kelvin_transform(lambda x: x ** (alpha / 2), e, g).values
    np.testing.assert_allclose(half, r ** (alpha / 2), rtol=1e-13)


def test_involution():
    e = hyperbola_complete(5, q=3)
    g = build_annulus(5, 0.5, 2.0, 400)
    u = Field(g, np.exp(-(g.radius - 1.1) ** 2 * 4), e)
    back = kelvin_transform(kelvin_transform(u, e), e)
    assert np.abs(back.values - u.values).max() <= 1e-3


def test_origin_rejected():
    e = hyperbola_complete(4, q=4)
    g = build_grid("radial_1d", 4, 0, 2.0, 32)
    with pytest.raises(ValueError):
        kelvin_transform(lambda r: r, e, g)


def test_callable_needs_grid():
    with pytest.raises(ValueError):
        kelvin_transform(lambda r: r, hyperbola_complete(4, q=4))


@pytest.mark.parametrize("N,q", [(4, 4), (5, 2), (5, 3), (6, 4), (6, 3), (7, 1.6)])
def test_lp_isometry(N, q):
    assert lp_isometry_defect(hyperbola_complete(N, q=q)) <= 1e-2


def test_lp_isometry_field_quadrature():
    e = hyperbola_complete(5, q=2)
    g = build_annulus(5, 0.25, 4.0, 4000)
    b = bump(1.3)
    u = Field(g, b(g.radius), e)
    ui = kelvin_transform(b, e, g)
    p = float(e.p)
    lp = lambda f: float(np.sum(np.abs(f.values) ** p * g.weights)) ** (1 / p)
    assert lp(ui) == pytest.approx(lp(u), rel=1e-2)


# ------------------------------------------------------------ seminorm defect

@pytest.mark.parametrize("N,q", [(5, 2), (6, 3), (4, 4)])
def test_defect_small_on_branches(N, q):
    e = hyperbola_complete(N, q=q)
    d = [isometry_defect(e, n) for n in (512, 1024)]
    assert d[0] <= 1e-2
    assert d[1] <= d[0] or d[1] < 1e-12


def test_defect_positive_off_branches():
    e = hyperbola_complete(6, q=4)
    d = [isometry_defect(e, n) for n in (512, 1024, 2048)]
    assert min(d) >= 0.05
    assert np.ptp(d) <= 1e-3 * d[0]


def test_defect_dilation_invariant():
    e = hyperbola_complete(6, q=4)
    per = isometry_defect(e, 4096, per_profile=True)
    # plain bumps converge slowly: |Lap u|^{4/3} is not smooth at zeros of Lap u
    assert np.ptp(per[:3]) < 2e-4 and np.ptp(per[3:]) < 2e-5


def test_defect_needs_three_profiles():
    with pytest.raises(ValueError):
        isometry_defect(hyperbola_complete(6, q=4), centers=(1.0, 2.0))


def test_log_grid_laplacian():
    g = LogProfileGrid(5, annulus=(0.1, 10.0), resolution=1024)
    f = np.exp(-(g.r - 1) ** 2)
    exact = (4 * (g.r - 1) ** 2 - 2 - 2 * (5 - 1) * (g.r - 1) / g.r) * f
    inner = slice(4, -4)
    assert np.abs(g.laplacian(f)[inner] - exact[inner]).max() < 1e-6


def test_radial_kelvin_matches_transform():
    e = hyperbola_complete(6, q=4)
    g = build_annulus(6, 0.5, 2.0, 100)
    b = bump(1.0)
    np.testing.assert_allclose(kelvin_transform(b, e, g).values,
                               radial_kelvin(b, e)(g.radius), rtol=1e-12, atol=1e-14)


# ------------------------------------------------------------ operator check

@pytest.mark.parametrize("N,q", [(6, 4), (5, 3), (7, 1.75), (8, 5)])
def test_operator_fit(N, q):
    fit = operator_fit(hyperbola_complete(N, q=q))
    assert fit.power_error < 0.05
    assert fit.constant_error < 0.05


@pytest.mark.parametrize("N", [5, 7])
def test_operator_vanishes_on_paneitz_branch(N):
    e = hyperbola_complete(N, q=2)
    rep = kelvin_constant(e)
    # round-off in the double laplacian grows like h^-4; stay coarse
    g = build_annulus(N, 0.5, 2.0, 512)
    r = g.radius
    w = g.laplacian_matrix @ r**rep.alpha
    out = (g.laplacian_matrix @ w)[8:-8]
    assert np.abs(out).max() < 1e-5 * np.abs(w / r**2)[8:-8].max()


def test_operator_fit_A_zero():
    with pytest.raises(ValueError):
        operator_fit(hyperbola_complete(6, q=3))
