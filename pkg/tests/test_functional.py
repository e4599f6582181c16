import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nodal_lane_emden.discretize import Field, build_grid, integrate
from nodal_lane_emden.exponents import hyperbola_complete
from nodal_lane_emden.functional import (
    RECORDED_C0, EnergyModel, energy, gradient, monotonicity_constant, monotonicity_gap,
    nehari_project, nehari_scale, rescale,
)
from nodal_lane_emden.symmetry import SymmetrySpec, symmetrize

E44 = hyperbola_complete(4, q=4)


def cutoff(r, R):
    """Smooth step: 1 for r <= R/2, 0 for r >= 0.9 R."""
    x = np.clip((r / R - 0.5) / 0.4, 0, 1)
    return np.where(x < 1, np.exp(-x**2 / np.maximum(1 - x**2, 1e-300)), 0.0)


def bubble_field(R=40.0, res=4000, e=E44):
    """(1 + r^2)^{-(N-2)/2}, smoothly cut off so it lies in the clamped space."""
    g = build_grid("radial_1d", e.N, 0, R, res)
    return Field(g, np.where(g.support, (1 + g.radius**2) ** (-(e.N - 2) / 2) * cutoff(g.radius, R), 0.0), e)


def test_zero_field():
    g = build_grid("radial_1d", 4, 0, 2.0, 32)
    rep = energy(Field(g, np.zeros(g.shape), E44))
    assert (rep.seminorm_qp, rep.lp_norm_p, rep.energy, rep.nehari_defect) == (0, 0, 0, 0)
    assert np.all(gradient(Field(g, np.zeros(g.shape), E44)).values == 0)


def gentle_cutoff(r, R):
    x = np.clip((r / R - 0.1) / 0.85, 0, 1)
    return np.where(x < 1, np.exp(-x**2 / np.maximum(1 - x**2, 1e-300)), 0.0)


def test_bubble_norms_quadrature():
    g = build_grid("radial_1d", 4, 0, 40.0, 4000)
    r = g.radius
    u = (1 + r**2) ** -1.0
    inner = r < 40.0 - 3 * g.spacings[0]
    lap = g.laplacian_matrix @ u
    w = g.weights
    assert np.sum((w * np.abs(lap) ** (4 / 3))[inner]) == pytest.approx(8 * np.pi**2 / 3, rel=2e-2)
    assert np.sum((w * u**4)[inner]) == pytest.approx(np.pi**2 / 6, rel=2e-2)


def test_clamped_bubble_tail_decay():
    # a clamped field pays for its cutoff layer; the excess decays like R^{-4/3}
    excess = []
    for R in (40.0, 80.0):
        g = build_grid("radial_1d", 4, 0, R, int(100 * R))
        u = Field(g, np.where(g.support, (1 + g.radius**2) ** -1.0 * gentle_cutoff(g.radius, R), 0.0), E44)
        rep = energy(u)
        assert rep.lp_norm_p == pytest.approx(np.pi**2 / 6, rel=2e-3)
        excess.append(rep.seminorm_qp / (8 * np.pi**2 / 3) - 1)
    assert 0 < excess[1] < excess[0] < 0.06
    assert np.log2(excess[0] / excess[1]) == pytest.approx(4 / 3, abs=0.15)


def test_energy_identity_and_json():
    rep = energy(bubble_field(R=10, res=200))
    assert rep.energy == pytest.approx(rep.seminorm_qp * 3 / 4 - rep.lp_norm_p / 4, rel=1e-14)
    d = json.loads(rep.to_json(N=4))
    assert set(d) >= {"seminorm_qp", "lp_norm_p", "energy", "nehari_defect", "quotient", "N"}


@given(st.floats(0.1, 10))
def test_homogeneity(t):
    u = bubble_field(R=10, res=200)
    a = energy(u).seminorm_qp
    b = energy(u.with_values(t * u.values)).seminorm_qp
    assert b == pytest.approx(t ** (4 / 3) * a, rel=1e-12)


# ------------------------------------------------------------ gradient

def smooth_directions(grid, count, seed, reach=0.4):
    """Random smooth directions supported in r < 0.9 * reach * R, away from
    the cutoff layer where Lap u changes sign."""
    rng = np.random.default_rng(seed)
    r = grid.radius
    R = reach * grid.extent
    for _ in range(count):
        c = rng.standard_normal(4)
        w = rng.uniform(0.3, 2.0, 4)
        h = sum(ck * np.exp(-(r / wk) ** 2) for ck, wk in zip(c, w)) + 0.3 * rng.standard_normal() * r**2 / R**2
        yield np.where(grid.support, h * cutoff(r, R), 0.0)


def fd_errors(u, eps=1e-5, count=20, seed=0):
    model = EnergyModel(u.grid, u.exponents)
    x = u.values.ravel()
    g = gradient(u).values.ravel()
    w = u.grid.weights.ravel()
    out = []
    for h in smooth_directions(u.grid, count, seed):
        h = h.ravel()
        fd = (model.energy(x + eps * h) - model.energy(x - eps * h)) / (2 * eps)
        an = float(np.sum(w * g * h))
        out.append(abs(fd - an) / max(abs(an), 1e-300))
    return np.array(out)


@pytest.mark.parametrize("q", [4, 3, 2])
def test_gradient_directional(q):
    e = hyperbola_complete(6, q=q)
    g = build_grid("radial_1d", 6, 0, 8.0, 400)
    u = Field(g, np.where(g.support, 2 * (1 + g.radius**2) ** -2.0 * cutoff(g.radius, 8.0), 0.0), e)
    assert fd_errors(u).max() < 1e-5


def test_gradient_biradial():
    g = build_grid("biradial_2d", 4, 1, 6.0, 64)
    u = Field(g, np.where(g.support, (1 + g.radius**2) ** -1.0 * cutoff(g.radius, 6.0), 0.0), E44)
    assert fd_errors(u, count=5).max() < 1e-5


def test_gradient_inherits_symmetry():
    spec = SymmetrySpec(4, 1)
    g = build_grid("biradial_2d", 4, 1, 6.0, 48)
    s, t = g.mesh()
    u = Field(g, (s**2 - t**2) * (1 + g.radius**2) ** -3.0 * cutoff(g.radius, 6.0), E44, spec)
    grad = gradient(u)
    sym = symmetrize(grad, spec)
    assert np.abs(sym.values - grad.values).max() <= 1e-13 * np.abs(grad.values).max()


# ------------------------------------------------------------ Nehari

def test_nehari_scale_unit():
    u = nehari_project(bubble_field(R=10, res=200))
    assert nehari_scale(u) == pytest.approx(1.0, rel=1e-12)


def test_nehari_scale_ratio_two():
    u = nehari_project(bubble_field(R=10, res=200))
    u = u.with_values(2 ** (-3 / 8) * u.values)
    rep = energy(u)
    assert rep.seminorm_qp / rep.lp_norm_p == pytest.approx(2.0, rel=1e-12)
    assert nehari_scale(u) == pytest.approx(2 ** (3 / 8), rel=1e-12)


def test_nehari_defect_and_level_identity():
    u = nehari_project(bubble_field(R=10, res=200))
    rep = energy(u)
    assert abs(rep.nehari_defect) <= 1e-12 * rep.seminorm_qp
    assert rep.energy == pytest.approx(2 / 4 * rep.seminorm_qp, rel=1e-12)


def test_fibering_scan():
    u = bubble_field(R=10, res=200)
    t_star = nehari_scale(u)
    ts = t_star * np.linspace(0.2, 3.0, 281)
    J = np.array([energy(u.with_values(t * u.values)).energy for t in ts])
    k = int(np.argmax(J))
    assert np.all(np.diff(J[:k + 1]) > 0) and np.all(np.diff(J[k:]) < 0)
    assert ts[k] == pytest.approx(t_star, rel=1e-2)


def test_nehari_scale_rejects_zero():
    g = build_grid("radial_1d", 4, 0, 2.0, 32)
    with pytest.raises(ValueError):
        nehari_scale(Field(g, np.zeros(g.shape), E44))


# ------------------------------------------------------------ rescaling

def test_rescale_identity():
    u = bubble_field(R=10, res=200)
    np.testing.assert_allclose(rescale(u, 1.0).values, u.values, atol=1e-14)


def test_rescale_preserves_lp():
    g = build_grid("radial_1d", 4, 0, 40.0, 4000)

    def f(r):
        return (1 + r**2) ** -1.0

    base = integrate(Field(g, f(g.radius) ** 4))
    for eps in (0.5, 2.0):
        v = rescale(f, eps, grid=g, exponents=E44)
        assert integrate(Field(g, v.values**4)) == pytest.approx(base, rel=1e-2)


def test_rescale_energy_invariance_closed_form():
    big = build_grid("radial_1d", 4, 0, 20.0, 2000)
    small = build_grid("radial_1d", 4, 0, 10.0, 2000)

    def f(r):
        return (1 + r**2) ** -1.0

    J = energy(rescale(f, 1.0, grid=big, exponents=E44)).energy
    J_half = energy(rescale(f, 0.5, grid=small, exponents=E44)).energy
    assert J_half == pytest.approx(J, rel=2e-2)


def test_rescale_vanishes_off_support():
    u = bubble_field(R=10, res=200)
    v = rescale(u, 3.0)
    assert np.all(v.values[~u.grid.support] == 0)


def test_rescale_needs_fixed_point():
    g = build_grid("cartesian", 5, 1, 1.0, 4)
    u = Field(g, np.ones(g.shape), hyperbola_complete(5, q=2), SymmetrySpec(5, 1))
    with pytest.raises(ValueError):
        rescale(u, 1.0, xi=[1, 0, 0, 0, 0])
    rescale(u, 1.0, xi=[0, 0, 0, 0, 0.25])


def test_rescale_rejects_nonpositive():
    with pytest.raises(ValueError):
        rescale(bubble_field(R=10, res=200), 0.0)


# ------------------------------------------------------------ monotonicity

def test_monotonicity_q2_equality():
    lhs, rhs = monotonicity_gap(np.array([1.5, -2.0]), np.array([0.5, 3.0]), 2.0, C0=1.0)
    np.testing.assert_allclose(lhs, rhs)


def test_monotonicity_q3_example():
    lhs, _ = monotonicity_gap(1.0, -1.0, 3.0, C0=1.0)
    assert float(lhs) == 4.0
    assert monotonicity_constant(3.0) <= 0.5 + 1e-9


def test_monotonicity_diagonal():
    lhs, rhs = monotonicity_gap(0.7, 0.7, 1.5)
    assert float(lhs) == 0 and float(rhs) == 0


def test_monotonicity_rejects_qp():
    with pytest.raises(ValueError):
        monotonicity_gap(1.0, 0.0, 1.0)


@pytest.mark.parametrize("qp", sorted(RECORDED_C0))
def test_recorded_constants_match_oracle(qp):
    assert monotonicity_constant(qp) == pytest.approx(RECORDED_C0[qp], rel=1e-8)


@settings(max_examples=200)
@given(st.floats(-10, 10), st.floats(-10, 10), st.sampled_from(sorted(RECORDED_C0)))
def test_monotonicity_property(s, t, qp):
    lhs, rhs = monotonicity_gap(s, t, qp)
    assert float(lhs) >= float(rhs) - 1e-12 * max(1.0, abs(float(lhs)))
