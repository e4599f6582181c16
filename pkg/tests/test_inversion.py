import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nodal_lane_emden.discretize import Field, build_grid, laplacian, load_field
from nodal_lane_emden.exponents import hyperbola_complete
from nodal_lane_emden.functional import signed_power
from nodal_lane_emden.inversion import (
    DecayFitError, SystemPair, decay_exponent, export_pair, inversion_defect, make_pair,
    second_component, system_residual,
)
from nodal_lane_emden.symmetry import SymmetrySpec, symmetrize

E44 = hyperbola_complete(4, q=4)


def radial(N=4, R=20.0, res=2000):
    return build_grid("radial_1d", N, 0, R, res)


def test_linear_case_q2():
    e = hyperbola_complete(5, q=2)
    g = radial(5, 8.0, 200)
    u = Field(g, np.exp(-g.radius**2), e)
    np.testing.assert_array_equal(second_component(u).values, -laplacian(u).values)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([(4, 4), (5, 3), (6, 4), (7, 2.5), (5, 2)]), st.integers(0, 10**6))
def test_algebraic_inverse(nq, seed):
    N, q = nq
    e = hyperbola_complete(N, q=q)
    g = radial(N, 4.0, 64)
    u = Field(g, np.random.default_rng(seed).standard_normal(g.shape), e)
    v = second_component(u)
    lap = laplacian(u).values
    back = -signed_power(v.values, float(e.q))
    assert np.abs(back - lap).max() <= 1e-12 * np.abs(lap).max()
    assert inversion_defect(u, v) <= 1e-12


def test_bubble_second_component_is_multiple():
    g = radial()
    r = g.radius
    u = Field(g, np.where(g.support, (1 + r**2) ** -1.0, 0.0), E44)
    v = second_component(u).values
    inner = r < 10
    ratio = v[inner] / u.values[inner]
    assert np.ptp(ratio) / np.mean(ratio) < 1e-3
    assert np.mean(ratio) == pytest.approx(2.0, rel=1e-3)


def test_zero_field_residuals():
    g = radial(4, 2.0, 32)
    u = Field(g, np.zeros(g.shape), E44)
    assert system_residual(u) == (0.0, 0.0)


def test_noise_negative_control():
    g = build_grid("biradial_2d", 4, 1, 4.0, 64)
    rng = np.random.default_rng(7)
    u = Field(g, np.where(g.support, rng.standard_normal(g.shape), 0.0), E44)
    r1, r2 = system_residual(u)
    assert r1 >= 0.5
    assert r2 < 1e-12


def test_grid_mismatch():
    u = Field(radial(4, 2.0, 32), np.ones(34), E44)
    v = Field(radial(4, 2.0, 64), np.ones(66), E44)
    with pytest.raises(ValueError):
        system_residual(u, v)


def test_pair_input():
    g = radial(4, 8.0, 200)
    u = Field(g, np.exp(-g.radius**2), E44)
    pair = make_pair(u)
    assert system_residual(pair) == (pair.residual_1, pair.residual_2)


# ------------------------------------------------------------ decay fits

def test_decay_power_law():
    g = radial(4, 40.0, 400)
    f = Field(g, g.radius ** -2.0)
    assert decay_exponent(f, (2.0, 30.0)) == pytest.approx(-2.0, abs=0.05)


def test_decay_bubble():
    g = radial(4, 40.0, 400)
    f = Field(g, (1 + g.radius**2) ** -1.0)
    assert decay_exponent(f, (10.0, 30.0)) == pytest.approx(-2.0, abs=0.1)


def test_decay_constant():
    g = radial(4, 40.0, 400)
    assert decay_exponent(Field(g, np.ones(g.shape)), (2.0, 30.0)) == pytest.approx(0.0, abs=0.05)


def test_decay_sign_change_unusable():
    g = radial(4, 40.0, 400)
    with pytest.raises(DecayFitError):
        decay_exponent(Field(g, np.cos(g.radius)), (2.0, 30.0))


def test_decay_window_checked():
    g = radial(4, 10.0, 100)
    with pytest.raises(ValueError):
        decay_exponent(Field(g, np.ones(g.shape)), (2.0, 30.0))


# ------------------------------------------------------------ transfer properties

def test_equivariance_transfer():
    spec = SymmetrySpec(4, 1)
    g = build_grid("biradial_2d", 4, 1, 6.0, 48)
    rng = np.random.default_rng(11)
    u = symmetrize(Field(g, rng.standard_normal(g.shape), E44), spec)
    lap = laplacian(u).values
    v = second_component(u)
    # v = |Lap u|^{1/3} Lap u / |Lap u|: round-off in Lap u near the nodal set
    # is raised to the power 1/3
    amp = (1e-13 * np.abs(lap).max()) ** (1.0 / 3.0)
    np.testing.assert_allclose(symmetrize(v, spec).values, v.values, atol=amp)
    np.testing.assert_allclose(symmetrize(laplacian(u), spec).values, lap, atol=1e-13 * np.abs(lap).max())


def test_solver_pair_on_converged_run(biradial_small):
    res = biradial_small
    u, v = res.field, res.v
    assert inversion_defect(u, v) <= 1e-12
    assert inversion_defect(u, second_component(u)) <= 1e-12
    r1, r2 = system_residual(u, v)
    assert r2 <= 1e-12
    assert r1 < 0.05
    assert u.values.max() > 0 > u.values.min()
    assert v.values.max() > 0 > v.values.min()


def test_export_pair(tmp_path, biradial_small):
    pair = make_pair(biradial_small.field, biradial_small.v)
    assert isinstance(pair, SystemPair)
    report = export_pair(pair, tmp_path / "pair")
    saved = json.loads((tmp_path / "pair" / "residuals.json").read_text())
    assert saved["residual_1"] == report["residual_1"]
    assert saved["residual_2"] == report["residual_2"]
    back = load_field(tmp_path / "pair" / "v.lefd")
    np.testing.assert_array_equal(back.values, pair.v.values)
