import numpy as np
import pytest

from betalab.equilibrium import EquilibriumData, recentering_coeffs, solve_equilibrium
from betalab.errors import NumericalError, UsageError
from betalab.potentials import make_potential

import oracles


def test_gaussian_density_factor_is_one(gauss_eq):
    xs = np.linspace(-2.0, 2.0, 101)
    assert np.max(np.abs(gauss_eq.p_value(xs) - 1.0)) < 1e-10
    assert abs(gauss_eq.genericity_margin - 1.0) < 1e-12
    assert abs(gauss_eq.robin_constant + 1.0) < 1e-10
    assert abs(gauss_eq.mass - 1.0) < 1e-10


def test_quartic_density_factor_closed_form(quartic_eq):
    g = 0.1
    xs = np.linspace(-2.0, 2.0, 101)
    assert np.max(np.abs(quartic_eq.p_value(xs) - (g * xs * xs + 1.0 - g))) < 1e-8
    assert abs(quartic_eq.genericity_margin - (1.0 - g)) < 1e-10


def test_quartic_density_factor_quadrature_oracle(quartic_eq):
    pot = quartic_eq.potential
    for z in (-1.7, -0.3, 0.0, 0.9, 1.999):
        assert abs(quartic_eq.p_value(z) - oracles.density_value_oracle(pot.dv, z)) < 1e-8


def test_robin_constant_gaussian_oracle(gauss_eq):
    # effective potential at an interior point, fully by quadrature
    lam = 0.37
    want = 2.0 * oracles.log_potential_semicircle_oracle(lam) - 0.5 * lam * lam
    assert abs(gauss_eq.robin_constant - want) < 1e-9


def test_density_normalization_and_positivity(quartic_eq):
    xs = np.linspace(-1.999, 1.999, 2001)
    dens = quartic_eq.density(xs)
    assert np.all(dens > 0)
    assert quartic_eq.density(2.5) == 0.0
    integral = float(np.sum(0.5 * (dens[1:] + dens[:-1])) * (xs[1] - xs[0]))
    assert abs(integral - 1.0) < 1e-3
    assert abs(quartic_eq.mass - 1.0) < 1e-10


def test_cdf_and_quantile_roundtrip(quartic_eq):
    for t in (-1.5, -0.2, 0.8, 1.9):
        q = quartic_eq.cdf(t)
        assert abs(oracles.quartic_cdf_oracle(0.1, t) - q) < 1e-10
        assert abs(quartic_eq.quantile(q) - t) < 1e-9


def test_effective_potential_residual_and_exterior(quartic_eq, gauss_eq):
    assert quartic_eq.v_residual < 1e-7
    assert gauss_eq.v_residual < 1e-7


def test_not_generic_detected():
    with pytest.raises(NumericalError) as err:
        solve_equilibrium(make_potential("even-quartic", g=1.0))
    assert err.value.code == "not-generic"


def test_unnormalized_support_rejected_with_hint():
    pot = make_potential("polynomial", coeffs=[0.0, 0.0, 1.0])  # support is not (-2, 2)
    with pytest.raises(NumericalError) as err:
        solve_equilibrium(pot)
    assert err.value.code == "variational-failure"
    assert "support_endpoints" in err.value.message


def test_edge_taylor_matches_density_factor(quartic_eq):
    g = 0.1
    left = quartic_eq.edge_taylor("left", count=6)
    right = quartic_eq.edge_taylor("right", count=6)
    # P(-2 + x) = g(x-2)^2 + 1 - g has inward coefficients (1+3g, -4g, g)
    want = np.array([1.0 + 3 * g, -4 * g, g, 0.0, 0.0, 0.0])
    assert np.allclose(left[:6], want, atol=1e-10)
    assert np.allclose(right[:6], want, atol=1e-10)


def test_serialization_roundtrip(quartic_eq):
    data = quartic_eq.to_dict()
    back = EquilibriumData.from_dict(data)
    xs = np.linspace(-1.99, 1.99, 17)
    assert np.allclose(back.p_value(xs), quartic_eq.p_value(xs), atol=1e-14)
    assert np.allclose(back.cdf(xs), quartic_eq.cdf(xs), atol=1e-14)
    assert back.robin_constant == quartic_eq.robin_constant


def test_serialization_user_potential_needs_closures(gauss_eq):
    pot = make_potential(
        "user-analytic",
        v=lambda x: 0.5 * x * x,
        dv=lambda x: np.asarray(x),
        d2v=lambda x: np.ones_like(np.asarray(x)),
        analyticity_radius=100.0,
        label="quad",
    )
    eq = solve_equilibrium(pot)
    data = eq.to_dict()
    with pytest.raises(UsageError):
        EquilibriumData.from_dict(data)
    back = EquilibriumData.from_dict(data, potential=pot)
    assert abs(back.robin_constant - eq.robin_constant) < 1e-14


def test_recentering_coefficients():
    c = recentering_coeffs(lambda x: np.full_like(np.asarray(x, dtype=float), 3.0))
    assert abs(c.c1) < 1e-9 and abs(c.c2) < 1e-9
    c = recentering_coeffs(lambda x: np.asarray(x, dtype=float))
    assert abs(c.c1 - 1.0) < 1e-9 and abs(c.c2) < 1e-9
    c = recentering_coeffs(lambda x: 0.5 * np.asarray(x, dtype=float) ** 2)
    assert abs(c.c1) < 1e-9 and abs(c.c2 - 1.0) < 1e-9


def test_exterior_effective_potential_dips_nowhere(quartic_eq):
    # no singularity outside the support, so plain quadrature suffices
    from betalab import operators as ops

    probe = 2.15
    x, w = ops.gauss_semicircle(512)
    logpot = float(w @ (quartic_eq.p_value(x) * np.log(np.abs(probe - x)))) / (2.0 * np.pi)
    vout = 2.0 * logpot - quartic_eq.potential.v(probe)
    assert vout <= quartic_eq.robin_constant + 1e-6
