import numpy as np
import pytest

from betalab import operators as ops
from betalab.errors import UsageError

import oracles


# ----------------------------------------------------------------------
# Chebyshev plumbing


def test_cheb_coeffs_low_monomials():
    c0 = ops.cheb_coeffs(lambda x: np.ones_like(np.asarray(x, dtype=float)), 4)
    assert np.allclose(c0, [2.0, 0, 0, 0, 0], atol=1e-13)
    c1 = ops.cheb_coeffs(lambda x: np.asarray(x, dtype=float), 4)
    assert np.allclose(c1, [0, 2.0, 0, 0, 0], atol=1e-13)
    c2 = ops.cheb_coeffs(lambda x: np.asarray(x, dtype=float) ** 2, 4)
    assert np.allclose(c2, [4.0, 0, 2.0, 0, 0], atol=1e-12)


def test_cheb_coeffs_match_quadrature_oracle():
    h = np.cos
    mine = ops.cheb_coeffs(h, 8)
    for k in range(1, 9):
        assert abs(mine[k] - oracles.cheb_coeff_oracle(h, k)) < 1e-10


def test_cheb_roundtrip_and_derivative():
    h = lambda x: np.exp(0.3 * x) * np.sin(x)
    c = ops.cheb_coeffs(h, 40)
    xs = np.linspace(-2.0, 2.0, 23)
    assert np.max(np.abs(ops.cheb_val(c, xs, ops.SIGMA) - h(xs))) < 1e-12
    dc = ops.cheb_der(c, ops.SIGMA)
    want = np.exp(0.3 * xs) * (0.3 * np.sin(xs) + np.cos(xs))
    assert np.max(np.abs(ops.cheb_val(dc, xs, ops.SIGMA) - want)) < 1e-10


# ----------------------------------------------------------------------
# covariance operator


def test_apply_cov_op_first_mode():
    # T_1(x/2) maps to (1/pi) T_1 / weight; closed form: x / (pi sqrt(4 - x^2))
    xs = np.linspace(-1.9, 1.9, 41)
    got = ops.apply_cov_op(lambda t: np.asarray(t, dtype=float), xs)
    want = xs / (np.pi * np.sqrt(4.0 - xs * xs))
    assert np.max(np.abs(got - want)) < 1e-9


def test_cov_form_anchor_values():
    lin = ops.cov_form(lambda x: np.asarray(x, dtype=float))
    assert abs(lin.pv - 2.0) < 1e-10
    sq = ops.cov_form(lambda x: np.asarray(x, dtype=float) ** 2)
    assert abs(sq.pv - 4.0) < 1e-10
    assert abs(lin.kappa - np.sqrt(0.5)) < 1e-6


def test_cov_form_route_agreement_random_polynomials():
    rng = np.random.default_rng(11)
    for _ in range(20):
        deg = int(rng.integers(1, 11))
        coeffs = rng.standard_normal(deg + 1) / np.arange(1.0, deg + 2.0)
        poly = np.polynomial.Polynomial(coeffs)
        form = ops.cov_form(poly, h_prime=poly.deriv())
        assert form.rel_discrepancy < 1e-6


def test_cov_form_matches_mode_sum_oracle():
    h = np.cos
    form = ops.cov_form(h, h_prime=lambda x: -np.sin(x))
    want = oracles.variance_form_oracle(h)
    assert abs(form.pv - want) < 1e-8


# ----------------------------------------------------------------------
# log kernel


def test_log_kernel_semicircle_closed_form():
    apply_log = ops.log_kernel_apply(ops.semicircle_density)
    xs = np.linspace(-1.95, 1.95, 31)
    assert np.max(np.abs(apply_log(xs) - (xs * xs / 4.0 - 0.5))) < 1e-10


def test_log_kernel_matches_quadrature_oracle():
    apply_log = ops.log_kernel_apply(ops.semicircle_density)
    for lam in (-1.3, 0.0, 0.7, 1.9, 2.0):
        assert abs(apply_log(np.array([lam]))[0] - oracles.log_potential_semicircle_oracle(lam)) < 1e-9


def test_rank_one_inversion_identity():
    tests = [
        lambda x: np.asarray(x, dtype=float) ** 3,
        np.cos,
        lambda x: np.exp(0.5 * np.asarray(x, dtype=float)),
        lambda x: 1.0 / (1.0 + np.asarray(x, dtype=float) ** 2),
    ]
    for fn in tests:
        assert ops.rank_one_identity_residual(fn) < 1e-8


def test_adjointness_on_grid():
    assert ops.adjointness_residual(np.cos, lambda x: np.asarray(x, dtype=float) ** 2) < 1e-8


# ----------------------------------------------------------------------
# transported kernel spectrum


def test_gaussian_kernel_spectrum_degenerate(gauss_spectrum):
    assert np.max(np.abs(gauss_spectrum.eigenvalues)) < 1e-10
    assert gauss_spectrum.truncation == 0


def test_quartic_kernel_top_modes_frozen(quartic_spectrum):
    want = np.array([0.1984524, -0.1765541, -0.1143458, -2.783118e-4, 2.176301e-5, -5.371947e-7])
    got = quartic_spectrum.eigenvalues[:6]
    assert np.max(np.abs(got - want)) < 1e-6
    assert quartic_spectrum.decay_rate > 1.0
    assert quartic_spectrum.tail < 1e-12


def test_kernel_matrix_reconstruction(quartic_tmap, quartic_spectrum):
    grid = quartic_spectrum.grid
    kmat = ops.kernel_matrix(quartic_tmap, grid)
    s = np.sqrt(grid.weights)
    a = s[:, None] * kmat * s[None, :]
    m = quartic_spectrum.truncation
    vals = np.stack([quartic_spectrum.phi(grid.nodes, k) for k in range(m)], axis=1)
    recon = (vals * quartic_spectrum.eigenvalues[:m]) @ vals.T
    recon = s[:, None] * recon * s[None, :]
    assert np.max(np.abs(a - recon)) < 1e-10


def test_modal_double_sum_agreement(quartic_tmap, quartic_spectrum):
    rng = np.random.default_rng(3)
    m = quartic_spectrum.truncation
    eta = quartic_spectrum.eigenvalues[:m]
    for _ in range(5):
        pts = rng.uniform(-2.1, 2.1, 16)
        direct = float(ops.log_ratio_kernel(quartic_tmap, pts[:, None], pts[None, :]).sum())
        sums = np.array([quartic_spectrum.phi(pts, k).sum() for k in range(m)])
        assert abs(direct - float(eta @ (sums * sums))) < 1e-9


def test_mode_orthonormality(quartic_spectrum):
    grid = quartic_spectrum.grid
    m = min(quartic_spectrum.stored, 8)
    vals = np.stack([quartic_spectrum.phi(grid.nodes, k) for k in range(m)], axis=1)
    gram = vals.T @ (grid.weights[:, None] * vals)
    assert np.max(np.abs(gram - np.eye(m))) < 1e-9


@pytest.mark.parametrize("g,nplus,nminus", [
    (0.02, 0.006759, 0.009954),
    (0.05, 0.017125, 0.024749),
    (0.1, 0.034944, 0.049215),
    (0.2, 0.072399, 0.098367),
])
def test_contraction_norms(g, nplus, nminus):
    from betalab.equilibrium import solve_equilibrium
    from betalab.potentials import make_potential
    from betalab.transport import solve_transport

    eq = solve_equilibrium(make_potential("even-quartic", g=g))
    tmap = solve_transport(eq)
    grid = ops.cheb_grid(256, eq.interval)
    spec = ops.eigendecompose(ops.kernel_matrix(tmap, grid), grid)
    cm = ops.contraction_matrices(spec)
    assert cm.contractive
    assert max(cm.norm_plus, cm.norm_minus) < 1.0 - 1e-3
    assert abs(cm.norm_plus - nplus) < 1e-4
    assert abs(cm.norm_minus - nminus) < 1e-4


# ----------------------------------------------------------------------
# CLT functionals


def test_mean_shift_square_anchors(gauss_eq):
    h = lambda x: np.asarray(x, dtype=float) ** 2
    for beta in (1.0, 2.0, 4.0):
        got = (2.0 / beta) * ops.mean_shift_pairing(h, gauss_eq, beta)
        assert abs(got - oracles.mean_shift_square_oracle(beta)) < 1e-9


def test_mean_shift_cos_anchor(gauss_eq):
    got = (2.0 / 1.0) * ops.mean_shift_pairing(np.cos, gauss_eq, 1.0)
    assert abs(got - oracles.mean_shift_cos_oracle(1.0)) < 1e-9


def test_mean_shift_quartic_moment_anchor(gauss_eq):
    # E tr M^4 = 2n + 5 + 5/n at beta = 1 (Wick count), so the shift is 5
    h = lambda x: np.asarray(x, dtype=float) ** 4
    for beta in (1.0, 4.0):
        got = (2.0 / beta) * ops.mean_shift_pairing(h, gauss_eq, beta)
        assert abs(got - 5.0 * (2.0 / beta - 1.0)) < 1e-9


def test_mean_shift_vanishes_at_beta_two(quartic_eq):
    for h in (np.cos, lambda x: np.asarray(x, dtype=float) ** 2):
        assert abs(ops.mean_shift_pairing(h, quartic_eq, 2.0)) < 1e-12


def test_deformation_identity_constancy(quartic_eq, quartic_tmap, gauss_eq, gauss_tmap):
    dq = ops.deformation_residual(quartic_eq, quartic_tmap)
    assert dq.residual < 1e-6
    assert abs(dq.constant - (quartic_eq.robin_constant + 1.0)) < 1e-8
    dg = ops.deformation_residual(gauss_eq, gauss_tmap)
    assert dg.residual < 1e-6
    assert abs(dg.constant) < 1e-8


def test_deformation_negative_control(quartic_eq, quartic_tmap):
    bad = oracles.PerturbedMap(quartic_tmap)
    res = ops.deformation_residual(quartic_eq, bad)
    assert res.residual > 1e-2


def test_out_of_domain_rejected():
    with pytest.raises(UsageError):
        ops.apply_cov_op(np.cos, np.array([2.5]))
