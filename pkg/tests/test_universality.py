import numpy as np
import pytest

from betalab import ensembles as ens
from betalab import universality as uni
from betalab.errors import NumericalError, UsageError

import oracles


# ----------------------------------------------------------------------
# CLT reports


def test_clt_predictions_match_oracles(gauss_eq, sample_cache):
    h = lambda x: np.asarray(x, dtype=float) ** 2
    for beta, seed in ((1.0, 21), (2.0, 22), (4.0, 23)):
        s = sample_cache("gaussian", n=150, beta=beta, count=1500, seed=seed)
        rep = uni.clt_report(s, h, gauss_eq, name="square", h_prime=lambda x: 2.0 * x)
        assert abs(rep.pred_mean - oracles.mean_shift_square_oracle(beta)) < 1e-9
        want_var = oracles.variance_form_oracle(h) / beta
        assert abs(rep.pred_var - want_var) < 1e-7
        assert abs(rep.centering - s.n) < 1e-9
        assert rep.passed(z_max=3.5)


def test_clt_cos_prediction(gauss_eq, sample_cache):
    s = sample_cache("gaussian", n=150, beta=1.0, count=1500, seed=21)
    rep = uni.clt_report(s, np.cos, gauss_eq, name="cos", h_prime=lambda x: -np.sin(x))
    assert abs(rep.pred_mean - oracles.mean_shift_cos_oracle(1.0)) < 1e-9
    assert rep.passed(z_max=3.5)


def test_clt_exact_variance_anchor(gauss_eq, sample_cache):
    # Var(sum lambda) = 2/beta with no n-dependence; at beta = 2 it is 1
    s = sample_cache("gaussian", n=150, beta=2.0, count=1500, seed=22)
    rep = uni.clt_report(s, lambda x: np.asarray(x, dtype=float), gauss_eq, name="total")
    assert abs(rep.pred_var - 1.0) < 1e-10
    assert abs(rep.pred_mean) < 1e-12
    assert rep.passed(z_max=3.5)


# ----------------------------------------------------------------------
# local statistics


def test_unfolded_gap_mean_is_unit(gauss_eq, sample_cache):
    s = sample_cache("gaussian", n=150, beta=2.0, count=1500, seed=22)
    gaps = uni.unfold_gaps(s, gauss_eq, 0.0, 0.15)
    assert gaps.size > 3000
    assert abs(gaps.mean() - 1.0) < 0.05


def test_unfold_rejects_bad_window(gauss_eq, sample_cache):
    s = sample_cache("gaussian", n=150, beta=2.0, count=1500, seed=22)
    with pytest.raises(UsageError):
        uni.unfold_gaps(s, gauss_eq, 2.5, 0.1)
    with pytest.raises(UsageError):
        uni.unfold_gaps(s, gauss_eq, 0.0, -0.1)


def test_phi_estimate_basic(gauss_eq, sample_cache):
    s = sample_cache("gaussian", n=150, beta=2.0, count=1500, seed=22)
    est = uni.phi_estimate(s, gauss_eq, 0.0, lambda u: np.exp(-0.5 * u * u))
    assert est.count == s.count
    assert est.value > 0.1
    assert est.se < est.value


def test_split_noise_floor_sane(gauss_eq, sample_cache):
    s = sample_cache("gaussian", n=150, beta=2.0, count=1500, seed=22)
    floor = uni.split_noise_floor(s, gauss_eq, 0.0, 0.15)
    assert 0.0 < floor < 0.2


def test_same_law_distance_within_floor(gauss_eq, sample_cache):
    a = sample_cache("gaussian", n=150, beta=2.0, count=1500, seed=22)
    b = sample_cache("gaussian", n=150, beta=2.0, count=1500, seed=31)
    dist = uni.universality_distance(a, gauss_eq, 0.0, b, gauss_eq, 0.0, 0.15)
    assert dist.ks_distance < dist.noise_floor + 0.02
    assert dist.passed()


def test_mismatched_samples_rejected(gauss_eq, sample_cache):
    a = sample_cache("gaussian", n=150, beta=2.0, count=1500, seed=22)
    c = sample_cache("gaussian", n=40, beta=2.0, count=60, seed=1)
    with pytest.raises(UsageError):
        uni.universality_distance(a, gauss_eq, 0.0, c, gauss_eq, 0.0, 0.15)


def test_empty_window_reported(gauss_eq, sample_cache):
    s = sample_cache("gaussian", n=40, beta=2.0, count=60, seed=1)
    with pytest.raises(NumericalError) as err:
        uni.split_noise_floor(s, gauss_eq, 1.999, 1e-7)
    assert err.value.code == "empty-window"


# ----------------------------------------------------------------------
# structural identities


def _probe_configs(count, n, seed, lo=-2.05, hi=2.05):
    rng = np.random.default_rng(seed)
    return rng.uniform(lo, hi, (count, n))


def test_energy_identity_constancy(quartic_eq, quartic_tmap, quartic_spectrum):
    configs = _probe_configs(50, 8, seed=5)
    out = uni.hamiltonian_identity_residual(
        quartic_eq, quartic_tmap, quartic_spectrum, 2.0, configs
    )
    assert out.residual < 1e-6
    assert abs(out.constant - out.predicted_constant) < 1e-6


def test_energy_identity_other_beta(quartic_eq, quartic_tmap, quartic_spectrum):
    configs = _probe_configs(20, 8, seed=6)
    out = uni.hamiltonian_identity_residual(
        quartic_eq, quartic_tmap, quartic_spectrum, 1.0, configs
    )
    assert out.residual < 1e-6


def test_energy_identity_truncation_control(quartic_eq, quartic_tmap, quartic_spectrum):
    configs = _probe_configs(50, 8, seed=5)
    out = uni.hamiltonian_identity_residual(
        quartic_eq, quartic_tmap, quartic_spectrum, 2.0, configs, modes=2
    )
    assert out.residual > 1e-2


def test_energy_identity_perturbed_map_control(quartic_eq, quartic_tmap, quartic_spectrum):
    configs = _probe_configs(50, 8, seed=5)
    bad = oracles.PerturbedMap(quartic_tmap)
    out = uni.hamiltonian_identity_residual(
        quartic_eq, bad, quartic_spectrum, 2.0, configs
    )
    assert out.residual > 1e-2


def test_energy_identity_guards(quartic_eq, quartic_tmap, quartic_spectrum):
    with pytest.raises(UsageError):
        uni.hamiltonian_identity_residual(
            quartic_eq, quartic_tmap, quartic_spectrum, 2.0, np.array([[0.3]])
        )
    twin = np.array([[0.5, 0.5, 1.0]])
    with pytest.raises(NumericalError) as err:
        uni.hamiltonian_identity_residual(
            quartic_eq, quartic_tmap, quartic_spectrum, 2.0, twin
        )
    assert err.value.code == "coincident-nodes"


def test_linearization_two_routes(quartic_eq, quartic_tmap, quartic_spectrum):
    obs = lambda c: (c**2).sum(axis=1)
    out = uni.linearization_check(
        quartic_eq, quartic_tmap, quartic_spectrum, 2.0, obs, n=2, modes=3
    )
    assert out.rel_discrepancy < 1e-3
    assert out.left > 0 and out.right > 0


def test_linearization_truncation_control(quartic_eq, quartic_tmap, quartic_spectrum):
    # dropping every mode leaves only the reference law: two orders above budget
    obs = lambda c: (c**2).sum(axis=1)
    out = uni.linearization_check(
        quartic_eq, quartic_tmap, quartic_spectrum, 2.0, obs, n=2, modes=0
    )
    assert out.rel_discrepancy > 2e-3


def test_linearization_jacobian_control(quartic_eq, quartic_tmap, quartic_spectrum):
    # discarding the log-derivative reweighting must be loud away from beta=2
    obs = lambda c: (c**2).sum(axis=1)
    full = uni.linearization_check(
        quartic_eq, quartic_tmap, quartic_spectrum, 1.0, obs, n=2, modes=3
    )
    assert full.rel_discrepancy < 1e-3
    broken = uni.linearization_check(
        quartic_eq, quartic_tmap, quartic_spectrum, 1.0, obs, n=2, modes=3,
        jacobian_weight=False,
    )
    assert broken.rel_discrepancy > 1e-2


def test_linearization_gaussian_degenerate(gauss_eq, gauss_tmap, gauss_spectrum):
    obs = lambda c: (c**2).sum(axis=1)
    out = uni.linearization_check(
        gauss_eq, gauss_tmap, gauss_spectrum, 2.0, obs, n=2, modes=0
    )
    assert out.rel_discrepancy < 1e-10


def test_linearization_dimension_guard(quartic_eq, quartic_tmap, quartic_spectrum):
    with pytest.raises(UsageError):
        uni.linearization_check(
            quartic_eq, quartic_tmap, quartic_spectrum, 2.0, lambda c: c.sum(axis=1), n=6
        )
