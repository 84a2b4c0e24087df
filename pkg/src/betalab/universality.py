"""Fluctuation reports, local-statistics comparisons, and structural identities.

This module turns raw eigenvalue samples into the quantities the theory
actually predicts: centered linear statistics with their Gaussian limits,
unfolded local gaps, cross-ensemble comparison distances, and two exact
structural checks (the configuration-wise energy identity and the
linearization of a deformed ensemble around the reference one).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import operators as ops
from .ensembles import EnsembleSample, _log_density_ordered, _ordered_chunks, linear_statistic
from .errors import NumericalError, UsageError


# ----------------------------------------------------------------------
# central limit theorem reports


@dataclass
class CLTReport:
    """Empirical vs predicted Gaussian limit of one linear statistic."""

    name: str
    beta: float
    n: int
    count: int
    centering: float
    emp_mean: float
    emp_var: float
    pred_mean: float
    pred_var: float
    se_mean: float
    se_var: float
    z_mean: float
    z_var: float
    normality_p: float

    def passed(self, z_max: float = 3.0) -> bool:
        return abs(self.z_mean) <= z_max and abs(self.z_var) <= z_max


def _autocorr_factor(values: np.ndarray) -> float:
    """Variance inflation from residual lag-1 correlation of a thinned chain."""
    x = values - values.mean()
    denom = float(x @ x)
    if denom <= 0 or len(x) < 8:
        return 1.0
    r1 = float(x[:-1] @ x[1:]) / denom
    r1 = min(max(r1, 0.0), 0.95)
    return (1.0 + r1) / (1.0 - r1)


def clt_report(sample: EnsembleSample, h, eq, name: str = "h", h_prime=None) -> CLTReport:
    """Compare the fluctuation of sum h(eigenvalue) against its Gaussian limit.

    The statistic is centered by n times the equilibrium average of h; the
    limiting mean and variance come from the deterministic functionals of
    the equilibrium data, never from the sample itself. Standard errors
    use the sample count, inflated by residual autocorrelation when the
    sample came from a chain.
    """
    values = linear_statistic(sample, h)
    count = len(values)
    xs, ws = ops.gauss_semicircle(512)
    centering = sample.n * float(ws @ (np.asarray(h(xs), dtype=float) * eq.p_value(xs))) / (2.0 * np.pi)
    centered = values - centering
    emp_mean = float(centered.mean())
    emp_var = float(centered.var(ddof=1))
    pred_mean = (2.0 / sample.beta) * ops.mean_shift_pairing(h, eq, sample.beta)
    pred_var = ops.cov_form(h, h_prime=h_prime).pv / sample.beta
    infl = _autocorr_factor(values) if sample.kind == "metropolis-log-gas" else 1.0
    se_mean = float(np.sqrt(emp_var / count * infl))
    se_var = float(emp_var * np.sqrt(2.0 / max(count - 1, 1) * infl))
    z_mean = (emp_mean - pred_mean) / se_mean if se_mean > 0 else np.inf
    z_var = (emp_var - pred_var) / se_var if se_var > 0 else np.inf
    normality_p = float(stats.normaltest(centered).pvalue) if count >= 20 else float("nan")
    return CLTReport(
        name=name,
        beta=sample.beta,
        n=sample.n,
        count=count,
        centering=centering,
        emp_mean=emp_mean,
        emp_var=emp_var,
        pred_mean=pred_mean,
        pred_var=pred_var,
        se_mean=se_mean,
        se_var=se_var,
        z_mean=z_mean,
        z_var=z_var,
        normality_p=normality_p,
    )


# ----------------------------------------------------------------------
# local statistics


def _config_gaps(sample: EnsembleSample, eq, center: float, halfwidth: float):
    """Unfolded nearest-neighbour gaps inside the window, per configuration.

    Gaps are rescaled by n times the density at the gap midpoint, so a
    correctly sampled ensemble yields unit-mean gaps regardless of how
    the density varies across the window.
    """
    if halfwidth <= 0:
        raise UsageError("invalid-spec", f"halfwidth must be positive, got {halfwidth}")
    lo, hi = center - halfwidth, center + halfwidth
    if lo < -2.0 or hi > 2.0:
        raise UsageError(
            "invalid-spec",
            f"window [{lo:.3f}, {hi:.3f}] leaves the reference interval; "
            "local statistics are defined in the interior only",
        )
    out = []
    n = sample.n
    for row in sample.configs:
        sel = row[(row >= lo) & (row <= hi)]
        if len(sel) < 2:
            out.append(np.empty(0))
            continue
        gaps = np.diff(sel)
        mids = 0.5 * (sel[1:] + sel[:-1])
        out.append(gaps * n * eq.density(mids))
    return out


def unfold_gaps(sample: EnsembleSample, eq, center: float, halfwidth: float) -> np.ndarray:
    """Pooled unfolded gaps of a sample around one bulk point."""
    per = _config_gaps(sample, eq, center, halfwidth)
    pooled = np.concatenate(per) if per else np.empty(0)
    if len(pooled) == 0:
        raise NumericalError(
            "empty-window",
            f"no gaps found in [{center - halfwidth:.3f}, {center + halfwidth:.3f}]; "
            "increase n, count, or the halfwidth",
        )
    return pooled


@dataclass
class PhiEstimate:
    value: float
    se: float
    count: int


def phi_estimate(sample: EnsembleSample, eq, center: float, test) -> PhiEstimate:
    """Mean of a microscopic linear statistic sum test(u_i) per configuration.

    u is the locally unfolded coordinate n * density(center) * (lambda -
    center); the test function should decay within a few unit spacings.
    """
    scale = sample.n * eq.density(center)
    if scale <= 0:
        raise UsageError("invalid-spec", f"density vanishes at center {center}")
    u = scale * (sample.configs - center)
    vals = np.asarray(test(u), dtype=float).sum(axis=1)
    return PhiEstimate(
        value=float(vals.mean()),
        se=float(vals.std(ddof=1) / np.sqrt(len(vals))),
        count=len(vals),
    )


def _bump_bank():
    return [
        lambda u: np.exp(-0.5 * u * u),
        lambda u: np.exp(-u * u / 4.5) * np.cos(np.pi * u),
        lambda u: np.exp(-u * u / 8.0) * np.cos(2.0 * np.pi * u / 3.0),
    ]


def split_noise_floor(
    sample: EnsembleSample, eq, center: float, halfwidth: float, repeats: int = 25, seed: int = 0
) -> float:
    """Median two-sample KS distance between random config-level halves.

    This is the resolution limit of a KS comparison at this sample size:
    distances below it are indistinguishable from sampling noise. Splits
    are done at configuration granularity because gaps within one
    configuration are correlated.
    """
    per = _config_gaps(sample, eq, center, halfwidth)
    per = [g for g in per if len(g)]
    if len(per) < 4:
        raise NumericalError("empty-window", "too few occupied configurations to split")
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, 0], dtype=np.uint64)))
    dists = []
    for _ in range(repeats):
        perm = rng.permutation(len(per))
        half = len(per) // 2
        a = np.concatenate([per[i] for i in perm[:half]])
        b = np.concatenate([per[i] for i in perm[half:]])
        if len(a) and len(b):
            dists.append(stats.ks_2samp(a, b, method="asymp").statistic)
    return float(np.median(dists))


@dataclass
class UniversalityDistance:
    ks_distance: float
    noise_floor: float
    phi_z: np.ndarray
    gaps_a: int
    gaps_b: int

    def passed(self, slack: float = 0.02, z_max: float = 4.0) -> bool:
        return self.ks_distance < self.noise_floor + slack and bool(np.all(np.abs(self.phi_z) < z_max))


def universality_distance(
    sample_a: EnsembleSample,
    eq_a,
    center_a: float,
    sample_b: EnsembleSample,
    eq_b,
    center_b: float,
    halfwidth: float,
    floor_repeats: int = 25,
) -> UniversalityDistance:
    """Compare local spectral statistics of two ensembles at bulk points.

    Requires matching n and beta; local laws depend on both, so comparing
    across them is a category error, reported as such. The distance is
    the two-sample KS statistic on pooled unfolded gaps, accompanied by
    z-scores of a small bank of microscopic linear statistics and the
    split-sample noise floor of the reference sample.
    """
    if sample_a.n != sample_b.n or sample_a.beta != sample_b.beta:
        raise UsageError(
            "mismatched-parameters",
            f"cannot compare (n={sample_a.n}, beta={sample_a.beta}) against "
            f"(n={sample_b.n}, beta={sample_b.beta})",
        )
    ga = unfold_gaps(sample_a, eq_a, center_a, halfwidth)
    gb = unfold_gaps(sample_b, eq_b, center_b, halfwidth)
    ks = float(stats.ks_2samp(ga, gb, method="asymp").statistic)
    floor = split_noise_floor(sample_b, eq_b, center_b, halfwidth, repeats=floor_repeats)
    zs = []
    for test in _bump_bank():
        pa = phi_estimate(sample_a, eq_a, center_a, test)
        pb = phi_estimate(sample_b, eq_b, center_b, test)
        zs.append((pa.value - pb.value) / np.hypot(pa.se, pb.se))
    return UniversalityDistance(
        ks_distance=ks,
        noise_floor=floor,
        phi_z=np.array(zs),
        gaps_a=len(ga),
        gaps_b=len(gb),
    )


# ----------------------------------------------------------------------
# structural identities


@dataclass
class HamiltonianIdentity:
    residual: float
    constant: float
    predicted_constant: float
    modes: int


def hamiltonian_identity_residual(
    eq, tmap, spectrum, beta: float, configs: np.ndarray, modes: int | None = None
) -> HamiltonianIdentity:
    """Configuration-wise check of the exact energy-splitting identity.

    For each configuration, the energy difference between the deformed
    ensemble (at the transported points, including the Jacobian) and the
    reference ensemble, after removing the diagonalized quadratic form in
    the kernel modes, must be one and the same constant. The residual is
    the maximum deviation from the median over configurations; truncating
    the mode sum too early shows up here directly, which is what makes
    this a sharp test of the kernel decomposition.
    """
    lam = np.atleast_2d(np.asarray(configs, dtype=float))
    count, n = lam.shape
    if n < 2:
        raise UsageError("invalid-spec", "identity needs configurations with n >= 2")
    srt = np.sort(lam, axis=1)
    if np.any(np.diff(srt, axis=1) < 1e-12):
        raise NumericalError("coincident-nodes", "configurations contain coincident points")
    if modes is None:
        modes = spectrum.truncation
    modes = int(min(modes, len(spectrum.eigenvalues)))

    zeta = tmap.value(lam)
    logzp = np.log(tmap.derivative(lam)).sum(axis=1)
    one_body = n * (eq.potential.v(zeta) - 0.5 * lam * lam).sum(axis=1)
    iu = np.triu_indices(n, 1)
    pair = np.empty(count)
    for c in range(count):
        dx = np.abs(lam[c][:, None] - lam[c][None, :])[iu]
        dz = np.abs(zeta[c][:, None] - zeta[c][None, :])[iu]
        pair[c] = float(np.sum(np.log(dz) - np.log(dx)))
    direct = 0.5 * beta * (one_body - 2.0 * pair) - logzp

    eta = spectrum.eigenvalues[:modes]
    proj = spectrum.semicircle_proj[:modes]
    if modes == 0:
        t = direct - (0.5 * beta - 1.0) * logzp
    else:
        sums = np.stack(
            [spectrum.phi(lam.ravel(), k).reshape(count, n).sum(axis=1) for k in range(modes)], axis=1
        )
        q = sums - n * proj[None, :]
        t = direct + 0.5 * beta * (q * q) @ eta - (0.5 * beta - 1.0) * logzp

    const = float(np.median(t))
    residual = float(np.max(np.abs(t - const)))
    dres = ops.deformation_residual(eq, tmap)
    predicted = 0.5 * beta * n * n * (float(eta @ (proj * proj)) - dres.constant)
    return HamiltonianIdentity(
        residual=residual, constant=const, predicted_constant=predicted, modes=modes
    )


@dataclass
class LinearizationResult:
    left: float
    right: float
    rel_discrepancy: float
    n: int
    beta: float
    modes: int


def linearization_check(
    eq,
    tmap,
    spectrum,
    beta: float,
    observable,
    n: int = 2,
    modes: int = 3,
    gh_nodes: int = 24,
    gl_nodes: int = 96,
    box=None,
    jacobian_weight: bool = True,
) -> LinearizationResult:
    """Deterministic two-route expectation of a symmetric observable.

    Left route: quadrature against the exact transported law of the
    deformed ensemble. Right route: quadrature against the reference
    ensemble reweighted through the diagonalized quadratic form, with
    each mode decoupled by a Gauss-Hermite auxiliary integral (rotated
    into the complex plane for negative modes). Agreement validates the
    entire decomposition chain end to end at small n, with no sampling
    noise involved.
    """
    if n > 4:
        raise UsageError("dimension-too-large", f"deterministic check supports n <= 4, got {n}")
    if box is None:
        eps = eq.eps
        box = (-(2.0 + 0.5 * eps), 2.0 + 0.5 * eps)
    modes = int(min(modes, len(spectrum.eigenvalues)))

    parts = [(c, lw) for c, lw in _ordered_chunks(int(n), box, gl_nodes)]
    configs = np.concatenate([p[0] for p in parts])
    logw = np.concatenate([p[1] for p in parts])
    obs = np.asarray(observable(configs), dtype=float)

    zeta = tmap.value(configs)
    logzp = np.log(tmap.derivative(configs)).sum(axis=1)
    log_exact = -0.5 * beta * n * np.asarray(eq.potential.v(zeta)).sum(axis=1) + logzp
    for j in range(1, n):
        for i in range(j):
            log_exact = log_exact + beta * np.log(zeta[:, j] - zeta[:, i])
    log_exact = log_exact + logw
    we = np.exp(log_exact - log_exact.max())
    left = float((we @ obs) / we.sum())

    log_ref = _log_density_ordered(lambda x: 0.5 * x * x, beta, int(n), configs) + logw
    wr = np.exp(log_ref - log_ref.max())

    if modes == 0:
        w_mode = np.ones(len(configs))
    else:
        eta = spectrum.eigenvalues[:modes]
        proj = spectrum.semicircle_proj[:modes]
        qmat = np.stack(
            [spectrum.phi(configs.ravel(), k).reshape(-1, n).sum(axis=1) - n * proj[k] for k in range(modes)],
            axis=1,
        )
        coef = np.sqrt(beta * eta.astype(complex))

        gh_x, gh_w = np.polynomial.hermite_e.hermegauss(gh_nodes)
        grids = np.meshgrid(*([gh_x] * modes), indexing="ij")
        u = np.stack([g.ravel() for g in grids], axis=1)
        uw = np.ones(u.shape[0])
        for g in np.meshgrid(*([gh_w] * modes), indexing="ij"):
            uw = uw * g.ravel()
        uw /= uw.sum()

        su = u * coef[None, :]
        w_mode = np.zeros(len(configs))
        block = 512
        for start in range(0, u.shape[0], block):
            s = su[start : start + block]
            w_mode = w_mode + np.exp(qmat @ s.T).real @ uw[start : start + block]
    # jacobian_weight=False drops the (beta/2 - 1) log-derivative factor,
    # a deliberate corruption used as a negative control (inactive at beta=2)
    jac = np.exp(-(0.5 * beta - 1.0) * logzp) if jacobian_weight else 1.0
    wfull = wr * w_mode * jac
    right = float((wfull @ obs) / wfull.sum())

    scale = max(abs(left), abs(right), 1e-30)
    return LinearizationResult(
        left=left,
        right=right,
        rel_discrepancy=abs(left - right) / scale,
        n=int(n),
        beta=float(beta),
        modes=modes,
    )
