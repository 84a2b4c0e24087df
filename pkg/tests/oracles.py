"""Independent oracle implementations used to freeze expected test values.

Everything here is written against numpy/scipy directly, deliberately
avoiding the package's own quadrature and operator code, so that a bug in
the implementation cannot silently validate itself. Routines are slow and
simple on purpose.
"""

import numpy as np
from scipy import integrate, optimize, special


def density_value_oracle(dv, z, nodes: int = 4000) -> float:
    """Polynomial factor of the equilibrium density by plain quadrature.

    Evaluates (1/pi) * int (dv(z) - dv(s)) / (z - s) * ds / sqrt(4 - s^2)
    over [-2, 2] using midpoint nodes in the angle variable.
    """
    theta = (np.arange(nodes) + 0.5) * np.pi / nodes
    s = 2.0 * np.cos(theta)
    vals = (dv(z) - dv(s)) / (z - s)
    return float(vals.mean())


def log_potential_semicircle_oracle(lam: float) -> float:
    """int log|lam - mu| rho_sc(mu) dmu by adaptive quadrature split at lam."""

    def f(mu):
        return np.log(np.abs(lam - mu)) * np.sqrt(4.0 - mu * mu) / (2.0 * np.pi)

    if -2.0 < lam < 2.0:
        a, _ = integrate.quad(f, -2.0, lam, points=[lam], limit=200)
        b, _ = integrate.quad(f, lam, 2.0, points=[lam], limit=200)
        return a + b
    out, _ = integrate.quad(f, -2.0, 2.0, limit=200)
    return out


def semicircle_cdf(t):
    phi = np.arccos(np.clip(np.asarray(t, dtype=float) / 2.0, -1.0, 1.0))
    return (np.pi - phi) / np.pi + np.sin(2.0 * phi) / (2.0 * np.pi)


def quartic_cdf_oracle(g: float, t: float) -> float:
    """CDF of the quartic-family density (g s^2 + 1 - g) sqrt(4-s^2)/(2 pi)."""
    out, _ = integrate.quad(
        lambda s: (g * s * s + 1.0 - g) * np.sqrt(4.0 - s * s) / (2.0 * np.pi),
        -2.0,
        t,
        limit=200,
    )
    return out


def transport_point_oracle(g: float, x: float) -> float:
    """Transport map value by CDF matching, independent of any ODE."""
    target = float(semicircle_cdf(x))
    return optimize.brentq(
        lambda t: quartic_cdf_oracle(g, t) - target, -2.0, 2.0, xtol=1e-13
    )


def edge_slope_oracle(g: float) -> float:
    """First correction coefficient of the transport map's left-edge series.

    Hand derivation: with edge scale c = P(edge)^(-2/3) and inward density
    slope p1 = P'_inward(edge)/P(edge), matching the x^(5/2) terms of both
    sides of the CDF identity gives s1 = (c/8 - 1/8 - c*p1) / (5/2).
    """
    p0 = 1.0 + 3.0 * g
    c = p0 ** (-2.0 / 3.0)
    p1 = -4.0 * g / p0
    return (c / 8.0 - 1.0 / 8.0 - c * p1) / 2.5


def cheb_coeff_oracle(h, k: int) -> float:
    """Chebyshev coefficient of h on [-2, 2] by adaptive quadrature."""
    out, _ = integrate.quad(
        lambda theta: h(2.0 * np.cos(theta)) * np.cos(k * theta), 0.0, np.pi, limit=200
    )
    return (2.0 / np.pi) * out


def variance_form_oracle(h, max_modes: int = 40) -> float:
    """CLT variance quadratic form as (1/2) sum_k k h_k^2 from raw coefficients."""
    total = 0.0
    for k in range(1, max_modes + 1):
        hk = cheb_coeff_oracle(h, k)
        total += 0.5 * k * hk * hk
    return total


def mean_shift_square_oracle(beta: float) -> float:
    """Exact mean shift of sum lambda_i^2 in the reference ensemble.

    The tridiagonal representation gives E tr M^2 = n - 1 + 2/beta exactly,
    and the centering is n, so the limit shift is 2/beta - 1.
    """
    return 2.0 / beta - 1.0


def mean_shift_cos_oracle(beta: float) -> float:
    """Mean shift of sum cos(lambda_i) in the reference ensemble.

    (1 - beta/2) * [ (cos 2)/2 - J_0(2)/2 ] * (2/beta): the arcsine average
    of cos on [-2, 2] is the Bessel value J_0(2). The edge-mass 1/4 and
    arcsine 1/2 weights were cross-checked by hand against the exact
    tridiagonal moments E tr M^2 = n - 1 + 2/beta and, at beta = 1,
    E tr M^4 = 2n + 5 + 5/n.
    """
    pairing = (1.0 - beta / 2.0) * (np.cos(2.0) - special.j0(2.0)) / 2.0
    return (2.0 / beta) * pairing


def pair_expectation_oracle(v, n: int, beta: float, h, box, tol: float = 1e-12):
    """E[h(l1, l2)] for the two-point ensemble by adaptive double quadrature.

    Integrates the ordered triangle x < y only (h must be symmetric), which
    keeps |x - y|^beta smooth inside the region; the symmetry factor cancels
    in the ratio.
    """
    lo, hi = box

    def dens(y, x):
        return np.exp(-0.5 * beta * n * (v(x) + v(y))) * (y - x) ** beta

    z, _ = integrate.dblquad(dens, lo, hi, lambda x: x, hi, epsabs=tol, epsrel=tol)
    m, _ = integrate.dblquad(
        lambda y, x: dens(y, x) * h(x, y), lo, hi, lambda x: x, hi, epsabs=tol, epsrel=tol
    )
    return m / z


def support_moment_oracle(dv, a: float, b: float):
    """The two endpoint conditions by direct quadrature on (a, b).

    Returns (pi * int dv dmu, (1/2) int s dv(s) dmu - 1) for the arcsine
    measure mu of (a, b); both vanish at the true support endpoints.
    """
    mid, half = 0.5 * (a + b), 0.5 * (b - a)

    def s_of(theta):
        return mid + half * np.sin(theta)

    v1, _ = integrate.quad(lambda th: dv(s_of(th)), -np.pi / 2, np.pi / 2, limit=200)
    v2, _ = integrate.quad(lambda th: s_of(th) * dv(s_of(th)), -np.pi / 2, np.pi / 2, limit=200)
    return v1, v2 / (2.0 * np.pi) - 1.0


class PerturbedMap:
    """Monotone perturbation of a transport map (negative-control shim)."""

    def __init__(self, tmap, amplitude: float = 0.03):
        self.base = tmap
        self.eq = tmap.eq
        self.amplitude = amplitude

    def value(self, lam):
        lam = np.asarray(lam, dtype=float)
        return self.base.value(lam) + self.amplitude * np.sin(0.5 * np.pi * lam)

    def derivative(self, lam):
        lam = np.asarray(lam, dtype=float)
        return self.base.derivative(lam) + self.amplitude * 0.5 * np.pi * np.cos(0.5 * np.pi * lam)
