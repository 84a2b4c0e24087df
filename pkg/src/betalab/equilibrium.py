"""Equilibrium densities for one-cut ensembles on the normalized interval.

The equilibrium density of a confining analytic potential with support
equal to the reference interval factors as a strictly positive analytic
function times the semicircle edge factor. That analytic factor (the
"density polynomial", which is a genuine polynomial for polynomial
potentials and an analytic function otherwise) is produced here by a
contour integral wrapping the support, evaluated by the trapezoid rule on
a circle inside the potential's analyticity region, where it converges
geometrically.

All downstream consumers (transport maps, kernels, samplers) read the
result through :class:`EquilibriumData`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import operators as ops
from .errors import NumericalError, UsageError
from .potentials import Potential, make_potential
from .potentials import _moment_residual


def _sqrt_branch(w):
    """w * sqrt(1 - 4/w^2) with the principal branch, analytic off the cut."""
    w = np.asarray(w, dtype=complex)
    return w * np.sqrt(1.0 - 4.0 / (w * w))


@dataclass
class EquilibriumData:
    """Equilibrium measure data on the working window.

    ``p_cheb`` holds Chebyshev coefficients of the density polynomial on
    ``interval`` (the working window, wider than the support), in the
    halved-constant convention. ``cdf_modes`` are cosine modes of the
    distribution function in the arccos angle, making the CDF exact to
    coefficient truncation. ``robin_constant`` and ``v_residual``
    certify the variational characterization on the support.
    """

    potential: Potential
    eps: float
    interval: tuple
    p_cheb: np.ndarray
    cdf_modes: np.ndarray
    genericity_margin: float
    robin_constant: float
    v_residual: float
    mass: float
    contour_radius: float
    contour_nodes: int = field(default=512, repr=False)

    # -- pointwise data ------------------------------------------------

    def p_value(self, x):
        """Density polynomial on the working window."""
        x_arr = np.asarray(x, dtype=float)
        lo, hi = self.interval
        if np.any((x_arr < lo - 1e-12) | (x_arr > hi + 1e-12)):
            raise UsageError("out-of-domain", "density polynomial evaluated outside the window")
        return ops.cheb_val(self.p_cheb, x_arr, self.interval)

    def density(self, x):
        """Equilibrium density; zero outside the support."""
        x_arr = np.asarray(x, dtype=float)
        flat = np.atleast_1d(x_arr).ravel()
        inside = np.abs(flat) < 2.0
        out = np.zeros_like(flat)
        if np.any(inside):
            xi = flat[inside]
            out[inside] = (
                ops.cheb_val(self.p_cheb, xi, self.interval)
                * np.sqrt(4.0 - xi * xi)
                / (2.0 * np.pi)
            )
        if x_arr.ndim == 0:
            return float(out[0])
        return out.reshape(x_arr.shape)

    def cdf(self, x):
        """Distribution function, exact mode sum in the arccos angle."""
        x_arr = np.clip(np.asarray(x, dtype=float), -2.0, 2.0)
        phi = np.arccos(x_arr / 2.0)
        beta = self.cdf_modes
        out = beta[0] * (np.pi - phi)
        for m in range(1, beta.size):
            if beta[m] != 0.0:
                out = out - (beta[m] / m) * np.sin(m * phi)
        return out if np.ndim(x) else float(out)

    def quantile(self, q):
        q_arr = np.atleast_1d(np.asarray(q, dtype=float))
        if np.any((q_arr < 0.0) | (q_arr > 1.0)):
            raise UsageError("invalid-spec", "quantile levels must lie in [0, 1]")
        out = np.empty_like(q_arr)
        for i, qi in enumerate(q_arr):
            if qi <= 0.0:
                out[i] = -2.0
            elif qi >= 1.0:
                out[i] = 2.0
            else:
                out[i] = brentq(lambda t: self.cdf(t) - qi, -2.0, 2.0, xtol=1e-14)
        return out if np.ndim(q) else float(out[0])

    # -- analytic continuation ------------------------------------------

    def _p_complex(self, z):
        """Density polynomial at complex points inside the contour."""
        z_arr = np.atleast_1d(np.asarray(z, dtype=complex))
        if np.any(np.abs(z_arr) >= self.contour_radius - 1e-9):
            raise UsageError("out-of-domain", "point outside the evaluation contour")
        n = self.contour_nodes
        theta = (np.arange(n) + 0.5) * (2.0 * np.pi / n)
        w = self.contour_radius * np.exp(1j * theta)
        dvw = np.asarray(self.potential.dv(w), dtype=complex)
        dvz = np.asarray(self.potential.dv(z_arr), dtype=complex)
        xw = _sqrt_branch(w)
        num = dvz[:, None] - dvw[None, :]
        den = (z_arr[:, None] - w[None, :]) * xw[None, :]
        vals = (num / den) @ (1j * w) * (2.0 * np.pi / n) / (2.0j * np.pi)
        return vals if np.ndim(z) else vals[0]

    def edge_taylor(self, side: str, count: int = 36) -> np.ndarray:
        """Inward Taylor coefficients of the density polynomial at an edge.

        Returns c with P(edge + inward * x) = sum c[m] x^m, where inward
        is +1 at the left edge and -1 at the right edge. Computed from a
        Cauchy circle well inside the analyticity region, so coefficients
        are accurate until they fall under the continuation noise floor.
        """
        if side not in ("left", "right"):
            raise UsageError("invalid-spec", f"side must be 'left' or 'right', got {side!r}")
        center = -2.0 if side == "left" else 2.0
        inward = 1.0 if side == "left" else -1.0
        rt = min(1.0, self.potential.analyticity_radius) / 4.0
        n = 256
        theta = np.arange(n) * (2.0 * np.pi / n)
        vals = self._p_complex(center + rt * np.exp(1j * theta))
        m = np.arange(count)
        dft = np.exp(-1j * np.outer(m, theta))
        coeffs = (dft @ vals) / n / rt**m
        return np.real(coeffs) * inward**m

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        pot = {"kind": self.potential.kind, "eps": self.eps}
        if "coeffs" in self.potential.params:
            pot["coeffs"] = list(self.potential.params["coeffs"])
        if "g" in self.potential.params:
            pot["g"] = self.potential.params["g"]
        return {
            "potential": pot,
            "interval": list(self.interval),
            "eps": self.eps,
            "p_cheb": [float(c) for c in self.p_cheb],
            "cdf_modes": [float(c) for c in self.cdf_modes],
            "genericity_margin": self.genericity_margin,
            "robin_constant": self.robin_constant,
            "v_residual": self.v_residual,
            "mass": self.mass,
            "contour_radius": self.contour_radius,
            "contour_nodes": self.contour_nodes,
        }

    @classmethod
    def from_dict(cls, d: dict, potential: Potential | None = None) -> "EquilibriumData":
        if potential is None:
            pd = d["potential"]
            kind = pd["kind"]
            if kind == "user-analytic":
                raise UsageError(
                    "invalid-spec",
                    "user-analytic equilibrium data needs the potential object to rebuild",
                )
            kwargs = {}
            if kind in ("polynomial",):
                kwargs["coeffs"] = pd["coeffs"]
            if kind == "even-quartic":
                kwargs["g"] = pd["g"]
            potential = make_potential(kind, eps=pd["eps"], **kwargs)
        return cls(
            potential=potential,
            eps=float(d["eps"]),
            interval=tuple(d["interval"]),
            p_cheb=np.asarray(d["p_cheb"], dtype=float),
            cdf_modes=np.asarray(d["cdf_modes"], dtype=float),
            genericity_margin=float(d["genericity_margin"]),
            robin_constant=float(d["robin_constant"]),
            v_residual=float(d["v_residual"]),
            mass=float(d["mass"]),
            contour_radius=float(d["contour_radius"]),
            contour_nodes=int(d.get("contour_nodes", 512)),
        )


def _cdf_modes_from_sigma(p_on_sigma_coeffs: np.ndarray) -> np.ndarray:
    """Cosine modes of the CDF from Chebyshev modes of the smooth factor.

    With s = density / edge factor expanded as s = a0/2 + sum a_k T_k on
    the support, the CDF in the angle phi = arccos(x/2) is
    beta0 (pi - phi) - sum (beta_m / m) sin(m phi), where beta are the
    cosine modes of s(2 cos phi) (2 - 2 cos 2 phi). The convolution is
    done exactly here.
    """
    a = np.asarray(p_on_sigma_coeffs, dtype=float) / (2.0 * np.pi)
    alpha = a.copy()
    alpha[0] *= 0.5  # full convention
    k_max = alpha.size - 1
    beta = np.zeros(k_max + 3)
    for k in range(k_max + 1):
        beta[k] += 2.0 * alpha[k]
        beta[k + 2] -= alpha[k]
        beta[abs(k - 2)] -= alpha[k]
    return beta


def solve_equilibrium(
    potential: Potential,
    eps: float | None = None,
    contour_nodes: int = 512,
    grid_nodes: int = 256,
) -> EquilibriumData:
    """Construct and certify the equilibrium measure of a normalized potential.

    Parameters
    ----------
    potential : Potential
        Must already have support equal to the reference interval; use
        support_endpoints + normalize_support first otherwise.
    eps : float, optional
        Working-window margin. Defaults to the potential's own margin.

    Raises
    ------
    NumericalError
        "variational-failure" if the support normalization, total mass,
        the flatness of the effective potential on the support, or the
        inequality outside the support fails; "not-generic" if the
        density polynomial is not strictly positive on the support.
    """
    if eps is None:
        eps = potential.domain[1] - 2.0
    if not 0 < eps <= potential.domain[1] - 2.0 + 1e-12:
        raise UsageError("invalid-spec", f"eps {eps} exceeds the potential domain")

    res = _moment_residual(potential, -2.0, 2.0)
    if np.max(np.abs(res)) > 1e-7:
        raise NumericalError(
            "variational-failure",
            f"support is not the reference interval (moment residual {np.max(np.abs(res)):.3g}); "
            "run support_endpoints and normalize_support first",
        )

    radius = 2.0 + min(1.0, potential.analyticity_radius) / 2.0
    interval = (-(2.0 + eps), 2.0 + eps)

    # density polynomial on the working window by the wrapped contour integral
    theta_c = (np.arange(contour_nodes) + 0.5) * (2.0 * np.pi / contour_nodes)
    w = radius * np.exp(1j * theta_c)
    dvw = np.asarray(potential.dv(w), dtype=complex)
    xw = _sqrt_branch(w)
    dw = 1j * w * (2.0 * np.pi / contour_nodes)

    def p_at(x_real: np.ndarray) -> np.ndarray:
        dvx = np.asarray(potential.dv(x_real), dtype=complex)
        num = dvx[:, None] - dvw[None, :]
        den = (x_real[:, None] - w[None, :]) * xw[None, :]
        return np.real((num / den) @ dw / (2.0j * np.pi))

    ang = ops._angles(grid_nodes)
    mid, half = 0.0, 2.0 + eps
    x_eps = half * np.cos(ang)
    p_cheb = ops.chop_coeffs(ops.coeffs_from_values(p_at(x_eps), ang), 1e-14)

    # genericity on the closed support: candidate minima are the endpoints
    # and the real critical points of the (chopped) Chebyshev series
    candidates = [-2.0, 2.0]
    der = ops.cheb_der(p_cheb, interval)
    if der.size > 1:
        dstd = der.copy()
        dstd[0] *= 0.5
        roots = np.polynomial.chebyshev.chebroots(dstd)
        mid_w = 0.5 * (interval[0] + interval[1])
        half_w = 0.5 * (interval[1] - interval[0])
        for r in np.atleast_1d(roots):
            if abs(np.imag(r)) < 1e-9:
                lam_r = mid_w + float(np.real(r)) * half_w
                if -2.0 <= lam_r <= 2.0:
                    candidates.append(lam_r)
    dense = np.linspace(-2.0, 2.0, 2048)
    margin = float(
        min(
            np.min(ops.cheb_val(p_cheb, np.asarray(candidates), interval)),
            np.min(ops.cheb_val(p_cheb, dense, interval)),
        )
    )
    if margin <= 1e-10:
        raise NumericalError(
            "not-generic",
            f"density polynomial is not strictly positive on the support (min {margin:.3g})",
        )

    # CDF modes from the support restriction
    ang_s = ops._angles(grid_nodes)
    p_sigma = ops.cheb_val(p_cheb, 2.0 * np.cos(ang_s), interval)
    sigma_coeffs = ops.chop_coeffs(ops.coeffs_from_values(p_sigma, ang_s), 1e-14)
    cdf_modes = _cdf_modes_from_sigma(sigma_coeffs)
    mass = float(cdf_modes[0] * np.pi)
    if abs(mass - 1.0) > 1e-8:
        raise NumericalError(
            "variational-failure",
            f"equilibrium mass is {mass:.12g}, not 1; data is inconsistent with a "
            "single normalized support interval",
        )

    eq = EquilibriumData(
        potential=potential,
        eps=eps,
        interval=interval,
        p_cheb=p_cheb,
        cdf_modes=cdf_modes,
        genericity_margin=margin,
        robin_constant=0.0,
        v_residual=0.0,
        mass=mass,
        contour_radius=radius,
        contour_nodes=contour_nodes,
    )

    # variational certificate: flat on the support ...
    lk = ops.log_kernel_apply(eq.density)
    probe, _ = ops.gauss_inv_sqrt(512, ops.SIGMA)
    veff = 2.0 * lk(probe) - np.asarray(potential.v(probe), dtype=float)
    robin = float(np.median(veff))
    v_residual = float(np.max(np.abs(veff - robin)))
    if v_residual > 1e-7:
        raise NumericalError(
            "variational-failure",
            f"effective potential is not constant on the support (residual {v_residual:.3g})",
        )

    # ... and dominated outside it
    mu, wu = ops.gauss_semicircle(256, ops.SIGMA)
    s_mu = ops.cheb_val(p_cheb, mu, interval) / (2.0 * np.pi)
    for t in (0.25 * eps, 0.5 * eps, 0.9 * eps):
        for lam_out in (-(2.0 + t), 2.0 + t):
            l_out = float(np.sum(wu * np.log(np.abs(lam_out - mu)) * s_mu))
            v_out = 2.0 * l_out - float(potential.v(lam_out))
            if v_out > robin + 1e-6:
                raise NumericalError(
                    "variational-failure",
                    f"effective potential exceeds its support level at {lam_out:.3f}; "
                    "the one-interval ansatz is inconsistent for this potential",
                )

    eq.robin_constant = robin
    eq.v_residual = v_residual
    return eq


def eval_density(eq: EquilibriumData, x):
    """Equilibrium density at x (zero outside the support)."""
    return eq.density(x)


@dataclass(frozen=True)
class RecenteringCoeffs:
    """First-order support response of a potential perturbation.

    c1 is the shift rate of the support midpoint, c2 the dilation rate,
    for the perturbation V + t h at small t after re-normalization.
    """

    c1: float
    c2: float


def recentering_coeffs(h, h_prime=None, nodes: int = 256) -> RecenteringCoeffs:
    """Moments of h' against the inverse square-root weight on the support."""
    x, _ = ops.gauss_inv_sqrt(nodes, ops.SIGMA)
    if h_prime is None:
        h_prime = ops._derivative_callable(h, None)
    hp = np.asarray(h_prime(x), dtype=float)
    c1 = float(np.mean(hp))
    c2 = float(np.mean(x * hp)) / 2.0
    return RecenteringCoeffs(c1=c1, c2=c2)
