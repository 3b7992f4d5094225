"""Closed-form statistics of the scheduled composite channel power.

The per-user power is X = (Z1 + Z2)^2 with Z1 = |h| (Rayleigh) and
Z2 = sigma_g*sqrt(Q)*||f|| (Nakagami, shape Q). Two tractable surrogates for
the law of X feed the extreme-value machinery (exposed as approx1_* and
approx2_*):

  hardening surrogate (approx1): Z2 collapses onto its mean, so
      F(alpha) = 1 - exp(-(sqrt(alpha) - E[Z2])^2 / sigma_h^2)
  on alpha > E[Z2]^2.  (The squared threshold is required for F to start at
  0; see HARDENING_SUPPORT_NOTE.)

  moment-matched surrogate (approx2): X is replaced by a gamma variable
  with shape 2*m_hat and scale omega_hat/m_hat, where (m_hat, omega_hat)
  match the first two moments of X exactly.

The max over K i.i.d. users converges to a Gumbel law with location b_K
(the 1-1/K quantile) and scale a_K = 1/(K*pdf(b_K)); both surrogates admit
closed forms for (a_K, b_K), and a numeric fallback works for any law.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .specfun import (
    gamma_ratio_half,
    inv_reg_lower_inc_gamma,
    log_gamma,
    reg_lower_inc_gamma,
)

__all__ = [
    "EULER_MASCHERONI",
    "HARDENING_SUPPORT_NOTE",
    "GumbelParams",
    "GammaApproxParams",
    "HardeningApproxParams",
    "IntegrationError",
    "x_moments",
    "moment_match",
    "approx2_pdf",
    "approx2_cdf",
    "hardening_params",
    "approx1_pdf",
    "approx1_cdf",
    "gumbel_pdf",
    "gumbel_cdf",
    "gumbel_constants_numeric",
    "gumbel_constants_approx1",
    "gumbel_constants_approx2",
    "no_ris_constants",
    "exponential_cdf",
    "exponential_pdf",
    "ergodic_capacity_gumbel",
    "ergodic_capacity_finite_k",
    "avg_receive_snr",
    "hardening_snr_decomposition",
]

EULER_MASCHERONI = float(np.euler_gamma)

HARDENING_SUPPORT_NOTE = (
    "hardening-approximation support: the cdf "
    "1 - exp(-(sqrt(alpha) - E[Z2])^2 / sigma_h^2) is applied for "
    "alpha > (E[Z2])^2, i.e. the squared mean reflection gain; with the "
    "unsquared threshold E[Z2] the expression would not be a valid cdf "
    "(it would not start at 0)."
)

_QUAD_ABS_TOL = 1e-9
_QUAD_LIMIT = 10_000
_SUPPORT_EPS = 1e-12


class IntegrationError(RuntimeError):
    """Adaptive quadrature failed to meet the requested tolerance."""


@dataclass(frozen=True)
class GumbelParams:
    """Scale a_k and location b_k of the limiting extreme-value law."""

    a_k: float
    b_k: float

    def __post_init__(self):
        if self.a_k <= 0.0:
            raise ValueError("Gumbel scale a_k must be positive")


@dataclass(frozen=True)
class GammaApproxParams:
    """Moment-matched Nakagami parameters (m_hat, omega_hat).

    The induced composite-power law is gamma with shape 2*m_hat and scale
    omega_hat/m_hat.
    """

    m_hat: float
    omega_hat: float

    def __post_init__(self):
        if self.m_hat <= 0.0 or self.omega_hat <= 0.0:
            raise ValueError("m_hat and omega_hat must be positive")


@dataclass(frozen=True)
class HardeningApproxParams:
    """Hardened reflection gain E[Z2] (exact mean) and direct-link variance."""

    mean_z2: float
    sigma_h_sq: float

    def __post_init__(self):
        if self.mean_z2 < 0.0 or self.sigma_h_sq <= 0.0:
            raise ValueError("mean_z2 must be >= 0 and sigma_h_sq > 0")


# ---------------------------------------------------------------------------
# Moments of the composite channel power and the gamma surrogate
# ---------------------------------------------------------------------------


def x_moments(sigma_h, sigma_f, sigma_g, Q):
    """Exact first two moments (E[X], E[X^2]) of the composite power.

    Expands E[(Z1 + Z2)^2] and E[(Z1 + Z2)^4] through the Rayleigh moments
    E[Z1^n] = sigma_h^n * Gamma(1 + n/2) and the Nakagami moments
    E[Z2^n] = (sigma_f*sigma_g*sqrt(Q))^n * Gamma(Q + n/2)/Gamma(Q), using
    the exact half-integer gamma ratio (not its Stirling limit).
    """
    if sigma_h < 0.0 or sigma_f < 0.0:
        raise ValueError("sigma_h and sigma_f must be nonnegative")
    if sigma_g <= 0.0:
        raise ValueError("sigma_g must be positive")
    if Q != int(Q) or Q < 1:
        raise ValueError("Q must be an integer >= 1")
    Q = int(Q)
    r = gamma_ratio_half(Q)
    sh2 = sigma_h * sigma_h
    c = sigma_f * sigma_g
    sqpi = math.sqrt(Q * math.pi)
    m1 = sh2 + c * c * Q * Q + c * sigma_h * sqpi * r
    m2 = (
        2.0 * sh2 * sh2
        + 3.0 * c * sh2 * sigma_h * sqpi * r
        + 6.0 * c * c * sh2 * Q * Q
        + 2.0 * c**3 * sigma_h * Q * sqpi * (Q + 0.5) * r
        + c**4 * Q**3 * (Q + 1)
    )
    return m1, m2


def moment_match(sigma_h, sigma_f, sigma_g, Q) -> GammaApproxParams:
    """Fit (m_hat, omega_hat) so the gamma surrogate reproduces (m1, m2).

    omega_hat = m1/2 and m_hat = m1^2 / (2*(m2 - m1^2)); the induced gamma
    then has mean m1 and second moment m2 exactly. With sigma_f = 0 this
    collapses to (1/2, sigma_h^2/2), i.e. the exponential direct-link law.
    """
    m1, m2 = x_moments(sigma_h, sigma_f, sigma_g, Q)
    var = m2 - m1 * m1
    if var <= 0.0:
        raise ValueError("degenerate moments: E[X^2] <= E[X]^2")
    return GammaApproxParams(m_hat=float(m1 * m1 / (2.0 * var)), omega_hat=float(m1 / 2.0))


def approx2_pdf(alpha, p: GammaApproxParams):
    """Gamma density with shape 2*m_hat and scale omega_hat/m_hat."""
    a = 2.0 * p.m_hat
    rate = p.m_hat / p.omega_hat
    scalar = np.ndim(alpha) == 0
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    out = np.zeros_like(alpha)
    pos = alpha > 0.0
    log_pdf = (
        a * np.log(rate)
        + (a - 1.0) * np.log(alpha[pos])
        - rate * alpha[pos]
        - log_gamma(a)
    )
    out[pos] = np.exp(log_pdf)
    return float(out[0]) if scalar else out


def approx2_cdf(alpha, p: GammaApproxParams):
    """Gamma cdf P(m_hat*alpha/omega_hat, 2*m_hat), clipped to 0 below 0."""
    alpha = np.asarray(alpha, dtype=float)
    out = reg_lower_inc_gamma(np.maximum(alpha, 0.0) * (p.m_hat / p.omega_hat), 2.0 * p.m_hat)
    return float(out) if np.ndim(out) == 0 else out


def hardening_params(Q, sigma_h, sigma_f, sigma_g) -> HardeningApproxParams:
    """Hardening surrogate parameters with the exact Nakagami mean for E[Z2]."""
    if sigma_h <= 0.0:
        raise ValueError("sigma_h must be positive")
    mean_z2 = sigma_f * sigma_g * math.sqrt(Q) * gamma_ratio_half(Q)
    return HardeningApproxParams(mean_z2=mean_z2, sigma_h_sq=sigma_h * sigma_h)


def approx1_cdf(alpha, p: HardeningApproxParams):
    """Hardened-reflection cdf, zero at and below the support edge mean_z2^2."""
    scalar = np.ndim(alpha) == 0
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    out = np.zeros_like(alpha)
    edge = p.mean_z2 * p.mean_z2
    above = alpha > edge
    root = np.sqrt(alpha[above]) - p.mean_z2
    out[above] = -np.expm1(-root * root / p.sigma_h_sq)
    return float(out[0]) if scalar else out


def approx1_pdf(alpha, p: HardeningApproxParams):
    """Density of the hardened-reflection law (derivative of approx1_cdf)."""
    scalar = np.ndim(alpha) == 0
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    out = np.zeros_like(alpha)
    edge = p.mean_z2 * p.mean_z2
    above = alpha > edge
    sqrt_a = np.sqrt(alpha[above])
    root = sqrt_a - p.mean_z2
    out[above] = root / (p.sigma_h_sq * sqrt_a) * np.exp(-root * root / p.sigma_h_sq)
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Gumbel constants
# ---------------------------------------------------------------------------


def gumbel_pdf(alpha, g: GumbelParams):
    z = (np.asarray(alpha, dtype=float) - g.b_k) / g.a_k
    out = np.exp(-z - np.exp(-z)) / g.a_k
    return float(out) if np.ndim(out) == 0 else out


def gumbel_cdf(alpha, g: GumbelParams):
    z = (np.asarray(alpha, dtype=float) - g.b_k) / g.a_k
    out = np.exp(-np.exp(-z))
    return float(out) if np.ndim(out) == 0 else out


def gumbel_constants_numeric(cdf, pdf, K) -> GumbelParams:
    """(a_K, b_K) for an arbitrary law: b_K solves F(b_K) = 1 - 1/K by
    bracketed root finding (probability tolerance 1e-12), a_K = 1/(K*pdf(b_K)).
    """
    if K < 2:
        raise ValueError("K must be >= 2")
    target = 1.0 - 1.0 / K
    hi = 1.0
    for _ in range(2000):
        if cdf(hi) > target:
            break
        hi *= 2.0
    else:
        raise RuntimeError("failed to bracket the 1 - 1/K quantile")
    b = optimize.brentq(lambda x: cdf(x) - target, 0.0, hi, xtol=1e-300, rtol=8.9e-16)
    if abs(cdf(b) - target) > 1e-12:
        raise RuntimeError("quantile root finding did not reach tolerance")
    dens = pdf(b)
    if dens <= 0.0:
        raise RuntimeError("density vanished at the quantile point")
    return GumbelParams(a_k=1.0 / (K * dens), b_k=float(b))


def gumbel_constants_approx1(K, Q, sigma_h, sigma_f, sigma_g) -> GumbelParams:
    """Closed-form constants under channel hardening (Stirling regime):

    b_K = (sigma_f*sigma_g*Q + sigma_h*sqrt(ln K))^2,
    a_K = sigma_h^2 + sigma_f*sigma_g*sigma_h*Q / sqrt(ln K).
    """
    if K < 2:
        raise ValueError("K must be >= 2 (ln K too small)")
    lnk = math.log(K)
    c = sigma_f * sigma_g
    b = (c * Q + sigma_h * math.sqrt(lnk)) ** 2
    a = sigma_h * sigma_h + c * sigma_h * Q / math.sqrt(lnk)
    return GumbelParams(a_k=a, b_k=b)


def gumbel_constants_approx2(K, p: GammaApproxParams) -> GumbelParams:
    """Closed-form constants for the gamma surrogate, evaluated in the log
    domain (large shapes would overflow the direct quotient):

    b_K = (omega_hat/m_hat) * Pinv(1 - 1/K, 2*m_hat),
    a_K = (omega_hat/m_hat) * Gamma(2*m_hat) /
          (K * Pinv^(2*m_hat-1) * exp(-Pinv)).
    """
    if K < 2:
        raise ValueError("K must be >= 2")
    shape = 2.0 * p.m_hat
    scale = p.omega_hat / p.m_hat
    x = inv_reg_lower_inc_gamma(1.0 - 1.0 / K, shape)
    log_a = (
        math.log(scale)
        + log_gamma(shape)
        - math.log(K)
        - (shape - 1.0) * math.log(x)
        + x
    )
    return GumbelParams(a_k=math.exp(log_a), b_k=float(scale * x))


def no_ris_constants(sigma_h_sq, K) -> GumbelParams:
    """Baseline constants of the pure direct-link (exponential) downlink:
    b_K = sigma_h^2 * ln K, a_K = sigma_h^2."""
    if K < 2:
        raise ValueError("K must be >= 2")
    return GumbelParams(a_k=sigma_h_sq, b_k=sigma_h_sq * math.log(K))


def exponential_cdf(alpha, mean):
    alpha = np.asarray(alpha, dtype=float)
    out = 1.0 - np.exp(-np.maximum(alpha, 0.0) / mean)
    return float(out) if np.ndim(out) == 0 else out


def exponential_pdf(alpha, mean):
    alpha = np.asarray(alpha, dtype=float)
    out = np.where(alpha >= 0.0, np.exp(-np.maximum(alpha, 0.0) / mean) / mean, 0.0)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# Capacity integrals and average receive SNR
# ---------------------------------------------------------------------------


def _quad(fn, lo, hi, points=None):
    kwargs = dict(epsabs=_QUAD_ABS_TOL, epsrel=1e-11, limit=_QUAD_LIMIT, full_output=True)
    if points is not None:
        pts = [p for p in points if lo < p < hi]
        if pts:
            kwargs["points"] = pts
    ret = integrate.quad(fn, lo, hi, **kwargs)
    if len(ret) > 3:
        raise IntegrationError(
            f"quadrature did not converge (achieved abs error {ret[1]:.3e}): {ret[3]}"
        )
    return ret[0]


def ergodic_capacity_gumbel(g: GumbelParams, p_tx) -> float:
    """Average sum rate under the Gumbel law of the scheduled power.

    Integrates log2(1 + p_tx*alpha) against the Gumbel density over
    [max(0, b - 20a), b + 50a]; the tail mass outside is < 1e-12 so the
    truncation is below the 1e-9 bits/s/Hz quadrature tolerance.
    """
    if p_tx <= 0.0:
        raise ValueError("p_tx must be positive")
    lo = max(0.0, g.b_k - 20.0 * g.a_k)
    hi = g.b_k + 50.0 * g.a_k

    def integrand(alpha):
        return math.log2(1.0 + p_tx * alpha) * gumbel_pdf(alpha, g)

    return _quad(integrand, lo, hi, points=[g.b_k])


def ergodic_capacity_finite_k(cdf, pdf, K, p_tx) -> float:
    """Average sum rate for the exact max-of-K law of a given distribution:
    integral of log2(1 + p_tx*alpha) * K * pdf(alpha) * cdf(alpha)^(K-1)
    over the effective support where cdf is in [1e-12, 1 - 1e-12].
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if p_tx <= 0.0:
        raise ValueError("p_tx must be positive")

    hi = 1.0
    for _ in range(2000):
        if cdf(hi) > 1.0 - _SUPPORT_EPS:
            break
        hi *= 2.0
    else:
        raise RuntimeError("failed to bracket the upper support quantile")
    lo = 0.0
    if cdf(lo) < _SUPPORT_EPS:
        lo = optimize.brentq(lambda x: cdf(x) - _SUPPORT_EPS, 0.0, hi, rtol=8.9e-16)
    hi = optimize.brentq(lambda x: cdf(x) - (1.0 - _SUPPORT_EPS), lo, hi, rtol=8.9e-16)

    peak = None
    if K >= 2:
        peak = optimize.brentq(lambda x: cdf(x) - (1.0 - 1.0 / K), lo, hi, rtol=8.9e-16)

    def integrand(alpha):
        return (
            math.log2(1.0 + p_tx * alpha)
            * K
            * pdf(alpha)
            * cdf(alpha) ** (K - 1)
        )

    return _quad(integrand, lo, hi, points=None if peak is None else [peak])


def avg_receive_snr(g: GumbelParams, p_tx) -> float:
    """Mean scheduled-user receive SNR p_tx * (b_K + C*a_K) from the Gumbel
    mean, C the Euler-Mascheroni constant."""
    return p_tx * (g.b_k + EULER_MASCHERONI * g.a_k)


def hardening_snr_decomposition(K, Q, sigma_h, sigma_f, sigma_g, p_tx):
    """Split of the hardening-regime average receive SNR into the baseline
    multiuser-diversity part, the Q^2 reflection part, and the cross term:

      no_ris    = p_tx * sigma_h^2 * (C + ln K)
      q_squared = p_tx * sigma_f^2 * sigma_g^2 * Q^2
      cross     = p_tx * sigma_f*sigma_g*sigma_h * Q * (2 ln K + C)/sqrt(ln K)

    Returns (total, no_ris, q_squared, cross); total is algebraically equal
    to avg_receive_snr with the hardening closed-form constants.
    """
    if K < 2:
        raise ValueError("K must be >= 2")
    lnk = math.log(K)
    c = sigma_f * sigma_g
    no_ris = p_tx * sigma_h * sigma_h * (EULER_MASCHERONI + lnk)
    q_squared = p_tx * c * c * Q * Q
    cross = p_tx * c * sigma_h * Q * (2.0 * lnk + EULER_MASCHERONI) / math.sqrt(lnk)
    return no_ris + q_squared + cross, no_ris, q_squared, cross
