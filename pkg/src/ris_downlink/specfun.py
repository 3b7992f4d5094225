"""Numerically robust gamma-function family.

All ratio and tail computations are done in the log domain so that meta-atom
counts up to 1e4 (and beyond) never overflow. Incomplete-gamma evaluation and
inversion are backed by scipy.special, which meets the absolute-error budgets
required here (<= 1e-12) with a few ulp to spare.
"""

import numpy as np
from scipy import special

__all__ = [
    "UnboundedQuantileError",
    "log_gamma",
    "gamma_ratio_half",
    "gamma_ratio_half_stirling",
    "reg_lower_inc_gamma",
    "inv_reg_lower_inc_gamma",
]


class UnboundedQuantileError(ValueError):
    """Raised when the requested quantile sits at probability 1."""


# Asymptotic series for Gamma(Q + 1/2) / (Gamma(Q) * sqrt(Q)). Accurate to
# < 1e-15 relative for Q >= _SERIES_MIN_Q; below that the exact half-integer
# recurrence from Gamma(3/2)/Gamma(1) = sqrt(pi)/2 is used instead.
_RATIO_SERIES = (
    1.0,
    -1.0 / 8.0,
    1.0 / 128.0,
    5.0 / 1024.0,
    -21.0 / 32768.0,
    -399.0 / 262144.0,
    869.0 / 4194304.0,
)
_SERIES_MIN_Q = 128


def log_gamma(x):
    """Natural log of the gamma function for x > 0.

    Accepts scalars or arrays; relative error is a few ulp across
    [0.5, 1e6], well inside the 1e-13 budget.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise ValueError("log_gamma requires x > 0")
    out = special.gammaln(x)
    return float(out) if out.ndim == 0 else out


def gamma_ratio_half(Q):
    """Gamma(Q + 1/2) / Gamma(Q) for integer Q >= 1.

    Small Q uses the exact recurrence r(Q+1) = r(Q) * (Q + 1/2) / Q; large Q
    uses an asymptotic series in 1/Q. Both branches are accurate to ~1 ulp,
    which keeps the recurrence identity tight even at Q = 1e4 (a log-domain
    gammaln difference would lose ~5 digits there to cancellation).
    """
    if Q != int(Q) or Q < 1:
        raise ValueError("gamma_ratio_half requires an integer Q >= 1")
    Q = int(Q)
    if Q <= _SERIES_MIN_Q:
        r = np.sqrt(np.pi) / 2.0
        for j in range(1, Q):
            r *= (j + 0.5) / j
        return r
    acc = 0.0
    for k in range(len(_RATIO_SERIES) - 1, -1, -1):
        acc = acc / Q + _RATIO_SERIES[k]
    return np.sqrt(Q) * acc


def gamma_ratio_half_stirling(Q):
    """Leading-order (Stirling) approximation sqrt(Q) of gamma_ratio_half."""
    if Q != int(Q) or Q < 1:
        raise ValueError("gamma_ratio_half_stirling requires an integer Q >= 1")
    return float(np.sqrt(Q))


def reg_lower_inc_gamma(x, a):
    """Regularized lower incomplete gamma P(x, a) for x >= 0, a > 0.

    Monotone nondecreasing in x with values in [0, 1]; absolute error
    <= 1e-12. Vectorized in x.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0):
        raise ValueError("reg_lower_inc_gamma requires x >= 0")
    if a <= 0.0:
        raise ValueError("reg_lower_inc_gamma requires a > 0")
    out = special.gammainc(a, x)
    return float(out) if out.ndim == 0 else out


def inv_reg_lower_inc_gamma(y, a):
    """Inverse of P(., a): returns x with P(x, a) = y for y in [0, 1).

    y = 1 has no finite preimage and raises UnboundedQuantileError.
    """
    if a <= 0.0:
        raise ValueError("inv_reg_lower_inc_gamma requires a > 0")
    y = float(y)
    if y == 1.0:
        raise UnboundedQuantileError("quantile at probability 1 is unbounded")
    if not 0.0 <= y < 1.0:
        raise ValueError("inv_reg_lower_inc_gamma requires y in [0, 1)")
    return float(special.gammaincinv(a, y))
