"""Numerically stable scalar special functions shared by every sampler.

All functions accept floats or numpy arrays and are pure; they are safe to
call concurrently.  Incomplete-gamma and log-gamma evaluations are backed
by scipy.special, which already implements the standard series /
continued-fraction split.
"""

import numpy as np
from scipy import special as sc

__all__ = [
    "utan",
    "log_cosh",
    "upper_gamma_reg",
    "lower_gamma_reg",
    "inverse_gaussian_cdf",
    "inverse_gaussian_log_cdf",
    "log_gamma_fn",
    "UTAN_SINGULARITY",
]

# First singularity of tan(sqrt(s)) sits at sqrt(s) = pi/2.
UTAN_SINGULARITY = np.pi ** 2 / 4.0

# Below this the direct quotient loses digits to 0/0 cancellation; a
# 3-term Taylor series is exact to well under 1e-12 there.
_UTAN_TAYLOR_CUT = 1e-6

_LOG2 = np.log(2.0)


def _maybe_scalar(out, scalar):
    return float(out[0]) if scalar else out


def utan(s):
    """Evaluate tan(sqrt(s))/sqrt(s), continued through s=0.

    For s < 0 this is tanh(sqrt(-s))/sqrt(-s) (the same analytic
    function); the value at 0 is 1.  Strictly increasing on its domain
    (-inf, pi^2/4).

    Parameters
    ----------
    s : float or array_like
        Argument(s); every entry must satisfy s < pi^2/4.

    Returns
    -------
    float or ndarray
    """
    s = np.asarray(s, dtype=float)
    scalar = s.ndim == 0
    s = np.atleast_1d(s)
    if np.any(s >= UTAN_SINGULARITY):
        raise ValueError("utan: argument must be below pi^2/4")
    out = np.empty_like(s)
    tiny = np.abs(s) < _UTAN_TAYLOR_CUT
    st = s[tiny]
    out[tiny] = 1.0 + st / 3.0 + 2.0 * st * st / 15.0
    pos = (s >= _UTAN_TAYLOR_CUT)
    rp = np.sqrt(s[pos])
    out[pos] = np.tan(rp) / rp
    neg = (s <= -_UTAN_TAYLOR_CUT)
    rn = np.sqrt(-s[neg])
    out[neg] = np.tanh(rn) / rn
    return _maybe_scalar(out, scalar)


def log_cosh(z):
    """Overflow-free log(cosh(z)), valid over the whole double range.

    Computed as |z| + log1p(exp(-2|z|)) - log 2.
    """
    z = np.abs(np.asarray(z, dtype=float))
    return z + np.log1p(np.exp(-2.0 * z)) - _LOG2


def upper_gamma_reg(a, x):
    """Regularized upper incomplete gamma function Q(a, x).

    Q(a, 0) = 1 and Q is decreasing in x.  Requires a > 0 and x >= 0.
    """
    a = np.asarray(a, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(a <= 0.0):
        raise ValueError("upper_gamma_reg: a must be positive")
    if np.any(x < 0.0):
        raise ValueError("upper_gamma_reg: x must be nonnegative")
    out = sc.gammaincc(a, x)
    return float(out) if np.ndim(out) == 0 else out


def lower_gamma_reg(a, x):
    """Regularized lower incomplete gamma function P(a, x) = 1 - Q(a, x)."""
    a = np.asarray(a, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(a <= 0.0):
        raise ValueError("lower_gamma_reg: a must be positive")
    if np.any(x < 0.0):
        raise ValueError("lower_gamma_reg: x must be nonnegative")
    out = sc.gammainc(a, x)
    return float(out) if np.ndim(out) == 0 else out


def inverse_gaussian_log_cdf(x, mu, lam):
    """log of the inverse-Gaussian distribution function.

    Uses the two-Phi representation
        F(x) = Phi(sqrt(lam/x)(x/mu - 1)) + exp(2 lam/mu) Phi(-sqrt(lam/x)(x/mu + 1))
    with both terms combined in log space, so large lam/mu does not
    overflow.  ``mu=inf`` is accepted and gives the zero-drift limit
    2 Phi(-sqrt(lam/x)).
    """
    x = np.asarray(x, dtype=float)
    mu = np.asarray(mu, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if np.any(x <= 0.0) or np.any(mu <= 0.0) or np.any(lam <= 0.0):
        raise ValueError("inverse_gaussian_log_cdf: arguments must be positive")
    rt = np.sqrt(lam / x)
    ratio = np.where(np.isinf(mu), 0.0, x / mu)
    drift = np.where(np.isinf(mu), 0.0, 2.0 * lam / mu)
    a = sc.log_ndtr(rt * (ratio - 1.0))
    b = drift + sc.log_ndtr(-rt * (ratio + 1.0))
    out = np.logaddexp(a, b)
    return float(out) if np.ndim(out) == 0 else out


def inverse_gaussian_cdf(x, mu, lam):
    """Inverse-Gaussian distribution function F(x; mu, lam) in [0, 1].

    Parameters
    ----------
    x, mu, lam : float or array_like
        Evaluation point, mean, and shape; all must be positive
        (``mu=inf`` gives the zero-drift limit).
    """
    out = np.exp(inverse_gaussian_log_cdf(x, mu, lam))
    out = np.minimum(out, 1.0)
    return float(out) if np.ndim(out) == 0 else out


def log_gamma_fn(x):
    """log Gamma(x) for x > 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise ValueError("log_gamma_fn: argument must be positive")
    out = sc.gammaln(x)
    return float(out) if np.ndim(out) == 0 else out
