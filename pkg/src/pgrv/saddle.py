"""Approximate J*(n, z) sampler for large shapes via the saddlepoint
(steepest-descent) density and a two-piece inverse-Gaussian/gamma
envelope.

The cumulant generating function of the unit-shape variate is
K(s) = log cosh(z) - log cos(sqrt(2u)), u = s - z^2/2, with
K'(s) = utan(2u) and K''(s) = x^2 + (1-x)/(2u) at x = K'(s).  The
saddlepoint density of the shape-n mean is
sqrt(n/(2 pi)) K''(s(x))^{-1/2} exp(n [K(s(x)) - s(x) x]).

Rather than bounding the kernel itself, the envelope bounds the exponent
phi(x) = K(s(x)) - s(x) x after subtracting the tail-shape correction
delta; the corrected function eta = phi - delta is concave on each side
of the paste point x_c, so two tangent lines enclose it.  Folding the
correction back in turns the pieces into inverse-Gaussian and gamma
kernels, with the K'' factor absorbed by the ratio bounds alpha_l,
alpha_r.  Every constant is kept in log space: shapes up to a few
hundred would otherwise overflow Gamma(n) and e^{n b}.

Envelopes are immutable and cached per (n, z); building one runs a
pointwise dominance spot check and refuses to return an envelope that
fails it.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special as sc

from .density import _mean_factor
from .errors import ConvergenceError, EnvelopeValidityError, IterationCapError
from .rng import sample_truncated_gamma, sample_truncated_inverse_gaussian
from .special import log_cosh, log_gamma_fn, utan

__all__ = [
    "U_MAX",
    "CgfPoint",
    "SaddleEnvelope",
    "cgf",
    "cgf_p1",
    "cgf_p2",
    "solve_saddle",
    "phi",
    "delta",
    "eta",
    "build_envelope",
    "sp_density",
    "log_sp_density",
    "sample_saddle",
    "sample_saddle_batch",
    "check_curvature_monotonicity",
]

# K blows up as u -> pi^2/8 (cos sqrt(2u) hits zero).
U_MAX = np.pi ** 2 / 8.0

_LOG_2PI = np.log(2.0 * np.pi)

MAX_PROPOSAL_ROUNDS = 1_000_000
_ENVELOPE_SLACK = 1e-9


def _log_cos_sqrt(s):
    """log cos(sqrt(s)) for s >= 0, log cosh(sqrt(-s)) for s < 0."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 0
    neg = s < 0
    out[pos] = np.log(np.cos(np.sqrt(s[pos])))
    rn = np.sqrt(-s[neg])
    out[neg] = rn + np.log1p(np.exp(-2.0 * rn)) - np.log(2.0)
    return out


def _check_u_domain(u):
    if np.any(u >= U_MAX):
        raise ValueError("cgf: shifted argument u = s - z^2/2 must be below pi^2/8")


def cgf(s, z):
    """Cumulant generating function K(s) of J*(1, z); K(0) = 0."""
    s = np.asarray(s, dtype=float)
    u = s - 0.5 * float(z) ** 2
    _check_u_domain(u)
    out = log_cosh(z) - _log_cos_sqrt(2.0 * u)
    return float(out) if out.ndim == 0 else out


def cgf_p1(s, z):
    """K'(s) = utan(2u); strictly increasing (K is strictly convex)."""
    s = np.asarray(s, dtype=float)
    u = s - 0.5 * float(z) ** 2
    _check_u_domain(u)
    return utan(2.0 * u)


def _utan_minus_one_over(s):
    """(utan(s) - 1)/s with a series where the quotient cancels."""
    s = np.asarray(s, dtype=float)
    out = np.empty_like(s)
    tiny = np.abs(s) < 1e-3
    st = s[tiny]
    out[tiny] = 1.0 / 3.0 + 2.0 * st / 15.0 + 17.0 * st * st / 315.0
    big = ~tiny
    out[big] = (utan(s[big]) - 1.0) / s[big]
    return out


def cgf_p2(s, z):
    """K''(s) = x^2 + (1 - x)/(2u) at x = K'(s); equals 2/3 at u = 0."""
    s = np.asarray(s, dtype=float)
    u2 = 2.0 * (s - 0.5 * float(z) ** 2)
    _check_u_domain(u2 / 2.0)
    x = utan(u2)
    out = x * x - _utan_minus_one_over(u2)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class CgfPoint:
    """A solved saddle: mean coordinate x, dual s, shifted dual u = s - z^2/2.

    x < 1 iff u < 0, x = 1 iff u = 0, x > 1 iff u > 0.
    """

    x: float
    s: float
    u: float


def _u_bracket(x):
    """Bracket (lo, hi) containing the root of utan(2u) = x, and a seed."""
    if x < 1.0:
        lo = -0.5 / (x * x) - 1.0
        hi = 0.0
        seed = max(lo + 1e-12, min(-1e-18, 1.5 * (x - 1.0))) if x > 0.8 \
            else -0.5 / (x * x)
    else:
        lo = 0.0
        theta = 0.5 * np.pi - 1.0 / (np.pi * x)
        hi = 0.5 * theta * theta
        seed = min(1.5 * (x - 1.0), 0.95 * hi)
        seed = max(seed, 1e-18)
    return lo, hi, seed


def _solve_u_vec(x, tol=1e-12, max_iter=200):
    """Solve utan(2u) = x elementwise by safeguarded Newton."""
    shape = np.shape(x)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    u = np.empty_like(x)
    lo = np.empty_like(x)
    hi = np.empty_like(x)
    exact = x == 1.0
    u[exact] = 0.0
    active = np.nonzero(~exact)[0]
    for j in active:
        lo[j], hi[j], u[j] = _u_bracket(x[j])
    target = tol * np.maximum(1.0, x)
    for _ in range(max_iter):
        if active.size == 0:
            return u.reshape(shape)
        ua = u[active]
        f = utan(2.0 * ua) - x[active]
        done = np.abs(f) <= target[active]
        pos = f > 0.0
        hi[active[pos]] = np.minimum(hi[active[pos]], ua[pos])
        neg = ~pos
        lo[active[neg]] = np.maximum(lo[active[neg]], ua[neg])
        k2 = cgf_p2(ua, 0.0)
        step = np.where(k2 > 0.0, f / np.where(k2 > 0.0, k2, 1.0), np.inf)
        un = ua - step
        bad = ~((lo[active] < un) & (un < hi[active]))
        un[bad] = 0.5 * (lo[active][bad] + hi[active][bad])
        u[active] = np.where(done, ua, un)
        active = active[~done]
    raise ConvergenceError("saddle solve did not converge")


def solve_saddle(x, z):
    """Solve K'(s) = x for the saddle s; returns a :class:`CgfPoint`.

    Newton iteration on the shifted dual u, safeguarded by a bracketing
    interval (u < 0 for x < 1, 0 < u < pi^2/8 for x > 1; u = 0 exactly at
    x = 1).
    """
    x = float(x)
    if x <= 0.0:
        raise ValueError("solve_saddle: x must be positive")
    u = float(_solve_u_vec(np.array([x]))[0])
    return CgfPoint(x=x, s=u + 0.5 * float(z) ** 2, u=u)


def phi(x, z):
    """Concave dual phi(x) = min_s {K(s) - s x} = K(s(x)) - s(x) x.

    Its derivative is -s(x); the maximum value 0 is attained at the mode
    m = K'(0) = tanh(z)/z.
    """
    pt = solve_saddle(x, z)
    return cgf(pt.s, z) - pt.s * pt.x


def delta(x, x_c):
    """Tail-shape correction: 1/(2 x_c) - 1/(2x) left of x_c, log(x/x_c)
    right of it.  Continuous, zero at x_c."""
    x = np.asarray(x, dtype=float)
    x_c = float(x_c)
    if np.any(x <= 0.0) or x_c <= 0.0:
        raise ValueError("delta: arguments must be positive")
    out = np.where(x <= x_c,
                   0.5 / x_c - 0.5 / x,
                   np.log(np.maximum(x, x_c) / x_c))
    return float(out) if out.ndim == 0 else out


def eta(x, z, x_c):
    """phi - delta; concave on (0, x_c) and on (x_c, inf)."""
    return phi(x, z) - delta(x, x_c)


@dataclass(frozen=True)
class SaddleEnvelope:
    """Precomputed envelope of the shape-n saddlepoint density.

    The left piece (x <= x_c) is kappa_l times an IG(1/sqrt(rho_l), n)
    density; the right piece is kappa_r times a Gamma(n, n rho_r)
    density.  All masses are stored as logs.
    """

    n: float
    z: float
    m: float
    x_l: float
    x_c: float
    x_r: float
    slope_l: float
    intercept_l: float
    slope_r: float
    intercept_r: float
    rho_l: float
    rho_r: float
    alpha_l: float
    alpha_r: float
    log_kappa_l: float
    log_kappa_r: float
    log_mass_left: float
    log_mass_right: float
    left_fraction: float

    @property
    def ig_mu(self):
        return 1.0 / np.sqrt(self.rho_l)

    @property
    def gamma_rate(self):
        return self.n * self.rho_r


def _log_envelope(env, x):
    """log of the bounding kernel k(x), vectorized."""
    x = np.asarray(x, dtype=float)
    n = env.n
    out = np.empty_like(x)
    L = x <= env.x_c
    out[L] = (0.5 * (np.log(n) - _LOG_2PI) - 0.5 * np.log(env.alpha_l)
              + n / (2.0 * env.x_c) - 1.5 * np.log(x[L]) - n / (2.0 * x[L])
              + n * (env.intercept_l + env.slope_l * x[L]))
    R = ~L
    out[R] = (0.5 * (np.log(n) - _LOG_2PI) - 0.5 * np.log(env.alpha_r)
              - n * np.log(env.x_c) + (n - 1.0) * np.log(x[R])
              + n * (env.intercept_r + env.slope_r * x[R]))
    return out


def _log_sp_vec(x, n, z):
    x = np.asarray(x, dtype=float)
    u = _solve_u_vec(x)
    s = u + 0.5 * float(z) ** 2
    k2 = cgf_p2(s, z)
    return (0.5 * (np.log(n) - _LOG_2PI) - 0.5 * np.log(k2)
            + n * (cgf(s, z) - s * x))


def log_sp_density(x, n, z):
    """log of the saddlepoint density of J*(n, z)/n at x."""
    if n <= 0.0:
        raise ValueError("log_sp_density: n must be positive")
    out = _log_sp_vec(x, n, z)
    return float(out[()]) if np.ndim(out) == 0 else out


def sp_density(x, n, z):
    """Saddlepoint density sqrt(n/2pi) K''^{-1/2} e^{n phi(x)} of J*(n,z)/n."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise ValueError("sp_density: x must be positive")
    out = np.exp(_log_sp_vec(x, n, z))
    return float(out[()]) if np.ndim(out) == 0 else out


def _build_envelope_impl(n, z):
    m = _mean_factor(z)
    x_l = m
    x_c = 1.1 * m
    x_r = 1.2 * m
    half_z2 = 0.5 * z * z

    # tangent of eta at x_l (left piece): eta' = phi' - 1/(2x^2), phi' = -s
    s_l = solve_saddle(x_l, z).s
    slope_l = -s_l - 0.5 / (x_l * x_l)
    eta_l = (cgf(s_l, z) - s_l * x_l) - (0.5 / x_c - 0.5 / x_l)
    intercept_l = eta_l - slope_l * x_l

    # tangent of eta at x_r (right piece): eta' = phi' - 1/x
    s_r = solve_saddle(x_r, z).s
    slope_r = -s_r - 1.0 / x_r
    eta_r = (cgf(s_r, z) - s_r * x_r) - np.log(x_r / x_c)
    intercept_r = eta_r - slope_r * x_r

    rho_l = -2.0 * slope_l
    rho_r = -slope_r
    if rho_l <= 0.0 or rho_r <= 0.0:  # pragma: no cover - guaranteed by x_l = m
        raise EnvelopeValidityError("tangent slopes must be negative")

    # ratio bounds, tightest constants consistent with the monotonicity
    # of K''/x^3 (decreasing) and K''/x^2 (increasing)
    s_c = solve_saddle(x_c, z).s
    k2_c = cgf_p2(s_c, z)
    alpha_l = k2_c / x_c ** 3
    alpha_r = k2_c / x_c ** 2

    log_kappa_l = (-0.5 * np.log(alpha_l) + n / (2.0 * x_c)
                   + n * intercept_l - n * np.sqrt(rho_l))
    log_kappa_r = (0.5 * (np.log(n) - _LOG_2PI) - 0.5 * np.log(alpha_r)
                   - n * np.log(x_c) + n * intercept_r
                   + log_gamma_fn(n) - n * np.log(n * rho_r))

    ig_mu = 1.0 / np.sqrt(rho_l)
    from .special import inverse_gaussian_log_cdf

    log_mass_left = log_kappa_l + inverse_gaussian_log_cdf(x_c, ig_mu, n)
    tail = sc.gammaincc(n, n * rho_r * x_c)
    log_mass_right = (log_kappa_r + np.log(tail)) if tail > 0.0 else -np.inf
    log_total = np.logaddexp(log_mass_left, log_mass_right)
    left_fraction = float(np.exp(log_mass_left - log_total))

    env = SaddleEnvelope(
        n=n, z=z, m=m, x_l=x_l, x_c=x_c, x_r=x_r,
        slope_l=float(slope_l), intercept_l=float(intercept_l),
        slope_r=float(slope_r), intercept_r=float(intercept_r),
        rho_l=float(rho_l), rho_r=float(rho_r),
        alpha_l=float(alpha_l), alpha_r=float(alpha_r),
        log_kappa_l=float(log_kappa_l), log_kappa_r=float(log_kappa_r),
        log_mass_left=float(log_mass_left),
        log_mass_right=float(log_mass_right),
        left_fraction=left_fraction,
    )

    # dominance spot check before the envelope is allowed out the door
    spots = np.concatenate([
        np.logspace(np.log10(m / 20.0), np.log10(20.0 * m), 24),
        np.array([0.5 * m, x_l, x_c * (1.0 - 1e-9), x_c * (1.0 + 1e-9), x_r]),
    ])
    gap = _log_envelope(env, spots) - _log_sp_vec(spots, n, z)
    if gap.min() < np.log1p(-_ENVELOPE_SLACK):
        raise EnvelopeValidityError(
            f"saddlepoint envelope fails dominance at n={n}, z={z} "
            f"(worst log gap {gap.min():.3e})"
        )
    return env


@lru_cache(maxsize=512)
def _build_envelope_cached(n, z):
    return _build_envelope_impl(n, z)


def build_envelope(n, z):
    """Envelope for the shape-n saddlepoint density, cached per (n, z).

    Raises :class:`EnvelopeValidityError` if the construction fails its
    dominance spot check.
    """
    n = float(n)
    if n <= 0.0:
        raise ValueError("build_envelope: n must be positive")
    return _build_envelope_cached(n, float(abs(z)))


def sample_saddle_batch(n, z, size, rng, counters=None,
                        max_rounds=MAX_PROPOSAL_ROUNDS):
    """Fill an array with approximate J*(n, z) draws (saddlepoint method).

    Intended for large shapes (n of order 10 and up); the relative density
    error of the saddlepoint approximation decays like 1/n.
    """
    n = float(n)
    z = float(abs(z))
    env = build_envelope(n, z)
    m = int(size)
    out = np.empty(m)
    pending = np.arange(m)
    rounds = 0
    while pending.size:
        if rounds >= max_rounds:
            raise IterationCapError(
                "saddlepoint sampler exhausted its proposal budget")
        rounds += 1
        k = pending.size
        take_left = rng.uniform(k) < env.left_fraction
        x = np.empty(k)
        n_left = int(take_left.sum())
        if n_left:
            x[take_left] = sample_truncated_inverse_gaussian(
                env.ig_mu, n, env.x_c, rng, size=n_left)
        if k - n_left:
            x[~take_left] = sample_truncated_gamma(
                n, env.gamma_rate, env.x_c, rng, size=k - n_left)
        if counters is not None:
            counters["proposals"] = counters.get("proposals", 0) + k
            counters["left_proposals"] = (counters.get("left_proposals", 0)
                                          + n_left)
        log_u = np.log(rng.uniform(k))
        ok = log_u + _log_envelope(env, x) <= _log_sp_vec(x, n, z)
        out[pending[ok]] = x[ok]
        pending = pending[~ok]
        if counters is not None:
            counters["accepted"] = counters.get("accepted", 0) + int(ok.sum())
    return n * out


def sample_saddle(n, z, rng, counters=None):
    """One approximate draw from J*(n, z)."""
    return float(sample_saddle_batch(n, z, 1, rng, counters=counters)[0])


def check_curvature_monotonicity(z, x_grid=None, warn=True):
    """Grid check of the curvature-ratio monotonicity the envelope relies on.

    Verifies that K''(s(x))/x^2 is increasing and K''(s(x))/x^3 is
    decreasing along the grid and that both stay at or below 1.  Returns a
    dict of booleans; failures raise a RuntimeWarning unless ``warn`` is
    off.  There is no known proof of these monotonicities, which is why
    the envelope additionally spot-checks dominance at build time.
    """
    import warnings

    z = float(abs(z))
    m = _mean_factor(z)
    if x_grid is None:
        x_grid = np.logspace(np.log10(m / 50.0), np.log10(50.0 * m), 2000)
    x = np.asarray(x_grid, dtype=float)
    u = _solve_u_vec(x)
    k2 = cgf_p2(u + 0.5 * z * z, z)
    r2 = k2 / x ** 2
    r3 = k2 / x ** 3
    # both ratios live in (0, 1]; 1e-10 absorbs solver/rounding noise on
    # the saturated plateaus while catching any real reversal
    noise = 1e-10
    result = {
        "ratio_x2_increasing": bool(np.all(np.diff(r2) >= -noise)),
        "ratio_x2_bounded": bool(r2.max() <= 1.0 + 1e-9),
        "ratio_x3_decreasing": bool(np.all(np.diff(r3) <= noise)),
        "ratio_x3_bounded": bool(r3.max() <= 1.0 + 1e-9),
    }
    if warn and not all(result.values()):
        warnings.warn(
            f"curvature-ratio monotonicity failed at z={z}: {result}",
            RuntimeWarning,
            stacklevel=2,
        )
    return result
