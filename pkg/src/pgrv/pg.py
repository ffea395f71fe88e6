"""Public Polya-Gamma interface: PG(b, z) sampling, moments, and the
hybrid method dispatcher.

PG(b, z) = J*(b, z/2)/4, so every draw is produced by one of the J*
samplers and rescaled.  The hybrid rule picks the sampler by shape:
unit-draw summation for integer b up to ``devroye_max``, the direct
real-shape sampler below ``alternate_max``, the saddlepoint method up to
``saddle_max``, and a moment-matched normal beyond that.  Shapes below 1
sit outside every exact sampler's validated range and fall back to the
truncated gamma-convolution; that method (like the saddlepoint and
normal routes) is approximate, which :attr:`Method.is_exact` records.

The sign of z is irrelevant (the density depends on z^2 and cosh), so
|z| is used throughout.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import alternate, devroye, saddle
from .density import JStarParams, jstar_mean, jstar_var, sample_gamma_sum

__all__ = [
    "PgParams",
    "Method",
    "SamplerThresholds",
    "DEFAULT_THRESHOLDS",
    "GAMMA_SUM_TERMS",
    "choose_method",
    "sample_pg",
    "sample_pg_batch",
    "sample_pg_normal",
    "pg_mean",
    "pg_var",
]

# Term count of the truncated gamma-convolution fallback; enough that its
# relative mean defect is about 1e-3/b of a percent (2/(pi^2 * 200)).
GAMMA_SUM_TERMS = 200


@dataclass(frozen=True)
class PgParams:
    """Shape b > 0 and tilt z (any sign) of a PG(b, z) target."""

    b: float
    z: float = 0.0

    def __post_init__(self):
        if not (self.b > 0.0) or not np.isfinite(self.b):
            raise ValueError("PgParams: shape b must be positive and finite")
        if not np.isfinite(self.z):
            raise ValueError("PgParams: tilt z must be finite")
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "z", float(self.z))

    @property
    def jstar(self):
        """The equivalent J* target (shape b, tilt |z|/2)."""
        return JStarParams(self.b, abs(self.z) / 2.0)


class Method(str, Enum):
    """Sampling routes understood by the dispatcher."""

    DEVROYE = "devroye"
    ALTERNATE = "alternate"
    SADDLEPOINT = "saddlepoint"
    NORMAL = "normal-approx"
    GAMMA_SUM = "gamma-sum"

    @property
    def is_exact(self):
        """Whether draws follow the target law exactly (up to float error)."""
        return self in (Method.DEVROYE, Method.ALTERNATE)


@dataclass(frozen=True)
class SamplerThresholds:
    """Shape cutoffs of the hybrid rule; must be strictly increasing.

    ``devroye_max`` applies to integer shapes only.
    """

    devroye_max: int = 2
    alternate_max: float = 13.0
    saddle_max: float = 170.0

    def __post_init__(self):
        if not (0 < self.devroye_max < self.alternate_max < self.saddle_max):
            raise ValueError("SamplerThresholds must be strictly increasing")


DEFAULT_THRESHOLDS = SamplerThresholds()


def choose_method(b, thresholds=None):
    """Pick the sampling route for shape b under the hybrid rule."""
    th = thresholds or DEFAULT_THRESHOLDS
    b = float(b)
    if b <= 0.0:
        raise ValueError("choose_method: b must be positive")
    if b < 1.0:
        return Method.GAMMA_SUM
    if b == int(b) and b <= th.devroye_max:
        return Method.DEVROYE
    if b < th.alternate_max:
        return Method.ALTERNATE
    if b <= th.saddle_max:
        return Method.SADDLEPOINT
    return Method.NORMAL


def _validate_method(method, b):
    if method is Method.DEVROYE and b != int(b):
        raise ValueError("devroye method requires an integer shape b")
    if method in (Method.ALTERNATE, Method.SADDLEPOINT) and b < 1.0:
        raise ValueError(f"{method.value} method requires shape b >= 1")


def _resolve_method(method, b, thresholds):
    if method is None or method == "auto":
        return choose_method(b, thresholds)
    method = Method(method)
    _validate_method(method, b)
    return method


def pg_mean(params):
    """E[PG(b, z)] = (b/(2z)) tanh(z/2); b/4 at z = 0."""
    return jstar_mean(params.jstar) / 4.0


def pg_var(params):
    """Var[PG(b, z)], from the gamma-convolution second moment."""
    return jstar_var(params.jstar) / 16.0


def sample_pg_normal(params, rng, size=None):
    """Moment-matched normal approximation, resampled to stay positive.

    Intended for very large shapes, where the mass below zero is
    astronomically small and the resampling loop never triggers in
    practice.
    """
    mean = pg_mean(params)
    sd = np.sqrt(pg_var(params))
    if size is None:
        x = mean + sd * rng.normal()
        while x <= 0.0:
            x = mean + sd * rng.normal()
        return float(x)
    out = mean + sd * rng.normal(int(size))
    bad = out <= 0.0
    while np.any(bad):
        out[bad] = mean + sd * rng.normal(int(bad.sum()))
        bad = out <= 0.0
    return out


def sample_pg(params, rng, method="auto", thresholds=None):
    """One draw from PG(b, z).

    ``method`` overrides the hybrid rule; invalid method/shape pairings
    (e.g. devroye with a non-integer shape) raise ValueError.
    """
    m = _resolve_method(method, params.b, thresholds)
    b = params.b
    zj = abs(params.z) / 2.0
    if m is Method.DEVROYE:
        return devroye.sample_jstar_int(int(b), zj, rng) / 4.0
    if m is Method.ALTERNATE:
        return alternate.sample_jstar_real(b, zj, rng) / 4.0
    if m is Method.SADDLEPOINT:
        return saddle.sample_saddle(b, zj, rng) / 4.0
    if m is Method.GAMMA_SUM:
        return sample_gamma_sum(params.jstar, GAMMA_SUM_TERMS, rng) / 4.0
    return sample_pg_normal(params, rng)


def sample_pg_batch(params, rng, size=None, out=None, method="auto",
                    thresholds=None):
    """Fill a buffer with PG(b, z) draws.

    Either ``size`` or a preallocated 1-d ``out`` array must be given;
    the filled array is returned.
    """
    if out is None:
        if size is None:
            raise ValueError("sample_pg_batch: provide size or out")
        out = np.empty(int(size))
    elif size is not None and int(size) != out.shape[0]:
        raise ValueError("sample_pg_batch: size disagrees with out")
    n = out.shape[0]
    if n == 0:
        return out
    m = _resolve_method(method, params.b, thresholds)
    b = params.b
    zj = abs(params.z) / 2.0
    if m is Method.NORMAL:
        out[:] = sample_pg_normal(params, rng, size=n)
        return out
    if m is Method.DEVROYE:
        out[:] = devroye.sample_jstar_int_batch(int(b), zj, n, rng)
    elif m is Method.ALTERNATE:
        out[:] = alternate.sample_jstar_real_batch(b, zj, n, rng)
    elif m is Method.SADDLEPOINT:
        out[:] = saddle.sample_saddle_batch(b, zj, n, rng)
    else:
        out[:] = sample_gamma_sum(params.jstar, GAMMA_SUM_TERMS, rng, size=n)
    out /= 4.0
    return out
