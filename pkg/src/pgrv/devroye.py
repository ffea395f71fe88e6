"""Exact J*(1, z) sampler and integer-shape J*(n, z) by summation.

The unit-shape density has two alternating-series representations whose
coefficients decrease on overlapping intervals; pasting them at
t = 2/pi makes every coefficient sequence decreasing, so a draw from the
leading-coefficient proposal can be accepted or rejected after finitely
many partial sums.  The proposal is a truncated inverse-Gaussian /
truncated-exponential mixture.

The accept/reject comparison uses the untilted coefficients: the common
factor cosh(z) e^{-x z^2/2} cancels between the uniform's upper bound
and the partial sums.
"""

import numpy as np

from .density import JStarParams, build_mixture
from .errors import IterationCapError
from .rng import sample_truncated_inverse_gaussian

__all__ = ["TRUNC_POINT", "DevroyeProposal", "sample_jstar1",
           "sample_jstar1_batch", "sample_jstar_int", "sample_jstar_int_batch"]

# Paste point between the two series representations; also where the two
# leading coefficients are equal.
TRUNC_POINT = 2.0 / np.pi

MAX_PROPOSAL_ROUNDS = 1_000_000
_MAX_SERIES_TERMS = 200

# Proposals this close to zero are rejected outright: their acceptance
# probability is negligible and the series is numerically unstable there.
_X_FLOOR = 1e-12


class DevroyeProposal:
    """Frozen per-tilt setup: paste point, component masses, and rates."""

    __slots__ = ("z", "trunc", "p_mass", "q_mass", "left_fraction", "lam_z",
                 "ig_mu", "ig_lam")

    def __init__(self, z):
        z = float(abs(z))
        mix = build_mixture(TRUNC_POINT, JStarParams(1.0, z))
        self.z = z
        self.trunc = TRUNC_POINT
        self.p_mass = mix.p_mass
        self.q_mass = mix.q_mass
        self.left_fraction = mix.left_fraction
        self.lam_z = mix.lam_z
        self.ig_mu = np.inf if z == 0.0 else 1.0 / z
        self.ig_lam = 1.0


def _coef_unit(n, x):
    """Untilted pasted coefficient a_n(x) for shape 1, vectorized in x."""
    left = x <= TRUNC_POINT
    out = np.empty_like(x)
    xl = x[left]
    half = n + 0.5
    out[left] = (np.pi * half * (2.0 / (np.pi * xl)) ** 1.5
                 * np.exp(-2.0 * half * half / xl))
    xr = x[~left]
    out[~left] = np.pi * half * np.exp(-half * half * np.pi ** 2 * xr / 2.0)
    return out


def _series_decide(x, u, s0, counters=None):
    """Alternating-sum accept/reject decisions, vectorized.

    ``u`` is uniform on (0, a_0(x)) and ``s0 = a_0(x)``.  Coefficients of
    the pasted representation decrease from the start, so the partial
    sums bracket the density immediately: accept at the first odd index
    with u <= S_n, reject at the first even index with u >= S_n.
    """
    accept = np.zeros(x.shape, dtype=bool)
    undecided = np.ones(x.shape, dtype=bool)
    s = s0.copy()
    decided_at = np.zeros(x.shape, dtype=np.int64)
    for n in range(1, _MAX_SERIES_TERMS + 1):
        idx = np.nonzero(undecided)[0]
        if idx.size == 0:
            break
        coef = _coef_unit(n, x[idx])
        if n % 2:
            s[idx] -= coef
            hit = u[idx] <= s[idx]
            accept[idx[hit]] = True
        else:
            s[idx] += coef
            hit = u[idx] >= s[idx]
        undecided[idx[hit]] = False
        decided_at[idx[hit]] = n
        # vanished increments: the comparison sits at machine precision,
        # decide by the best estimate (a measure-zero event)
        stuck = idx[~hit][coef[~hit] <= 1e-300]
        if stuck.size:
            accept[stuck] = u[stuck] <= s[stuck]
            undecided[stuck] = False
            decided_at[stuck] = n
    if counters is not None:
        counters["series_index_sum"] = (counters.get("series_index_sum", 0)
                                        + int(decided_at.sum()))
        counters["series_index_max"] = max(counters.get("series_index_max", 0),
                                           int(decided_at.max(initial=0)))
    return accept


def sample_jstar1_batch(z, size, rng, counters=None,
                        max_rounds=MAX_PROPOSAL_ROUNDS):
    """Fill an array with exact J*(1, z) draws."""
    setup = DevroyeProposal(z)
    n = int(size)
    out = np.empty(n)
    pending = np.arange(n)
    rounds = 0
    while pending.size:
        if rounds >= max_rounds:
            raise IterationCapError("J*(1,z) sampler exhausted its proposal budget")
        rounds += 1
        k = pending.size
        take_left = rng.uniform(k) < setup.left_fraction
        x = np.empty(k)
        n_left = int(take_left.sum())
        if n_left:
            x[take_left] = sample_truncated_inverse_gaussian(
                setup.ig_mu, setup.ig_lam, setup.trunc, rng, size=n_left)
        if k - n_left:
            x[~take_left] = setup.trunc + rng.exponential(k - n_left) / setup.lam_z
        if counters is not None:
            counters["proposals"] = counters.get("proposals", 0) + k
            counters["left_proposals"] = (counters.get("left_proposals", 0)
                                          + n_left)
        u = rng.uniform(k)
        ok = np.zeros(k, dtype=bool)
        valid = np.nonzero(x > _X_FLOOR)[0]
        if valid.size:
            xv = x[valid]
            a0 = _coef_unit(0, xv)
            # a vanished leading coefficient means the density underflowed;
            # reject rather than let 0 <= 0 accept a zero-density point
            live = a0 > 0.0
            valid, xv, a0 = valid[live], xv[live], a0[live]
        if valid.size:
            ok[valid] = _series_decide(xv, u[valid] * a0, a0, counters)
        out[pending[ok]] = x[ok]
        pending = pending[~ok]
        if counters is not None:
            counters["accepted"] = counters.get("accepted", 0) + int(ok.sum())
    return out


def sample_jstar1(z, rng, counters=None):
    """One exact draw from J*(1, z)."""
    return float(sample_jstar1_batch(abs(z), 1, rng, counters=counters)[0])


def sample_jstar_int_batch(n, z, size, rng, counters=None):
    """Exact J*(n, z) draws for integer n >= 1, by summing unit draws."""
    n = int(n)
    if n < 1:
        raise ValueError("sample_jstar_int: n must be a positive integer")
    draws = sample_jstar1_batch(z, n * int(size), rng, counters=counters)
    return draws.reshape(int(size), n).sum(axis=1)


def sample_jstar_int(n, z, rng, counters=None):
    """One exact draw from J*(n, z) for integer n >= 1."""
    return float(sample_jstar_int_batch(n, z, 1, rng, counters=counters)[0])
