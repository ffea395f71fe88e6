"""Real-shape sampler: cross-agreement with the unit-shape sampler,
moments, acceptance rates, and the shape decomposition."""

import numpy as np
import pytest
from scipy import stats as spstats
from scipy.integrate import quad

from pgrv.alternate import (
    _pieces,
    acceptance_probability,
    sample_jstar_alt,
    sample_jstar_alt_batch,
    sample_jstar_real,
    sample_jstar_real_batch,
)
from pgrv.density import JStarParams, build_trunc_table, density, jstar_mean, jstar_var
from pgrv.devroye import sample_jstar1_batch
from pgrv.rng import RngStream

N = 100_000
KS_LEVEL = 0.001


def test_unit_shape_agrees_with_devroye():
    a = sample_jstar_alt_batch(1.0, 0.0, N, RngStream(0))
    b = sample_jstar1_batch(0.0, N, RngStream(1))
    assert spstats.ks_2samp(a, b).pvalue > KS_LEVEL


def test_unit_shape_agrees_with_devroye_tilted():
    a = sample_jstar_alt_batch(1.0, 2.0, N, RngStream(2))
    b = sample_jstar1_batch(2.0, N, RngStream(3))
    assert spstats.ks_2samp(a, b).pvalue > KS_LEVEL


def test_mean_fractional_shape():
    p = JStarParams(2.5, 1.0)
    x = sample_jstar_alt_batch(2.5, 1.0, N, RngStream(4))
    se = x.std(ddof=1) / np.sqrt(N)
    assert abs(x.mean() - jstar_mean(p)) < 4 * se


def test_variance_shape_four():
    x = sample_jstar_alt_batch(4.0, 0.0, N, RngStream(5))
    assert abs(x.var(ddof=1) / jstar_var(JStarParams(4.0, 0.0)) - 1.0) < 0.05


def test_ks_against_gamma_sum_oracle():
    from pgrv.density import sample_gamma_sum

    rng = RngStream(6)
    draws = sample_jstar_alt_batch(3.5, 0.5, N, rng)
    oracle = sample_gamma_sum(JStarParams(3.5, 0.5), 200, rng, size=N)
    assert spstats.ks_2samp(draws, oracle).pvalue > KS_LEVEL


def test_shape_domain():
    with pytest.raises(ValueError):
        sample_jstar_alt(0.8, 0.0, RngStream(0))
    with pytest.raises(ValueError):
        sample_jstar_alt(4.2, 0.0, RngStream(0))
    with pytest.raises(ValueError):
        sample_jstar_real(0.9, 0.0, RngStream(0))


def test_scalar_draw():
    v = sample_jstar_alt(2.0, 0.5, RngStream(7))
    assert isinstance(v, float) and v > 0


def test_explicit_table_accepted():
    table = build_trunc_table(step=0.05)
    v = sample_jstar_alt(2.0, 0.5, RngStream(7), table=table)
    assert v > 0


class TestPieces:
    def test_boundary_is_single_piece(self):
        assert _pieces(4.0) == (1, 4.0)

    def test_decomposition_ranges(self):
        for h in (4.1, 7.2, 10.0, 16.0, 37.3):
            m, piece = _pieces(h)
            assert m * piece == pytest.approx(h, rel=1e-15)
            assert 1.0 < piece <= 4.0

    def test_sum_shape_ten(self):
        x = sample_jstar_real_batch(10.0, 0.0, N, RngStream(8))
        se = x.std(ddof=1) / np.sqrt(N)
        assert abs(x.mean() - 10.0) < 4 * se

    def test_sum_fractional(self):
        x = sample_jstar_real_batch(7.2, 2.0, N, RngStream(9))
        se = x.std(ddof=1) / np.sqrt(N)
        assert abs(x.mean() - 7.2 * np.tanh(2.0) / 2.0) < 4 * se


class TestAcceptance:
    @pytest.mark.parametrize("h,z,seed", [(1.0, 0.0, 10), (2.0, 1.0, 11),
                                          (4.0, 0.0, 12)])
    def test_rate_times_mass_matches_quadrature(self, h, z, seed):
        # acceptance * (p+q) equals the tilted-but-uncosh'd density mass,
        # computed here by quadrature
        from pgrv.density import mixture_weights, trunc_lookup

        counters = {}
        sample_jstar_alt_batch(h, z, N, RngStream(seed), counters=counters)
        rate = counters["accepted"] / counters["proposals"]
        pm, qm = mixture_weights(trunc_lookup(h), JStarParams(h, z))
        p0 = JStarParams(h, 0.0)
        mass, err = quad(
            lambda x: np.exp(-x * z * z / 2.0) * density(x, p0),
            0.0, 80.0, limit=400)
        se = np.sqrt(rate * (1 - rate) / counters["proposals"])
        assert abs(rate * (pm + qm) - mass) < 4 * se * (pm + qm) + 10 * err

    def test_rate_decreases_with_shape(self):
        rates = []
        for i, h in enumerate((1.0, 2.0, 3.0, 4.0)):
            counters = {}
            sample_jstar_alt_batch(h, 0.0, N, RngStream(20 + i),
                                   counters=counters)
            rates.append(counters["accepted"] / counters["proposals"])
        assert all(a > b for a, b in zip(rates, rates[1:]))

    def test_exact_rate_formula_decreases(self):
        vals = [acceptance_probability(h, 0.0) for h in (1.0, 2.0, 3.0, 4.0)]
        assert all(a > b for a, b in zip(vals, vals[1:]))


def test_proposal_support_respects_paste_point():
    # left component lands below t(h), right component above it; check
    # via the pooled draws covering both sides
    from pgrv.density import trunc_lookup

    x = sample_jstar_alt_batch(2.5, 1.0, 50_000, RngStream(13))
    t = trunc_lookup(2.5)
    assert x.min() > 0.0
    assert (x < t).any() and (x > t).any()
