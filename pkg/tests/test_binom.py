"""Kernel-level checks: pmf/sf against exact rational arithmetic,
the two ratios, and the truncate-then-convolve step."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pollaudit.binom import (
    BinomialSpec,
    TailDistribution,
    log_binom_pmf,
    log_binom_sf,
    sigma,
    tau1,
    truncate_and_convolve,
)
from pollaudit.errors import DomainError

from oracles import exact_log_sf, exact_pmf, exact_sf

REL = 1e-12


def relerr(got: float, want: float) -> float:
    if want == 0.0:
        return abs(got)
    return abs(got - want) / abs(want)


class TestLogPmf:
    def test_all_losers(self):
        assert log_binom_pmf(0, BinomialSpec(3, 0.5)) == pytest.approx(math.log(0.125), rel=REL)

    def test_single_trial(self):
        assert log_binom_pmf(1, BinomialSpec(1, 0.75)) == pytest.approx(math.log(0.75), rel=REL)

    def test_against_exact_rational(self):
        got = log_binom_pmf(12, BinomialSpec(25, 0.625))
        want = math.log(float(exact_pmf(12, 25, Fraction(625, 1000))))
        assert relerr(got, want) < REL

    def test_domain(self):
        with pytest.raises(DomainError):
            log_binom_pmf(4, BinomialSpec(3, 0.5))
        with pytest.raises(DomainError):
            log_binom_pmf(-1, BinomialSpec(3, 0.5))
        with pytest.raises(DomainError):
            BinomialSpec(3, 1.0)


class TestLogSf:
    def test_edges(self):
        spec = BinomialSpec(10, 0.3)
        assert log_binom_sf(0, spec) == 0.0
        assert log_binom_sf(11, spec) == -math.inf
        with pytest.raises(DomainError):
            log_binom_sf(12, spec)

    def test_against_exact_tail_sum(self):
        got = log_binom_sf(13, BinomialSpec(25, 0.5))
        want = exact_log_sf(13, 25, Fraction(1, 2))
        assert relerr(got, want) < REL

    @pytest.mark.parametrize(
        "k,n,p",
        [
            (100, 140, Fraction(62835, 100000)),
            (1, 7, Fraction(9, 10)),
            (499, 1000, Fraction(1, 2)),
            (700, 1000, Fraction(3, 5)),
            (950, 1000, Fraction(1, 2)),
            (10, 1000, Fraction(1, 2)),
        ],
    )
    def test_exact_grid(self, k, n, p):
        # absolute error of the log is the relative error of the tail
        got = log_binom_sf(k, BinomialSpec(n, float(p)))
        want = exact_log_sf(k, n, p)
        assert abs(got - want) < 1e-9

    def test_huge_n_deep_tail_stays_finite(self):
        # linear-space survival functions underflow here
        val = log_binom_sf(70000, BinomialSpec(100000, 0.5))
        assert -8300 < val < -8200

    def test_large_n_against_high_precision(self):
        mp = pytest.importorskip("mpmath")
        mp.mp.dps = 60

        def oracle(k, n, p):
            p = mp.mpf(p)
            mode = int((n + 1) * p)
            if k > mode:
                term = mp.e ** (
                    mp.loggamma(n + 1) - mp.loggamma(k + 1) - mp.loggamma(n - k + 1)
                ) * p**k * (1 - p) ** (n - k)
                total = mp.mpf(0)
                i = k
                while i <= n:
                    total += term
                    if term < total * mp.mpf("1e-70"):
                        break
                    term *= mp.mpf(n - i) / (i + 1) * p / (1 - p)
                    i += 1
                return float(mp.log(total))
            term = mp.e ** (
                mp.loggamma(n + 1) - mp.loggamma(k) - mp.loggamma(n - k + 2)
            ) * p ** (k - 1) * (1 - p) ** (n - k + 1)
            total = mp.mpf(0)
            i = k - 1
            while i >= 0:
                total += term
                if term < total * mp.mpf("1e-70"):
                    break
                term *= mp.mpf(i) / (n - i + 1) * (1 - p) / p
                i -= 1
            return float(mp.log(1 - total))

        for k, n, p in [
            (8725, 17272, 0.505),
            (500500, 10**6, 0.5),
            (3000, 10**6, 0.003),
            (70000, 10**5, 0.5),
        ]:
            got = log_binom_sf(k, BinomialSpec(n, p))
            assert abs(got - oracle(k, n, p)) < 1e-9

    def test_nonincreasing_in_k(self):
        spec = BinomialSpec(400, 0.52)
        vals = [log_binom_sf(k, spec) for k in range(0, 401)]
        assert all(a >= b for a, b in zip(vals, vals[1:]))


class TestSigma:
    def test_empty_product(self):
        assert sigma(0, 0.75, 0.5, 0) == 0.0

    def test_single_ballot(self):
        assert sigma(1, 0.75, 0.5, 1) == pytest.approx(math.log(1.5), rel=REL)

    def test_composition_identity_exact(self):
        # sigma over a concatenated sample equals the sum of the parts
        for k1, n1, k2, n2 in [(3, 7, 10, 12), (0, 5, 5, 5), (8724, 17272, 8000, 16806)]:
            whole = sigma(k1 + k2, 0.505, 0.5, n1 + n2)
            parts = sigma(k1, 0.505, 0.5, n1) + sigma(k2, 0.505, 0.5, n2)
            assert whole == pytest.approx(parts, rel=1e-12, abs=1e-12)

    def test_domain(self):
        with pytest.raises(DomainError):
            sigma(1, 0.5, 0.5, 2)
        with pytest.raises(DomainError):
            sigma(3, 0.6, 0.5, 2)

    @given(
        n=st.integers(1, 300),
        pa=st.floats(0.51, 0.99),
        p0=st.floats(0.01, 0.5),
    )
    @settings(max_examples=60, deadline=None)
    def test_strictly_increasing_in_k(self, n, pa, p0):
        vals = [sigma(k, pa, p0, n) for k in range(n + 1)]
        assert all(b > a for a, b in zip(vals, vals[1:]))


class TestTau1:
    def test_zero_k(self):
        assert tau1(0, 0.6, 0.5, 50) == 0.0
        assert tau1(0, 0.6, 0.5, 0) == 0.0

    def test_all_winners_is_point_ratio(self):
        n = 40
        got = tau1(n, 0.6, 0.5, n)
        assert got == pytest.approx(n * math.log(0.6 / 0.5), rel=1e-12)

    def test_against_exact_tail_oracle(self):
        p = Fraction(62835, 100000)
        got = tau1(100, float(p), 0.5, 140)
        want = exact_log_sf(100, 140, p) - exact_log_sf(100, 140, Fraction(1, 2))
        assert relerr(got, want) < 1e-9

    @given(
        n=st.integers(1, 200),
        pa=st.floats(0.51, 0.95),
        p0=st.floats(0.05, 0.5),
    )
    @settings(max_examples=40, deadline=None)
    def test_strictly_increasing_in_k(self, n, pa, p0):
        vals = [tau1(k, pa, p0, n) for k in range(n + 1)]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    @given(
        n=st.integers(1, 150),
        k_frac=st.floats(0.0, 1.0),
        pa=st.floats(0.51, 0.95),
        p0=st.floats(0.05, 0.5),
    )
    @settings(max_examples=80, deadline=None)
    def test_dominates_sigma(self, n, k_frac, pa, p0):
        # the tail ratio never falls below the pmf ratio
        k = round(k_frac * n)
        assert tau1(k, pa, p0, n) >= sigma(k, pa, p0, n) - 1e-9


class TestTruncateAndConvolve:
    def test_identity_convolution(self):
        prior = TailDistribution.point_mass(0)
        spec = BinomialSpec(9, 0.4)
        out = truncate_and_convolve(prior, prior.support_max + 1, spec)
        want = np.array([log_binom_pmf(k, spec) for k in range(10)])
        np.testing.assert_allclose(out.log_mass, want, rtol=1e-12)

    def test_truncation_above_support_is_noop(self):
        prior = TailDistribution.from_binomial(BinomialSpec(6, 0.7))
        out = prior.truncated(prior.support_max + 1)
        np.testing.assert_array_equal(out.log_mass, prior.log_mass)

    def test_two_round_example_against_sequence_enumeration(self):
        # rounds of 2 then 4 ballots at p=0.7, threshold 2 after round 1
        p = Fraction(7, 10)
        by_tally = {}
        from itertools import product as iproduct

        for bits in iproduct((0, 1), repeat=6):
            if sum(bits[:2]) >= 2:
                continue
            w = p ** sum(bits) * (1 - p) ** (6 - sum(bits))
            by_tally[sum(bits)] = by_tally.get(sum(bits), Fraction(0)) + w
        prior = TailDistribution.from_binomial(BinomialSpec(2, 0.7))
        out = truncate_and_convolve(prior, 2, BinomialSpec(4, 0.7))
        assert len(out.log_mass) == 6 and set(by_tally) == set(range(6))
        for tally, want in by_tally.items():
            got = math.exp(out.log_mass[tally - out.support_min])
            assert relerr(got, float(want)) < 1e-12

    def test_mass_conserved(self):
        prior = TailDistribution.from_binomial(BinomialSpec(60, 0.52))
        kept = prior.truncated(40)
        out = truncate_and_convolve(prior, 40, BinomialSpec(35, 0.52))
        total_out = np.logaddexp.reduce(out.log_mass)
        assert relerr(math.exp(total_out), math.exp(kept.total_log_mass)) < 1e-9

    def test_tail_curve_matches_pointwise_tail(self):
        dist = TailDistribution.from_binomial(BinomialSpec(30, 0.6))
        curve = dist.log_tail_curve()
        for k in (0, 1, 15, 29, 30):
            assert curve[k] == pytest.approx(dist.log_tail(k), rel=1e-12)
