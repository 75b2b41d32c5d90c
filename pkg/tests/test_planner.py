"""Round-size planning: target-probability searches, multiplier
schedules, misleading-limit sizes, and per-rule stop probabilities."""

import math
from fractions import Fraction

import numpy as np
import pytest

from pollaudit.contest import PairwiseContest, RoundHistory
from pollaudit.errors import CapacityError, DomainError
from pollaudit.planner import (
    eor_next_round_size,
    first_round_stop_probs_at,
    minerva_schedule,
    misleading_min_round_size,
    misleading_sample_prob,
    multi_candidate_round_size,
    next_round_size,
    round_stop_prob,
    so_crossing_curve,
    so_crossing_prob,
    so_next_round_size,
)

from oracles import exact_sf, so_crossing_brute

TOY = PairwiseContest.from_winner_share(0.51)
ALPHA = 0.1


class TestNextRoundSize:
    """Frozen minima for the 1%-lead toy contest, derived by exhaustive
    scan of the exact saw-toothed stopping probability."""

    def test_first_round_minimum(self):
        plan = next_round_size(None, TOY, ALPHA, 0.9)
        assert plan.cumulative_n == 17203
        assert plan.kmin == 8690
        assert plan.stop_prob >= 0.9
        assert round_stop_prob(0, 0, plan.cumulative_n - 1, TOY, ALPHA) < 0.9

    def test_second_round_near_miss(self):
        plan = next_round_size(RoundHistory((17272,), (8724,)), TOY, ALPHA, 0.9)
        assert plan.cumulative_n == 34012
        assert plan.stop_prob >= 0.9
        assert round_stop_prob(8724, 17272, plan.cumulative_n - 1, TOY, ALPHA) < 0.9

    def test_second_round_weak_sample(self):
        plan = next_round_size(RoundHistory((17272,), (8637,)), TOY, ALPHA, 0.9)
        assert plan.cumulative_n == 58003
        assert plan.stop_prob >= 0.9
        assert round_stop_prob(8637, 17272, plan.cumulative_n - 1, TOY, ALPHA) < 0.9

    def test_postcondition_recomputes_bitwise(self):
        for margin, target in [(0.2567, 0.95), (0.1, 0.7), (0.05, 0.9)]:
            c = PairwiseContest(margin)
            plan = next_round_size(None, c, ALPHA, target)
            assert plan.stop_prob == round_stop_prob(0, 0, plan.cumulative_n, c, ALPHA)

    def test_misleading_prob_only_on_first_round(self):
        c = PairwiseContest(0.2567)
        first = next_round_size(None, c, ALPHA, 0.9)
        assert first.misleading_prob is not None
        later = next_round_size(RoundHistory((first.cumulative_n,), (70,)), c, ALPHA, 0.9)
        assert later.misleading_prob is None

    def test_capacity_error_carries_best_plan(self):
        c = PairwiseContest(0.05)
        with pytest.raises(CapacityError) as err:
            next_round_size(None, c, ALPHA, 0.95, max_n=200)
        best = err.value.best_plan
        assert best is not None and best.cumulative_n == 200
        assert best.stop_prob < 0.95

    def test_max_n_must_exceed_history(self):
        with pytest.raises(DomainError):
            next_round_size(RoundHistory((300,), (160,)), PairwiseContest(0.1), ALPHA, 0.9, 300)


class TestMinervaSchedule:
    def test_toy_schedule(self):
        assert minerva_schedule(17272, 1.5, 2) == (17272, 43180)

    def test_half_up_rounding(self):
        assert minerva_schedule(1, 1.5, 3) == (1, 3, 6)

    def test_doubling(self):
        assert minerva_schedule(100, 2.0, 3) == (100, 300, 700)

    def test_domain(self):
        with pytest.raises(DomainError):
            minerva_schedule(0, 1.5, 2)
        with pytest.raises(DomainError):
            minerva_schedule(10, 1.0, 2)


TABLE_MISLEADING_MIN = [
    (0.1, 0.25, 25),
    (0.1, 0.15, 73),
    (0.1, 0.05, 657),
    (0.01, 0.25, 85),
    (0.01, 0.15, 239),
    (0.01, 0.05, 2163),
    (0.001, 0.25, 149),
    (0.001, 0.15, 421),
]


class TestMisleadingMinRoundSize:
    @pytest.mark.parametrize("limit,margin,expected", TABLE_MISLEADING_MIN)
    def test_published_values(self, limit, margin, expected):
        assert misleading_min_round_size(PairwiseContest(margin), limit) == expected

    def test_minimality_exhaustive(self):
        # no smaller size satisfies the limit (scan everything below)
        for limit, margin, expected in TABLE_MISLEADING_MIN[:6]:
            c = PairwiseContest(margin)
            probs = [misleading_sample_prob(n, c) for n in range(1, expected)]
            assert all(p > limit for p in probs)
            assert misleading_sample_prob(expected, c) <= limit

    def test_against_exact_rational(self):
        c = PairwiseContest(0.25)
        for n in (1, 2, 3, 10, 25, 26):
            got = misleading_sample_prob(n, c)
            want = 1 - exact_sf(n // 2 + 1, n, Fraction(5, 8))
            assert got == pytest.approx(float(want), rel=1e-12, abs=1e-15)

    def test_capacity(self):
        with pytest.raises(CapacityError):
            misleading_min_round_size(PairwiseContest(0.05), 0.01, max_n=500)
        with pytest.raises(CapacityError):
            misleading_min_round_size(PairwiseContest(0.01), 0.001, max_n=20000)

    def test_parity_monotonicity_assumption(self):
        # within one parity class the probability never increases with n
        for margin in (0.05, 0.15, 0.25):
            c = PairwiseContest(margin)
            probs = [misleading_sample_prob(n, c) for n in range(900, 1400)]
            even = probs[0::2]
            odd = probs[1::2]
            assert all(a >= b for a, b in zip(even, even[1:]))
            assert all(a >= b for a, b in zip(odd, odd[1:]))


class TestMisleadingCrossingBracket:
    def test_pilot_margin_crossing_near_095(self):
        # the first-round misleading probability of the plan falls
        # through 0.001 between targets 0.90 and 0.97
        c = PairwiseContest(0.2567)
        lo_plan = next_round_size(None, c, ALPHA, 0.90)
        hi_plan = next_round_size(None, c, ALPHA, 0.97)
        assert misleading_sample_prob(lo_plan.cumulative_n, c) > 0.001
        assert misleading_sample_prob(hi_plan.cumulative_n, c) <= 0.001


class TestSoCrossing:
    @pytest.mark.parametrize("n,margin", [(8, 0.5), (10, 0.4), (12, 0.3)])
    def test_matches_brute_force_enumeration(self, n, margin):
        c = PairwiseContest(margin)
        got = so_crossing_prob(n, c, ALPHA)
        want = so_crossing_brute(n, c.p_a, c.p_a, 0.5, ALPHA)
        assert got == pytest.approx(want, abs=1e-12)

    def test_curve_is_cumulative(self):
        curve = so_crossing_curve(300, PairwiseContest(0.3), ALPHA)
        assert np.all(np.diff(curve) >= -1e-15)
        assert 0.0 <= curve[0] and curve[-1] <= 1.0

    def test_with_history_offset(self):
        # starting above the crossing threshold crosses immediately
        c = PairwiseContest(0.5)
        n_cross = math.ceil(math.log(1 / ALPHA) / math.log(c.p_a / 0.5))
        curve = so_crossing_curve(5, c, ALPHA, start_n=n_cross, start_k=n_cross)
        assert np.all(curve == 1.0)

    def test_round_size_search(self):
        c = PairwiseContest(0.2567)
        n = so_next_round_size(0, 0, c, ALPHA, 0.9)
        assert so_crossing_prob(n, c, ALPHA) >= 0.9
        assert so_crossing_prob(n - 1, c, ALPHA) < 0.9


class TestFirstRoundStopProbs:
    def test_single_ballot_collapse(self):
        c = PairwiseContest(0.5)
        # one winner ballot suffices at this risk limit
        alpha = 0.7
        probs = first_round_stop_probs_at(1, c, alpha)
        assert probs.providence == probs.so_bravo == probs.eor_bravo == pytest.approx(c.p_a)

    def test_published_row(self):
        c = PairwiseContest(0.25)
        probs = first_round_stop_probs_at(25, c, ALPHA)
        assert abs(probs.providence - 0.221) <= 0.001
        assert abs(probs.eor_bravo - 0.115) <= 0.001
        assert abs(probs.so_bravo - 0.152) <= 0.005

    def test_ordering(self):
        for margin, n in [(0.25, 25), (0.05, 657), (0.15, 239)]:
            probs = first_round_stop_probs_at(n, PairwiseContest(margin), ALPHA)
            assert probs.providence >= probs.so_bravo >= probs.eor_bravo


class TestEorRoundSize:
    def test_meets_target_minimally(self):
        c = PairwiseContest(0.2567)
        n = eor_next_round_size(0, 0, c, ALPHA, 0.9)
        from pollaudit.binom import BinomialSpec, log_binom_sf
        from pollaudit.rules import eor_bravo_kmin

        def sp(nn):
            need = eor_bravo_kmin(nn, c, ALPHA)
            return math.exp(log_binom_sf(need, BinomialSpec(nn, c.p_a))) if need <= nn else 0.0

        assert sp(n) >= 0.9
        assert sp(n - 1) < 0.9


class TestMultiCandidate:
    def test_single_pair_full_relevance(self):
        c = PairwiseContest(0.2567)
        plan = next_round_size(None, c, ALPHA, 0.9)
        assert multi_candidate_round_size([c], [None], ALPHA, 0.9) == plan.cumulative_n

    def test_half_relevance_doubles(self):
        base = PairwiseContest(0.2567)
        half = PairwiseContest(0.2567, relevant_fraction=0.5)
        plan = next_round_size(None, base, ALPHA, 0.9)
        assert multi_candidate_round_size([half], [None], ALPHA, 0.9) == math.ceil(
            plan.cumulative_n / 0.5
        )

    def test_three_candidate_fixture_matches_hand_composition(self):
        # shares 60/30/10 of a full turnout
        w, l1, l2, total = 6000, 3000, 1000, 10000
        pair1 = PairwiseContest.from_tallies(w, l1, total)
        pair2 = PairwiseContest.from_tallies(w, l2, total)
        by_hand = max(
            math.ceil(next_round_size(None, pair1, ALPHA, 0.8).cumulative_n / pair1.relevant_fraction),
            math.ceil(next_round_size(None, pair2, ALPHA, 0.8).cumulative_n / pair2.relevant_fraction),
        )
        got = multi_candidate_round_size([pair1, pair2], [None, None], ALPHA, 0.8)
        assert got == by_hand

    def test_capacity_propagates(self):
        tight = PairwiseContest(0.05, relevant_fraction=0.5)
        with pytest.raises(CapacityError):
            multi_candidate_round_size([tight], [None], ALPHA, 0.95, max_n=100)
