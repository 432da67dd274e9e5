"""Tests for HI curve matching.

The oracle is an independent brute-force enumeration over every (train, lag)
pair with its own filter logic and fsum-based weighted mean; candidate sets
must agree bitwise, weighted means to 1e-12.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edhi.health import HiCurve
from edhi.matching import (
    MatchConfig,
    RulCandidate,
    candidate_estimates,
    curve_distance,
    estimate_rul,
    similarity,
)


def brute_force_candidates(test, train_set, config):
    """Exhaustive double loop, independent of candidate_estimates."""
    raw = []
    for train_id, curve in train_set:
        for lag in range(1, config.tau + 1):
            if lag + test.length <= curve.length:
                seg = curve.values[lag : lag + test.length]
                diff = test.values - seg
                d2 = float(diff @ diff) / test.length
                s = float(np.exp(-d2 / config.lam))
                raw.append(
                    (train_id, lag, s, float(curve.length - test.length - lag))
                )
    if not raw:
        return []
    s_max = max(r[2] for r in raw)
    return [r for r in raw if r[2] >= config.alpha * s_max and r[2] > 0.0]


def brute_force_weighted_mean(survivors):
    return math.fsum(s * e for _, _, s, e in survivors) / math.fsum(
        s for _, _, s, e in survivors
    )


def random_curve_case(rng, n_trains=None, max_len=30, tau=None):
    n_trains = n_trains if n_trains is not None else int(rng.integers(1, 6))
    test_len = int(rng.integers(2, max_len - 1))
    test = HiCurve(values=rng.uniform(0, 1, size=test_len))
    trains = [
        (f"u{k}", HiCurve(values=rng.uniform(0, 1, size=int(rng.integers(2, max_len + 1)))))
        for k in range(n_trains)
    ]
    config = MatchConfig(
        lam=float(rng.uniform(0.05, 2.0)),
        tau=tau if tau is not None else int(rng.integers(1, 6)),
        alpha=float(rng.uniform(0.0, 1.0)),
        r_max=float(rng.integers(5, 50)),
    )
    return test, trains, config


class TestCurveDistance:
    def test_identical_segments(self):
        test = HiCurve(values=np.array([0.5, 0.4, 0.3]))
        train = HiCurve(values=np.array([1.0, 0.5, 0.4, 0.3, 0.1]))
        assert curve_distance(test, train, lag=1) == 0.0

    def test_opposite_corners(self):
        test = HiCurve(values=np.array([1.0, 0.0]))
        train = HiCurve(values=np.array([0.9, 0.0, 1.0]))
        assert curve_distance(test, train, lag=1) == pytest.approx(1.0, abs=1e-12)

    def test_constant_offset(self):
        test = HiCurve(values=np.full(7, 0.6))
        train = HiCurve(values=np.full(12, 0.35))
        assert curve_distance(test, train, lag=2) == pytest.approx(
            0.25**2, abs=1e-12
        )

    def test_infeasible_lag_rejected(self):
        test = HiCurve(values=np.zeros(4))
        train = HiCurve(values=np.zeros(5))
        with pytest.raises(ValueError, match="exceeds"):
            curve_distance(test, train, lag=2)
        with pytest.raises(ValueError, match="lag"):
            curve_distance(test, train, lag=0)


class TestSimilarity:
    def test_zero_distance(self):
        assert similarity(0.0, 0.0005) == 1.0

    def test_distance_equal_to_lambda(self):
        assert similarity(0.3, 0.3) == pytest.approx(np.exp(-1.0), abs=1e-15)

    def test_halving_scale(self):
        lam = 0.0005
        d_half = math.log(2.0) * lam
        assert similarity(d_half, lam) == pytest.approx(0.5, abs=1e-12)

    def test_invalid_inputs_rejected(self):
        with pytest.raises(ValueError):
            similarity(-0.1, 1.0)
        with pytest.raises(ValueError):
            similarity(0.1, 0.0)


class TestCandidateEstimates:
    def test_short_train_contributes_nothing(self):
        test = HiCurve(values=np.linspace(1, 0, 10))
        trains = [("short", HiCurve(values=np.linspace(1, 0, 8)))]
        config = MatchConfig(lam=0.1, tau=5, alpha=0.0, r_max=50)
        assert candidate_estimates(test, trains, config) == []

    def test_alpha_one_keeps_only_best(self):
        rng = np.random.default_rng(0)
        test = HiCurve(values=rng.uniform(0, 1, size=6))
        trains = [
            ("a", HiCurve(values=rng.uniform(0, 1, size=15))),
            ("b", HiCurve(values=rng.uniform(0, 1, size=12))),
        ]
        config = MatchConfig(lam=0.5, tau=4, alpha=1.0, r_max=50)
        survivors = candidate_estimates(test, trains, config)
        assert len(survivors) >= 1
        best = max(s.similarity for s in survivors)
        for c in survivors:
            assert c.similarity == best

    def test_candidate_fields(self):
        test = HiCurve(values=np.array([0.9, 0.8]))
        trains = [("u7", HiCurve(values=np.array([1.0, 0.9, 0.8, 0.2, 0.1])))]
        config = MatchConfig(lam=0.1, tau=2, alpha=0.0, r_max=50)
        cands = candidate_estimates(test, trains, config)
        assert [(c.train_id, c.lag) for c in cands] == [("u7", 1), ("u7", 2)]
        # estimate is remaining train cycles past the aligned window
        assert cands[0].estimate == 5 - 2 - 1
        assert cands[1].estimate == 5 - 2 - 2
        assert cands[0].similarity == 1.0  # exact overlay at lag 1

    def test_underflowed_similarities_are_pruned(self):
        test = HiCurve(values=np.ones(5))
        trains = [("far", HiCurve(values=np.zeros(10)))]
        config = MatchConfig(lam=1e-300, tau=3, alpha=0.0, r_max=50)
        assert candidate_estimates(test, trains, config) == []

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_matches_brute_force_oracle(self, seed):
        rng = np.random.default_rng(seed)
        test, trains, config = random_curve_case(rng)
        got = candidate_estimates(test, trains, config)
        expected = brute_force_candidates(test, trains, config)
        assert [(c.train_id, c.lag, c.similarity, c.estimate) for c in got] == expected

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_survivor_similarity_in_unit_interval(self, seed):
        rng = np.random.default_rng(seed)
        test, trains, config = random_curve_case(rng)
        for c in candidate_estimates(test, trains, config):
            assert 0.0 < c.similarity <= 1.0
            assert c.estimate >= 0.0
            assert 1 <= c.lag <= config.tau


class TestEstimateRul:
    def test_equal_weights_average(self):
        cands = [
            RulCandidate(train_id="a", lag=1, similarity=1.0, estimate=10.0),
            RulCandidate(train_id="b", lag=1, similarity=1.0, estimate=20.0),
        ]
        config = MatchConfig(lam=0.1, tau=5, alpha=0.0, r_max=125)
        result = estimate_rul(cands, config, test_len=10, train_lengths=[40, 40])
        assert result.value == pytest.approx(15.0, abs=1e-12)
        assert result.spread == 10.0
        assert result.std_dev == pytest.approx(5.0, abs=1e-12)
        assert not result.capped and not result.fallback

    def test_single_candidate(self):
        cands = [RulCandidate(train_id="a", lag=2, similarity=0.4, estimate=7.0)]
        config = MatchConfig(lam=0.1, tau=5, alpha=0.0, r_max=125)
        result = estimate_rul(cands, config, test_len=5, train_lengths=[14])
        assert result.value == 7.0
        assert result.std_dev == 0.0
        assert result.spread == 0.0

    def test_cap_applies(self):
        cands = [RulCandidate(train_id="a", lag=1, similarity=1.0, estimate=200.0)]
        config = MatchConfig(lam=0.1, tau=5, alpha=0.0, r_max=125)
        result = estimate_rul(cands, config, test_len=5, train_lengths=[300])
        assert result.value == 125.0
        assert result.capped

    def test_empty_candidates_fallback(self):
        config = MatchConfig(lam=0.1, tau=5, alpha=0.0, r_max=125)
        result = estimate_rul([], config, test_len=50, train_lengths=[80, 120, 60])
        assert result.fallback
        assert result.value == 70.0  # best headroom: 120 - 50
        assert math.isnan(result.std_dev) and math.isnan(result.spread)

    def test_fallback_respects_cap(self):
        config = MatchConfig(lam=0.1, tau=5, alpha=0.0, r_max=30)
        result = estimate_rul([], config, test_len=10, train_lengths=[200])
        assert result.value == 30.0
        assert result.fallback and result.capped

    def test_fallback_with_no_longer_train(self):
        config = MatchConfig(lam=0.1, tau=5, alpha=0.0, r_max=125)
        result = estimate_rul([], config, test_len=90, train_lengths=[50, 60])
        assert result.value == 0.0
        assert result.fallback

    def test_weighted_mean_is_convex_combination(self):
        rng = np.random.default_rng(3)
        config = MatchConfig(lam=0.1, tau=5, alpha=0.0, r_max=1e9)
        for _ in range(20):
            cands = [
                RulCandidate(
                    train_id=f"u{k}",
                    lag=1,
                    similarity=float(rng.uniform(1e-6, 1)),
                    estimate=float(rng.integers(0, 100)),
                )
                for k in range(int(rng.integers(1, 8)))
            ]
            result = estimate_rul(cands, config, test_len=10, train_lengths=[200])
            ests = [c.estimate for c in cands]
            assert min(ests) - 1e-9 <= result.value <= max(ests) + 1e-9

    def test_similarity_scale_invariance(self):
        config = MatchConfig(lam=0.1, tau=5, alpha=0.0, r_max=1e9)
        base = [
            RulCandidate(train_id="a", lag=1, similarity=0.2, estimate=12.0),
            RulCandidate(train_id="b", lag=2, similarity=0.05, estimate=30.0),
            RulCandidate(train_id="c", lag=1, similarity=0.7, estimate=21.0),
        ]
        scaled = [
            RulCandidate(
                train_id=c.train_id,
                lag=c.lag,
                similarity=c.similarity * 3.5,
                estimate=c.estimate,
            )
            for c in base
        ]
        a = estimate_rul(base, config, test_len=10, train_lengths=[100])
        b = estimate_rul(scaled, config, test_len=10, train_lengths=[100])
        assert a.value == pytest.approx(b.value, abs=1e-12)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_end_to_end_matches_oracle_mean(self, seed):
        rng = np.random.default_rng(seed)
        test, trains, config = random_curve_case(rng)
        cands = candidate_estimates(test, trains, config)
        result = estimate_rul(
            cands, config, test.length, [c.length for _, c in trains]
        )
        survivors = brute_force_candidates(test, trains, config)
        if survivors:
            expected = min(config.r_max, brute_force_weighted_mean(survivors))
            assert result.value == pytest.approx(expected, abs=1e-12)
        else:
            assert result.fallback

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_total_length_bound_post_cap(self, seed):
        # estimate plus observed length never exceeds the longest train life
        rng = np.random.default_rng(seed)
        test, trains, config = random_curve_case(rng)
        lengths = [c.length for _, c in trains]
        cands = candidate_estimates(test, trains, config)
        result = estimate_rul(cands, config, test.length, lengths)
        if cands or max(lengths) > test.length:
            assert result.value + test.length <= max(lengths) + 1e-9


class TestMatchConfig:
    def test_validation(self):
        MatchConfig().validate()
        with pytest.raises(ValueError):
            MatchConfig(lam=0.0).validate()
        with pytest.raises(ValueError):
            MatchConfig(tau=0).validate()
        with pytest.raises(ValueError):
            MatchConfig(alpha=1.0001).validate()
        with pytest.raises(ValueError):
            MatchConfig(r_max=0.5).validate()
