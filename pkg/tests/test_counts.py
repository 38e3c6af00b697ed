"""Count-distribution containers: histograms and analytic Poisson stand-ins."""

import random

import numpy as np
import pytest

from atomreadout.counts import (
    BRIGHT,
    DARK,
    CountHistogram,
    NoDataError,
    PoissonCounts,
)


def hist(counts, state=BRIGHT):
    return CountHistogram(counts=counts, kept_trials=sum(counts.values()),
                          prepared_state=state)


def test_rejects_mismatched_trial_total():
    with pytest.raises(ValueError):
        CountHistogram(counts={0: 3}, kept_trials=4, prepared_state=DARK)


def test_rejects_bad_keys_and_frequencies():
    with pytest.raises(ValueError):
        hist({-1: 5})
    with pytest.raises(ValueError):
        hist({0.5: 5})
    with pytest.raises(ValueError):
        CountHistogram(counts={0: -2}, kept_trials=-2, prepared_state=DARK)
    with pytest.raises(ValueError):
        CountHistogram(counts={}, kept_trials=0, prepared_state="shiny")


def test_zero_frequency_bins_dropped():
    h = CountHistogram(counts={0: 4, 3: 0, 7: 1}, kept_trials=5,
                       prepared_state=DARK)
    assert 3 not in h.counts
    assert h.kept_trials == 5


def test_empty_histogram_flag_and_mean_error():
    empty = CountHistogram(counts={}, kept_trials=0, prepared_state=DARK)
    assert empty.is_empty
    with pytest.raises(NoDataError):
        empty.mean


def test_mean_single_bin():
    assert hist({0: 1}).mean == 0.0
    assert hist({4: 3}).mean == 4.0


def test_from_samples_round_trip():
    rng = np.random.default_rng(3)
    samples = rng.poisson(2.5, size=1000)
    h = CountHistogram.from_samples(samples, prepared_state=BRIGHT)
    assert h.kept_trials == 1000
    assert h.mean == pytest.approx(float(np.mean(samples)))
    for value, freq in h.counts.items():
        assert freq == int(np.sum(samples == value))


def test_prob_at_most_is_exact_ratio():
    h = hist({0: 1, 1: 2, 5: 1})
    assert h.prob_at_most(0) == 0.25
    assert h.prob_at_most(1) == 0.75
    assert h.prob_at_most(4) == 0.75
    assert h.prob_at_most(5) == 1.0
    assert h.prob_at_most(-1) == 0.0


def test_cumulative_matches_scalar_bitwise():
    rng = random.Random(9)
    for _ in range(20):
        counts = {rng.randrange(0, 30): rng.randrange(1, 50)
                  for _ in range(rng.randrange(1, 12))}
        h = hist(counts)
        thresholds = np.arange(-2, max(counts) + 3)
        vector = h.cumulative(thresholds)
        scalar = np.array([h.prob_at_most(int(t)) for t in thresholds])
        assert np.array_equal(vector, scalar)
        vector_above = h.cumulative_above(thresholds)
        scalar_above = np.array([h.prob_above(int(t)) for t in thresholds])
        assert np.array_equal(vector_above, scalar_above)


def test_prob_above_is_exact_complement_ratio():
    h = hist({0: 1, 1: 2, 5: 1})
    assert h.prob_above(0) == 0.75
    assert h.prob_above(1) == 0.25
    assert h.prob_above(5) == 0.0
    assert h.prob_above(-1) == 1.0
    # exact integer ratio, not 1 - prob_at_most: 64/91 has no clean float
    skew = hist({11: 64, 0: 27})
    assert skew.prob_above(3) == 64 / 91


def test_scan_limit_one_past_maximum():
    assert hist({0: 2, 9: 1}).scan_limit() == 10
    with pytest.raises(NoDataError):
        CountHistogram(counts={}, kept_trials=0, prepared_state=DARK).scan_limit()


def test_merge_adds_frequencies():
    a = hist({0: 2, 1: 1}, DARK)
    b = hist({1: 4, 3: 2}, DARK)
    merged = a.merge(b)
    assert merged.counts == {0: 2, 1: 5, 3: 2}
    assert merged.kept_trials == 9
    with pytest.raises(ValueError):
        a.merge(hist({0: 1}, BRIGHT))


def test_poisson_counts_matches_direct_pmf_sums():
    # iterative pmf accumulation, independent of scipy
    def below(mu, nc):
        import math
        p = math.exp(-mu)
        total = p
        for k in range(nc):
            p = p * mu / (k + 1)
            total += p
        return total

    for mu in (0.2, 1.0, 9.2):
        dist = PoissonCounts(mean=mu)
        for nc in range(0, 25):
            assert dist.prob_at_most(nc) == pytest.approx(below(mu, nc), rel=1e-12)
    assert PoissonCounts(mean=0.2).prob_at_most(-1) == 0.0


def test_poisson_counts_cumulative_vectorized():
    dist = PoissonCounts(mean=3.3)
    thresholds = np.arange(-1, 20)
    vector = dist.cumulative(thresholds)
    scalar = np.array([dist.prob_at_most(int(t)) for t in thresholds])
    assert np.allclose(vector, scalar, rtol=0, atol=0)


def test_poisson_scan_limit_covers_the_tail():
    dist = PoissonCounts(mean=9.2)
    limit = dist.scan_limit()
    assert 1.0 - dist.prob_at_most(limit) < 1e-12
    assert PoissonCounts(mean=0.0).scan_limit() == 1


def test_poisson_counts_rejects_negative_mean():
    with pytest.raises(ValueError):
        PoissonCounts(mean=-0.5)
