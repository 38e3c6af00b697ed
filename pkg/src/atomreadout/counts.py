"""Photon-count distributions.

Two interchangeable kinds feed the discrimination stage: histograms of
simulated (or measured) counts, and analytic Poisson references built from
expected count numbers.  Both expose the cumulative probability of seeing at
most ``n`` counts, which is all threshold discrimination needs.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .physics import ParameterError

__all__ = [
    "NoDataError",
    "CountHistogram",
    "PoissonCounts",
    "CountDistribution",
]

BRIGHT = "bright"
DARK = "dark"


class NoDataError(ValueError):
    """An operation needed counts but the distribution holds none."""


@dataclass(frozen=True)
class CountHistogram:
    """Sparse histogram of detected photon counts from kept trials.

    ``counts`` maps a photon number to how many kept trials produced it;
    zero-frequency entries are dropped.  ``kept_trials`` is the number of
    trials that survived post-selection, which must equal the sum of the
    stored frequencies.  A histogram with ``kept_trials == 0`` is legal (it
    is what an experiment where every trial was lost returns) but flagged
    empty, and anything that needs actual data must reject it.
    """

    counts: Mapping[int, int]
    kept_trials: int
    prepared_state: str

    def __post_init__(self) -> None:
        cleaned: dict[int, int] = {}
        for value, freq in self.counts.items():
            if not isinstance(value, int) or isinstance(value, bool) or value < 0:
                raise ParameterError(f"photon number must be an int >= 0, got {value!r}")
            if not isinstance(freq, int) or isinstance(freq, bool) or freq < 0:
                raise ParameterError(f"frequency for n={value} must be an int >= 0, got {freq!r}")
            if freq:
                cleaned[value] = freq
        object.__setattr__(self, "counts", cleaned)
        if self.prepared_state not in (BRIGHT, DARK):
            raise ParameterError(
                f"prepared_state must be {BRIGHT!r} or {DARK!r}, got {self.prepared_state!r}")
        if self.kept_trials != sum(cleaned.values()):
            raise ParameterError(
                f"kept_trials={self.kept_trials} does not match "
                f"histogram total {sum(cleaned.values())}")

    @classmethod
    def from_samples(cls, samples: Iterable[int], prepared_state: str) -> CountHistogram:
        counts: dict[int, int] = {}
        total = 0
        for value in samples:
            value = int(value)
            counts[value] = counts.get(value, 0) + 1
            total += 1
        return cls(counts=counts, kept_trials=total, prepared_state=prepared_state)

    @property
    def is_empty(self) -> bool:
        return self.kept_trials == 0

    @property
    def mean(self) -> float:
        """Sample mean photon number, the Poisson maximum-likelihood rate."""
        if self.is_empty:
            raise NoDataError(
                f"no kept trials in {self.prepared_state} histogram; cannot take a mean")
        return sum(n * f for n, f in self.counts.items()) / self.kept_trials

    def prob_at_most(self, n: int) -> float:
        """Fraction of kept trials with at most ``n`` detected photons."""
        if self.is_empty:
            raise NoDataError(
                f"no kept trials in {self.prepared_state} histogram; "
                "cannot evaluate probabilities")
        at_most = sum(f for value, f in self.counts.items() if value <= n)
        return at_most / self.kept_trials

    def prob_above(self, n: int) -> float:
        """Fraction of kept trials with more than ``n`` detected photons.

        Computed as its own integer ratio rather than ``1 - prob_at_most``
        so it agrees exactly with a brute-force count over the trial list.
        """
        if self.is_empty:
            raise NoDataError(
                f"no kept trials in {self.prepared_state} histogram; "
                "cannot evaluate probabilities")
        above = sum(f for value, f in self.counts.items() if value > n)
        return above / self.kept_trials

    def _running_totals(self, thresholds: np.ndarray) -> np.ndarray:
        # trials with count <= threshold, clipped into the observed range
        top = max(self.counts)
        dense = np.zeros(top + 1, dtype=np.int64)
        for value, freq in self.counts.items():
            dense[value] = freq
        running = np.cumsum(dense)
        below = running[np.clip(thresholds, 0, top)]
        return np.where(np.asarray(thresholds) < 0, 0, below)

    def cumulative(self, thresholds: np.ndarray) -> np.ndarray:
        """Vectorised :meth:`prob_at_most` over an array of thresholds.

        Bit-identical to the scalar version: integer frequency sums divided
        by the integer trial count, so comparisons against a brute-force
        trial loop hold exactly.
        """
        if self.is_empty:
            raise NoDataError(
                f"no kept trials in {self.prepared_state} histogram; "
                "cannot evaluate probabilities")
        return self._running_totals(thresholds) / self.kept_trials

    def cumulative_above(self, thresholds: np.ndarray) -> np.ndarray:
        """Vectorised :meth:`prob_above`, with the same exactness guarantee."""
        if self.is_empty:
            raise NoDataError(
                f"no kept trials in {self.prepared_state} histogram; "
                "cannot evaluate probabilities")
        above = self.kept_trials - self._running_totals(thresholds)
        return above / self.kept_trials

    def scan_limit(self) -> int:
        """One past the largest observed count: upper bound for threshold scans."""
        if self.is_empty:
            raise NoDataError(
                f"no kept trials in {self.prepared_state} histogram; nothing to scan")
        return max(self.counts) + 1

    def merge(self, other: CountHistogram) -> CountHistogram:
        """Combine with another histogram of the same prepared state."""
        if other.prepared_state != self.prepared_state:
            raise ParameterError(
                f"cannot merge {other.prepared_state!r} histogram into "
                f"{self.prepared_state!r}")
        merged = dict(self.counts)
        for value, freq in other.counts.items():
            merged[value] = merged.get(value, 0) + freq
        return CountHistogram(
            counts=merged,
            kept_trials=self.kept_trials + other.kept_trials,
            prepared_state=self.prepared_state,
        )


@dataclass(frozen=True)
class PoissonCounts:
    """Analytic Poisson count distribution with the given mean."""

    mean: float

    # isf() of this tail mass bounds the scan range; beyond it the cumulative
    # probability is 1 to double precision and scans cannot change.
    _TAIL = 1e-15

    def __post_init__(self) -> None:
        if self.mean < 0 or not math.isfinite(self.mean):
            raise ParameterError(f"Poisson mean must be >= 0, got {self.mean!r}")

    def prob_at_most(self, n: int) -> float:
        if n < 0:
            return 0.0
        return float(stats.poisson.cdf(n, self.mean))

    def prob_above(self, n: int) -> float:
        # direct survival function: better tail precision than 1 - cdf
        if n < 0:
            return 1.0
        return float(stats.poisson.sf(n, self.mean))

    def cumulative(self, thresholds: np.ndarray) -> np.ndarray:
        return np.asarray(stats.poisson.cdf(thresholds, self.mean))

    def cumulative_above(self, thresholds: np.ndarray) -> np.ndarray:
        return np.asarray(stats.poisson.sf(thresholds, self.mean))

    def scan_limit(self) -> int:
        if self.mean == 0.0:
            return 1
        return int(stats.poisson.isf(self._TAIL, self.mean)) + 1


# Anything with prob_at_most/prob_above, their vectorised cumulative forms,
# and scan_limit(); both kinds above qualify.
CountDistribution = CountHistogram | PoissonCounts
