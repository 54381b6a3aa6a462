"""Random samples that preserve stripe-range fractions, and the rank
thresholds that turn a rank query into a stripe query.

A sample of size m drawn uniformly without replacement preserves, for every
stripe, the covered fraction of the dataset within an additive epsilon (with
probability at least 1 - phi) once m reaches the VC-based sizing bound; the
range family of stripes in R^d has VC dimension d + 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    Dataset,
    Point,
    ScoringVector,
    StripeRange,
    _kth_position_with_ids,
    score_rows,
)
from .errors import UsageError

__all__ = [
    "EpsSample",
    "ThresholdPair",
    "sample_size",
    "build_eps_sample",
    "verify_eps_sample",
    "thresholds",
    "stripe_from_sample",
    "DEFAULT_SIZE_CONSTANT",
]

# Multiplier in the sample-size bound, which is only determined up to a
# constant; 8 is deliberately conservative and exposed as a knob so
# experiments can trade guarantee strength for sample size.
DEFAULT_SIZE_CONSTANT = 8.0

# Values this close to an integer (relative) are treated as that integer
# before floor/ceil.  Rounding noise in m*(i/n +- eps) is ~1e-14 relative;
# snapping is always containment-safe because range counts are integers.
_INT_SNAP = 1e-9


@dataclass(frozen=True, eq=False)
class EpsSample:
    """A uniform without-replacement sample carrying its original ids."""

    ids: np.ndarray
    coords: np.ndarray
    epsilon: float
    phi: float
    source_n: int
    seed: int

    @property
    def m(self) -> int:
        return int(self.ids.shape[0])

    @property
    def is_full(self) -> bool:
        return self.m >= self.source_n

    @property
    def effective_epsilon(self) -> float:
        """Epsilon used for stripe-width accounting: a full sample is exact."""
        return 0.0 if self.is_full else self.epsilon

    @property
    def points(self) -> list[Point]:
        return [Point(int(i), c) for i, c in zip(self.ids, self.coords)]

    def __repr__(self) -> str:
        return (
            f"EpsSample(m={self.m}, epsilon={self.epsilon}, phi={self.phi}, "
            f"source_n={self.source_n}, seed={self.seed})"
        )


@dataclass(frozen=True)
class ThresholdPair:
    i_l: int
    i_u: int


def sample_size(
    n: int, d: int, epsilon: float, phi: float, c: float = DEFAULT_SIZE_CONSTANT
) -> int:
    """Sample size for additive error epsilon at failure probability phi.

    m = min(n, ceil((c/eps^2) * ((d+1) ln((d+1)/eps) + ln(1/phi)))), using
    VC dimension d + 1 for stripe ranges.
    """
    if not 0.0 < epsilon < 1.0:
        raise UsageError("epsilon must lie in (0, 1)")
    if not 0.0 < phi < 1.0:
        raise UsageError("phi must lie in (0, 1)")
    delta = d + 1
    raw = (c / epsilon**2) * (delta * math.log(delta / epsilon) + math.log(1.0 / phi))
    return min(n, int(math.ceil(raw)))


def build_eps_sample(
    D: Dataset,
    epsilon: float,
    phi: float,
    seed: int,
    c: float = DEFAULT_SIZE_CONSTANT,
) -> EpsSample:
    """Draw the sized sample uniformly without replacement, deterministically.

    A seeded Fisher-Yates prefix keeps the draw reproducible and free of
    duplicate ids.  When the sizing formula reaches n the whole dataset is
    returned (an exact, zero-error sample).
    """
    m = sample_size(D.n, D.d, epsilon, phi, c)
    if m >= D.n:
        ids = np.arange(D.n, dtype=np.int64)
    else:
        rng = np.random.default_rng(seed)
        pool = np.arange(D.n, dtype=np.int64)
        for j in range(m):
            swap = j + int(rng.integers(D.n - j))
            pool[j], pool[swap] = pool[swap], pool[j]
        ids = np.sort(pool[:m])
    coords = np.ascontiguousarray(D.coords[ids])
    return EpsSample(
        ids=ids,
        coords=coords,
        epsilon=float(epsilon),
        phi=float(phi),
        source_n=D.n,
        seed=int(seed),
    )


def verify_eps_sample(
    D: Dataset, sample: EpsSample, stripes: Sequence[StripeRange]
) -> float:
    """Worst additive discrepancy of the sample over the given stripes.

    Exhaustive counting on both sides; this is the test oracle the sampling
    guarantee is checked against.
    """
    if len(stripes) == 0:
        raise UsageError("at least one stripe is required")
    worst = 0.0
    n = float(D.n)
    m = float(sample.m)
    for s in stripes:
        scores_full = score_rows(D.coords, s.f.weights)
        scores_samp = score_rows(sample.coords, s.f.weights)
        in_full = np.count_nonzero((scores_full >= s.lower) & (scores_full <= s.upper))
        in_samp = np.count_nonzero((scores_samp >= s.lower) & (scores_samp <= s.upper))
        worst = max(worst, abs(in_full / n - in_samp / m))
    return worst


def _snap_floor(x: float) -> int:
    r = round(x)
    if abs(x - r) <= _INT_SNAP * max(1.0, abs(x)):
        return int(r)
    return int(math.floor(x))


def _snap_ceil(x: float) -> int:
    r = round(x)
    if abs(x - r) <= _INT_SNAP * max(1.0, abs(x)):
        return int(r)
    return int(math.ceil(x))


def thresholds(m: int, n: int, i: int, epsilon: float) -> ThresholdPair:
    """Sample ranks bracketing dataset rank i at additive error epsilon.

    i_l = floor(m(i/n - eps)) and i_u = ceil(m(i/n + eps)), clamped into
    [1, m]; clamping only widens the stripe toward the extremes, which is
    always safe for containment.
    """
    if m < 1:
        raise UsageError("sample size m must be at least 1")
    if not 1 <= i <= n:
        raise UsageError(f"rank i={i} out of range [1, {n}]")
    frac = i / n
    i_l = _snap_floor(m * (frac - epsilon))
    i_u = _snap_ceil(m * (frac + epsilon))
    i_l = min(max(i_l, 1), m)
    i_u = min(max(i_u, 1), m)
    return ThresholdPair(i_l=i_l, i_u=i_u)


def stripe_from_sample(
    sample: EpsSample,
    f: ScoringVector,
    i: int,
    n: int,
    epsilon: float | None = None,
) -> StripeRange:
    """Stripe whose score bounds come from the bracketing sample ranks.

    Selects the points at ranks i_l and i_u inside the sample and uses their
    scores as the stripe bounds.  The rank-i_l point scores at least as high
    as the rank-i_u point, so it supplies the upper bound.  Whenever the
    sample preserves the fraction of the half-space at the target point's
    score, the stripe contains that point.

    epsilon overrides the sample's effective epsilon (used by the retry
    logic in the exact pipeline).
    """
    if not 1 <= i <= n:
        raise UsageError(f"rank i={i} out of range [1, {n}]")
    eps = sample.effective_epsilon if epsilon is None else epsilon
    pair = thresholds(sample.m, n, i, eps)
    scores = score_rows(sample.coords, f.weights)
    pos_l = _kth_position_with_ids(scores, sample.ids, pair.i_l)
    pos_u = _kth_position_with_ids(scores, sample.ids, pair.i_u)
    hi = float(scores[pos_l])
    lo = float(scores[pos_u])
    # equal-score ties can invert the raw pair; the stripe is [min, max]
    if lo > hi:
        lo, hi = hi, lo
    return StripeRange(f=f, lower=lo, upper=hi)
