"""End-to-end rank-query pipelines on top of samples and range backends.

The pipeline turns a rank query (f, i) into a stripe via the sample's rank
thresholds, retrieves the stripe's dataset intersection (the conformal set),
and for the exact variant subtracts the count of points above the stripe to
index into the sorted candidates.  A widen-and-retry loop plus the
exhaustive baseline make the exact variant unconditional even when the
sample misbehaves for a particular query.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .core import (
    Dataset,
    Point,
    RankedAnswer,
    ScoringVector,
    StripeRange,
    score_rows,
    select_rank_exhaustive,
)
from .epsample import EpsSample, stripe_from_sample, thresholds, verify_eps_sample
from .errors import UsageError

__all__ = [
    "ConformalSet",
    "DarPipelineConfig",
    "build_pipeline",
    "conformal_query",
    "exact_query",
    "choose_epsilon",
    "EpsilonChoice",
    "halfspace_count_via_dar",
]

_EXACT_RETRIES = 3
_EPSILON_GRID = [2.0**-j for j in range(1, 21)]


@dataclass(frozen=True, eq=False)
class ConformalSet:
    """A stripe's dataset intersection, guaranteed (conditionally) to hold
    the rank-i point."""

    points: list[Point]
    kappa_target: int
    stripe: StripeRange
    guaranteed: bool

    @property
    def size(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class DarPipelineConfig:
    epsilon: float = 1.0 / 16.0
    phi: float = 0.1
    backend: str = "exhaustive"
    sample_seed: int = 0
    index_seed: int = 0
    decay: int = 4

    def __post_init__(self) -> None:
        if not 0.0 < self.epsilon < 1.0:
            raise UsageError("epsilon must lie in (0, 1)")
        if not 0.0 < self.phi < 1.0:
            raise UsageError("phi must lie in (0, 1)")
        if self.backend not in ("exhaustive", "kdtree", "hier"):
            raise UsageError(f"unknown backend '{self.backend}'")
        if self.decay < 2:
            raise UsageError("decay rate must be at least 2")


def build_pipeline(D: Dataset, config: DarPipelineConfig):
    """Assemble the sample and range backend a pipeline config describes."""
    from .epsample import build_eps_sample
    from .hier import build_hier
    from .srr import ExhaustiveBackend, kdtree_build

    sample = build_eps_sample(D, config.epsilon, config.phi, config.sample_seed)
    if config.backend == "kdtree":
        backend = kdtree_build(D)
    elif config.backend == "hier":
        backend = build_hier(D, r=config.decay, seed=config.index_seed)
    else:
        backend = ExhaustiveBackend(D)
    return sample, backend


def _size_bound(sample: EpsSample, n: int, i: int) -> int:
    """Conformal-size guarantee: n * ((i_u - i_l)/m + epsilon).

    Thresholds are the ones the stripe was built with (effective epsilon);
    the additive term uses the sample's nominal epsilon, the value its
    guarantee was sized for, so the bound stays meaningful for a full
    sample whose stripe degenerates to a single score.
    """
    pair = thresholds(sample.m, n, i, sample.effective_epsilon)
    return int(math.ceil(n * ((pair.i_u - pair.i_l) / sample.m + sample.epsilon)))


def conformal_query(
    D: Dataset,
    sample: EpsSample,
    backend,
    f: ScoringVector,
    i: int,
    verify: bool = False,
) -> ConformalSet:
    """Small set guaranteed to contain the rank-i point (when the sample's
    guarantee holds for this query's ranges).

    With ``verify`` the guarantee condition is checked by brute force
    (O(n)): the sample must preserve, within its nominal epsilon, both this
    stripe's fraction and the fraction of the half-space at the true rank-i
    point's score.  The flag exists for validation runs, not production
    queries.
    """
    if not 1 <= i <= D.n:
        raise UsageError(f"rank i={i} out of range [1, {D.n}]")
    stripe = stripe_from_sample(sample, f, i, D.n)
    points = backend.query_stripe(stripe)
    guaranteed = False
    if verify:
        eps = sample.epsilon
        stripe_disc = verify_eps_sample(D, sample, [stripe])
        target = select_rank_exhaustive(D, f, i).point
        s_i = float(score_rows(target.coords[None, :], f.weights)[0])
        samp_scores = score_rows(sample.coords, f.weights)
        full_scores = score_rows(D.coords, f.weights)
        hs_disc = abs(
            np.count_nonzero(full_scores >= s_i) / D.n
            - np.count_nonzero(samp_scores >= s_i) / sample.m
        )
        guaranteed = stripe_disc <= eps and hs_disc <= eps
    return ConformalSet(
        points=points,
        kappa_target=_size_bound(sample, D.n, i),
        stripe=stripe,
        guaranteed=guaranteed,
    )


def _try_exact(
    D: Dataset,
    sample: EpsSample,
    backend,
    f: ScoringVector,
    i: int,
    epsilon: float | None,
) -> Point | None:
    stripe = stripe_from_sample(sample, f, i, D.n, epsilon=epsilon)
    candidates = backend.query_stripe(stripe)
    above = backend.count_halfspace(f, stripe.upper, strict=True)
    j = i - above
    if not 1 <= j <= len(candidates):
        return None
    coords = np.stack([p.coords for p in candidates])
    sc = score_rows(coords, f.weights)
    order = sorted(range(len(candidates)), key=lambda t: (-sc[t], candidates[t].id))
    return candidates[order[j - 1]]


def exact_query(
    D: Dataset, sample: EpsSample, backend, f: ScoringVector, i: int
) -> RankedAnswer:
    """Exact rank-i point; unconditional.

    Counting strictly above the stripe's upper bound and keeping all
    equal-score points inside the candidate set makes i - |above| land on
    the right sorted position for every tie pattern.  If the sample fails
    for this query (detected by the index falling outside the candidate
    list), the stripe is rebuilt at doubled epsilon up to three times, then
    the exhaustive baseline answers.
    """
    if not 1 <= i <= D.n:
        raise UsageError(f"rank i={i} out of range [1, {D.n}]")
    point = _try_exact(D, sample, backend, f, i, epsilon=None)
    if point is None and not sample.is_full:
        eps = sample.epsilon
        for _ in range(_EXACT_RETRIES):
            eps *= 2.0
            point = _try_exact(D, sample, backend, f, i, epsilon=eps)
            if point is not None:
                break
    if point is None:
        return select_rank_exhaustive(D, f, i)
    return RankedAnswer(point=point, rank=i)


class EpsilonChoice(NamedTuple):
    epsilon: float
    best_effort: bool


def choose_epsilon(
    n: int, kappa: int, m_formula: Callable[[float], int]
) -> EpsilonChoice:
    """Largest power-of-two epsilon whose conformal-size guarantee fits kappa.

    The guarantee per query is n * (3 eps + 2 / m(eps)), capped at n (a
    conformal set can never exceed the dataset).  If no grid value fits,
    the smallest one is returned flagged best-effort.
    """
    if not 1 <= kappa <= n:
        raise UsageError(f"kappa={kappa} out of range [1, {n}]")
    for eps in _EPSILON_GRID:  # descending: first hit is the largest
        m = m_formula(eps)
        bound = min(float(n), n * (3.0 * eps + 2.0 / m))
        if bound <= kappa:
            return EpsilonChoice(epsilon=eps, best_effort=False)
    return EpsilonChoice(epsilon=_EPSILON_GRID[-1], best_effort=True)


def halfspace_count_via_dar(
    D: Dataset,
    dar_oracle: Callable[[ScoringVector, int], Point],
    f: ScoringVector,
    threshold: float,
) -> int:
    """|{p : f.p >= threshold}| using only rank queries.

    Binary search for the deepest rank whose point still clears the
    threshold: at most ceil(log2 n) + 1 oracle calls.
    """
    lo, hi = 1, D.n
    while lo <= hi:
        mid = (lo + hi) // 2
        p = dar_oracle(f, mid)
        s = float(score_rows(p.coords[None, :], f.weights)[0])
        if s >= threshold:
            lo = mid + 1
        else:
            hi = mid - 1
    return hi
