"""Synthetic dataset and query-direction generation for workloads."""

from __future__ import annotations

import numpy as np

from ..core import Dataset, ScoringVector
from ..errors import UsageError

__all__ = ["gen_zipfian", "gen_uniform", "gen_directions"]


def gen_zipfian(n: int, d: int, s: float, V: int, seed: int) -> Dataset:
    """Skewed synthetic data: per coordinate, draw a value rank k in [1, V]
    with probability proportional to k^-s and emit k^-s min-max scaled to
    [0, 1].

    The rank-power recipe is fixed here so runs are comparable; any fixed
    skewed mapping serves the purpose.  Deterministic per seed.
    """
    if n < 1 or d < 1 or V < 1:
        raise UsageError("n, d, V must all be at least 1")
    if not s > 0.0:
        raise UsageError("zipf exponent s must be positive")
    rng = np.random.default_rng(seed)
    k = np.arange(1, V + 1, dtype=np.float64)
    weights = k**-s
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    draws = np.searchsorted(cdf, rng.random((n, d)), side="left") + 1
    values = draws.astype(np.float64) ** -s
    if V == 1:
        return Dataset(np.zeros((n, d)))
    lo = float(V) ** -s
    return Dataset((values - lo) / (1.0 - lo))


def gen_uniform(n: int, d: int, seed: int) -> Dataset:
    if n < 1 or d < 1:
        raise UsageError("n and d must be at least 1")
    rng = np.random.default_rng(seed)
    return Dataset(rng.random((n, d)))


def gen_directions(q: int, d: int, seed: int) -> list[ScoringVector]:
    """q i.i.d. directions uniform on the unit sphere (normalized gaussians)."""
    if q < 1 or d < 1:
        raise UsageError("q and d must be at least 1")
    rng = np.random.default_rng(seed)
    out: list[ScoringVector] = []
    while len(out) < q:
        g = rng.standard_normal(d)
        nrm = float(np.linalg.norm(g))
        if nrm == 0.0:  # astronomically unlikely; redraw keeps the contract
            continue
        out.append(ScoringVector(g / nrm))
    return out
