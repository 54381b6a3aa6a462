"""Foundational types, linear scoring, and exact rank selection.

Scores are plain dot products ``f . p``.  Ranking is always descending by
score with ties broken by ascending point id; every module in the package
uses this one total order, so "the i-th point" is well defined even on
degenerate data.

All types here are immutable after construction and safe for concurrent
reads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import UsageError

__all__ = [
    "Point",
    "Dataset",
    "ScoringVector",
    "StripeRange",
    "RankedAnswer",
    "score",
    "normalize",
    "score_rows",
    "select_rank_exhaustive",
    "rank_of",
    "select_kth_by_score",
]

UNIT_NORM_TOL = 1e-9


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Point:
    """A point of the universe: stable integer id plus d real coordinates."""

    id: int
    coords: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "coords", _readonly(np.atleast_1d(self.coords)))
        if self.coords.ndim != 1:
            raise UsageError("point coordinates must be a flat vector")
        if not np.all(np.isfinite(self.coords)):
            raise UsageError(f"point {self.id} has non-finite coordinates")

    @property
    def d(self) -> int:
        return self.coords.shape[0]

    def __repr__(self) -> str:  # keep small points readable in test output
        return f"Point(id={self.id}, coords={self.coords.tolist()})"


class Dataset:
    """An ordered, immutable collection of n points in R^d.

    Point ids are contiguous 0..n-1 and index directly into the coordinate
    matrix, which is the representation every query structure works on.
    """

    __slots__ = ("_coords",)

    def __init__(self, coords: np.ndarray | Sequence[Sequence[float]]):
        coords = np.asarray(coords, dtype=np.float64)
        if coords.ndim != 2:
            raise UsageError("dataset coordinates must be a 2-D array (n points x d)")
        if coords.shape[0] < 1:
            raise UsageError("dataset must contain at least one point")
        if not np.all(np.isfinite(coords)):
            raise UsageError("dataset contains non-finite coordinates")
        self._coords = _readonly(coords)

    @classmethod
    def from_points(cls, points: Sequence[Point]) -> "Dataset":
        ids = [p.id for p in points]
        if sorted(ids) != list(range(len(points))):
            raise UsageError("point ids must be unique and contiguous from 0")
        rows = [None] * len(points)
        for p in points:
            rows[p.id] = p.coords
        return cls(np.stack(rows))

    @property
    def coords(self) -> np.ndarray:
        return self._coords

    @property
    def n(self) -> int:
        return self._coords.shape[0]

    @property
    def d(self) -> int:
        return self._coords.shape[1]

    def point(self, pid: int) -> Point:
        if not 0 <= pid < self.n:
            raise UsageError(f"point id {pid} out of range [0, {self.n})")
        return Point(int(pid), self._coords[pid])

    def __len__(self) -> int:
        return self.n

    def __iter__(self) -> Iterator[Point]:
        for i in range(self.n):
            yield Point(i, self._coords[i])

    def __repr__(self) -> str:
        return f"Dataset(n={self.n}, d={self.d})"


@dataclass(frozen=True, eq=False)
class ScoringVector:
    """A unit-norm weight vector; defines score(p) = weights . p."""

    weights: np.ndarray

    def __post_init__(self) -> None:
        w = _readonly(np.atleast_1d(self.weights))
        object.__setattr__(self, "weights", w)
        if w.ndim != 1:
            raise UsageError("scoring weights must be a flat vector")
        if not np.all(np.isfinite(w)):
            raise UsageError("scoring weights must be finite")
        if abs(np.linalg.norm(w) - 1.0) > UNIT_NORM_TOL:
            raise UsageError(
                "scoring vector must have unit Euclidean norm; use normalize()"
            )

    @property
    def d(self) -> int:
        return self.weights.shape[0]

    def __repr__(self) -> str:
        return f"ScoringVector({self.weights.tolist()})"


def normalize(weights: Sequence[float] | np.ndarray) -> ScoringVector:
    """Scale a nonzero weight vector to unit norm."""
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1:
        raise UsageError("weights must be a flat vector")
    if not np.all(np.isfinite(w)):
        raise UsageError("weights must be finite")
    peak = float(np.max(np.abs(w)))
    if peak == 0.0:
        raise UsageError("cannot normalize the zero vector")
    w = w / peak  # pre-scale so denormal or huge inputs stay accurate
    return ScoringVector(w / float(np.linalg.norm(w)))


@dataclass(frozen=True, eq=False)
class StripeRange:
    """The slab {x : lower <= f.x <= upper}; bounds inclusive on both ends.

    lower = -inf or upper = +inf degrade the stripe to a half-space.
    """

    f: ScoringVector
    lower: float
    upper: float

    def __post_init__(self) -> None:
        lo, hi = float(self.lower), float(self.upper)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if np.isnan(lo) or np.isnan(hi):
            raise UsageError("stripe bounds may not be NaN")
        if lo > hi:
            raise UsageError(f"stripe lower bound {lo} exceeds upper bound {hi}")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def __repr__(self) -> str:
        return f"StripeRange(lower={self.lower}, upper={self.upper})"


@dataclass(frozen=True, eq=False)
class RankedAnswer:
    point: Point
    rank: int


def score_rows(coords: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Score one row per point: the canonical dot-product evaluation.

    Every caller in the package (exhaustive scans, tree leaves, candidate
    gathers) must route through this function: einsum over a C-contiguous
    block yields bitwise identical per-row results regardless of which row
    subset is evaluated, which plain BLAS matrix-vector products do not
    guarantee.  That stability is what makes backend results comparable at
    exact stripe boundaries.
    """
    coords = np.ascontiguousarray(coords, dtype=np.float64)
    return np.einsum("ij,j->i", coords, weights)


def score(f: ScoringVector, p: Point) -> float:
    """Score of one point: sum_j f[j] * p[j].

    Evaluated through the same kernel as :func:`score_rows`, so a bound
    computed from this value always agrees with backend membership tests.
    """
    if f.d != p.d:
        raise UsageError(f"dimension mismatch: f has d={f.d}, point has d={p.d}")
    return float(score_rows(p.coords[None, :], f.weights)[0])


def _check_dims(D: Dataset, f: ScoringVector) -> None:
    if D.d != f.d:
        raise UsageError(f"dimension mismatch: dataset d={D.d}, f d={f.d}")


def _precedes_mask(
    scores: np.ndarray, ids: np.ndarray, pivot_score: float, pivot_id: int
) -> np.ndarray:
    # strict precedence in the global order: higher score, or equal score
    # with smaller id
    return (scores > pivot_score) | ((scores == pivot_score) & (ids < pivot_id))


def _kth_position(scores: np.ndarray, k: int) -> int:
    """Position (array index) of the k-th element (1-based) in descending
    tie-broken order; expected linear time, no full sort.

    Ids are taken to be the array positions, which holds for every internal
    caller (datasets and samples keep original-id arrays alongside when
    needed).
    """
    n = scores.shape[0]
    idx = np.arange(n)
    want = k - 1  # 0-based offset inside the candidate set
    while idx.shape[0] > 64:
        sub = scores[idx]
        # median-of-3 pivot under the tie-broken order
        cand = [0, idx.shape[0] // 2, idx.shape[0] - 1]
        cand.sort(key=lambda j: (-sub[j], idx[j]))
        pv = cand[1]
        pre = _precedes_mask(sub, idx, sub[pv], idx[pv])
        c = int(np.count_nonzero(pre))
        if want < c:
            idx = idx[pre]
        elif want == c:
            return int(idx[pv])
        else:
            keep = ~pre
            keep[pv] = False
            idx = idx[keep]
            want -= c + 1
    order = sorted(idx.tolist(), key=lambda j: (-scores[j], j))
    return int(order[want])


def select_kth_by_score(points: Sequence[Point], f: ScoringVector, k: int) -> Point:
    """The k-th point of the list in descending tie-broken score order.

    Expected O(len(points)) selection; ties broken by ascending id.
    """
    m = len(points)
    if not 1 <= k <= m:
        raise UsageError(f"k={k} out of range [1, {m}]")
    coords = np.stack([p.coords for p in points])
    ids = np.array([p.id for p in points], dtype=np.int64)
    pos = _kth_position_with_ids(score_rows(coords, f.weights), ids, k)
    return points[pos]


def _kth_position_with_ids(scores: np.ndarray, ids: np.ndarray, k: int) -> int:
    """Like _kth_position but ties break on a caller-supplied id array."""
    n = scores.shape[0]
    idx = np.arange(n)
    want = k - 1
    while idx.shape[0] > 64:
        sub = scores[idx]
        sid = ids[idx]
        cand = [0, idx.shape[0] // 2, idx.shape[0] - 1]
        cand.sort(key=lambda j: (-sub[j], sid[j]))
        pv = cand[1]
        pre = _precedes_mask(sub, sid, sub[pv], sid[pv])
        c = int(np.count_nonzero(pre))
        if want < c:
            idx = idx[pre]
        elif want == c:
            return int(idx[pv])
        else:
            keep = ~pre
            keep[pv] = False
            idx = idx[keep]
            want -= c + 1
    order = sorted(idx.tolist(), key=lambda j: (-scores[j], ids[j]))
    return int(order[want])


def select_rank_exhaustive(D: Dataset, f: ScoringVector, i: int) -> RankedAnswer:
    """The point at rank i (descending, tie-broken) by direct selection.

    This is the baseline every index structure is validated against.  Runs
    in expected O(n): one scoring pass plus quickselect.
    """
    _check_dims(D, f)
    if not 1 <= i <= D.n:
        raise UsageError(f"rank i={i} out of range [1, {D.n}]")
    pos = _kth_position(score_rows(D.coords, f.weights), i)
    return RankedAnswer(point=D.point(pos), rank=i)


def rank_of(D: Dataset, f: ScoringVector, p: Point) -> int:
    """Rank of p in D under f: 1 + number of strictly preceding points."""
    _check_dims(D, f)
    if not 0 <= p.id < D.n or not np.array_equal(D.coords[p.id], p.coords):
        raise UsageError(f"point id {p.id} is not a member of the dataset")
    scores = score_rows(D.coords, f.weights)
    sp = scores[p.id]
    ahead = int(np.count_nonzero(scores > sp))
    ahead += int(np.count_nonzero((scores == sp) & (np.arange(D.n) < p.id)))
    return 1 + ahead
