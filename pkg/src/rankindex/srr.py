"""Stripe range retrieval backends: exhaustive scan and kd-tree pruning.

Every backend answers the same contract: the query returns exactly the set
of dataset points whose score lies in [lower, upper], both bounds inclusive.
Membership is always decided by the canonical per-point score predicate;
box-level shortcuts only route the traversal (with a small safety margin),
so all backends agree bitwise even on stripes whose bounds are themselves
point scores.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dataset, Point, ScoringVector, StripeRange, score_rows
from .errors import UsageError

__all__ = [
    "ScanStats",
    "ExhaustiveBackend",
    "KdTreeIndex",
    "exhaustive_query_stripe",
    "kdtree_build",
    "kdtree_query_stripe",
    "count_halfspace",
    "LEAF_CAPACITY",
]

LEAF_CAPACITY = 16

# Safety margin for box-interval routing decisions.  Corner-sum rounding is
# ~d * ulp of the score scale, orders of magnitude below this; points within
# the margin of a bound are decided individually by the score predicate.
_BOX_MARGIN = 1e-9


@dataclass(frozen=True)
class ScanStats:
    points_examined: int
    nodes_visited: int


def _stripe_mask(coords: np.ndarray, s: StripeRange) -> np.ndarray:
    sc = score_rows(coords, s.f.weights)
    return (sc >= s.lower) & (sc <= s.upper)


def _materialize(D: Dataset, ids: np.ndarray) -> list[Point]:
    return [Point(int(i), D.coords[i]) for i in np.sort(ids)]


def exhaustive_query_stripe(D: Dataset, s: StripeRange) -> list[Point]:
    """All points with score in [lower, upper], ascending id order."""
    if D.d != s.f.d:
        raise UsageError(f"dimension mismatch: dataset d={D.d}, stripe d={s.f.d}")
    mask = _stripe_mask(D.coords, s)
    return _materialize(D, np.nonzero(mask)[0])


class ExhaustiveBackend:
    """Linear scan; the reference every other backend is checked against."""

    name = "exhaustive"

    def __init__(self, D: Dataset):
        self.dataset = D

    def query_stripe(self, s: StripeRange) -> list[Point]:
        return exhaustive_query_stripe(self.dataset, s)

    def query_stripe_counted(self, s: StripeRange) -> tuple[list[Point], ScanStats]:
        pts = exhaustive_query_stripe(self.dataset, s)
        return pts, ScanStats(points_examined=self.dataset.n, nodes_visited=0)

    def count_halfspace(self, f: ScoringVector, threshold: float, strict: bool) -> int:
        sc = score_rows(self.dataset.coords, f.weights)
        if strict:
            return int(np.count_nonzero(sc > threshold))
        return int(np.count_nonzero(sc >= threshold))


class KdTreeIndex:
    """Balanced median-split tree with tight per-node boxes and counts.

    Nodes live in flat arrays; ``idx`` is a permutation of point ids and each
    node owns the contiguous slice [start, end).  Built by
    :func:`kdtree_build`.
    """

    name = "kdtree"

    def __init__(
        self,
        D: Dataset,
        idx: np.ndarray,
        start: np.ndarray,
        end: np.ndarray,
        left: np.ndarray,
        right: np.ndarray,
        box_lo: np.ndarray,
        box_hi: np.ndarray,
        leaf_capacity: int = LEAF_CAPACITY,
    ):
        self.dataset = D
        self.idx = idx
        self.start = start
        self.end = end
        self.left = left
        self.right = right
        self.box_lo = box_lo
        self.box_hi = box_hi
        self.leaf_capacity = leaf_capacity

    @property
    def num_nodes(self) -> int:
        return self.start.shape[0]

    def subtree_count(self, node: int) -> int:
        return int(self.end[node] - self.start[node])

    def depth(self) -> int:
        stack = [(0, 1)]
        best = 0
        while stack:
            node, dep = stack.pop()
            best = max(best, dep)
            if self.left[node] >= 0:
                stack.append((int(self.left[node]), dep + 1))
                stack.append((int(self.right[node]), dep + 1))
        return best

    def _node_score_interval(self, node: int, w: np.ndarray) -> tuple[float, float]:
        # extreme corners of the linear form over the box, by sign of each
        # weight
        lo_corner = np.where(w >= 0.0, self.box_lo[node], self.box_hi[node])
        hi_corner = np.where(w >= 0.0, self.box_hi[node], self.box_lo[node])
        return float(np.dot(w, lo_corner)), float(np.dot(w, hi_corner))

    def query_stripe_counted(self, s: StripeRange) -> tuple[list[Point], ScanStats]:
        if self.dataset.d != s.f.d:
            raise UsageError("dimension mismatch between index and stripe")
        w = s.f.weights
        margin = _BOX_MARGIN * max(
            1.0,
            abs(s.lower) if np.isfinite(s.lower) else 0.0,
            abs(s.upper) if np.isfinite(s.upper) else 0.0,
        )
        out: list[np.ndarray] = []
        nodes_visited = 0
        points_examined = 0
        stack = [0]
        while stack:
            node = stack.pop()
            nodes_visited += 1
            lo_s, hi_s = self._node_score_interval(node, w)
            if hi_s < s.lower - margin or lo_s > s.upper + margin:
                continue
            if self.left[node] < 0:
                ids = self.idx[self.start[node] : self.end[node]]
                points_examined += ids.shape[0]
                mask = _stripe_mask(self.dataset.coords[ids], s)
                out.append(ids[mask])
            else:
                stack.append(int(self.right[node]))
                stack.append(int(self.left[node]))
        hits = np.concatenate(out) if out else np.empty(0, dtype=np.int64)
        return _materialize(self.dataset, hits), ScanStats(
            points_examined=points_examined, nodes_visited=nodes_visited
        )

    def query_stripe(self, s: StripeRange) -> list[Point]:
        return self.query_stripe_counted(s)[0]

    def count_halfspace(self, f: ScoringVector, threshold: float, strict: bool) -> int:
        """Count of points above the threshold, via subtree counts."""
        w = f.weights
        margin = _BOX_MARGIN * max(
            1.0, abs(threshold) if np.isfinite(threshold) else 0.0
        )
        total = 0
        stack = [0]
        while stack:
            node = stack.pop()
            lo_s, hi_s = self._node_score_interval(node, w)
            if hi_s < threshold - margin:
                continue
            if lo_s > threshold + margin:
                total += self.subtree_count(node)
                continue
            if self.left[node] < 0:
                ids = self.idx[self.start[node] : self.end[node]]
                sc = score_rows(self.dataset.coords[ids], w)
                if strict:
                    total += int(np.count_nonzero(sc > threshold))
                else:
                    total += int(np.count_nonzero(sc >= threshold))
            else:
                stack.append(int(self.right[node]))
                stack.append(int(self.left[node]))
        return total


def kdtree_build(D: Dataset, leaf_capacity: int = LEAF_CAPACITY) -> KdTreeIndex:
    """Build the tree: median split on the widest-spread coordinate."""
    if leaf_capacity < 1:
        raise UsageError("leaf capacity must be positive")
    idx = np.arange(D.n, dtype=np.int64)
    start: list[int] = []
    end: list[int] = []
    left: list[int] = []
    right: list[int] = []
    box_lo: list[np.ndarray] = []
    box_hi: list[np.ndarray] = []

    # explicit stack with a fix-up pass for child links keeps deep trees safe
    def alloc(lo: int, hi: int) -> int:
        node = len(start)
        start.append(lo)
        end.append(hi)
        left.append(-1)
        right.append(-1)
        sub = D.coords[idx[lo:hi]]
        box_lo.append(sub.min(axis=0))
        box_hi.append(sub.max(axis=0))
        return node

    work = [(alloc(0, D.n), 0, D.n)]
    while work:
        node, lo, hi = work.pop()
        size = hi - lo
        if size <= leaf_capacity:
            continue
        spread = box_hi[node] - box_lo[node]
        dim = int(np.argmax(spread))
        mid = size // 2
        col = D.coords[idx[lo:hi], dim]
        part = np.argpartition(col, mid)
        idx[lo:hi] = idx[lo:hi][part]
        left[node] = alloc(lo, lo + mid)
        right[node] = alloc(lo + mid, hi)
        work.append((left[node], lo, lo + mid))
        work.append((right[node], lo + mid, hi))

    return KdTreeIndex(
        D,
        idx=idx,
        start=np.asarray(start, dtype=np.int64),
        end=np.asarray(end, dtype=np.int64),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        box_lo=np.stack(box_lo),
        box_hi=np.stack(box_hi),
        leaf_capacity=leaf_capacity,
    )


def kdtree_query_stripe(index: KdTreeIndex, s: StripeRange) -> list[Point]:
    return index.query_stripe(s)


def count_halfspace(
    backend, f: ScoringVector, threshold: float, strict: bool = False
) -> int:
    """Number of points with score > threshold (strict) or >= threshold."""
    return backend.count_halfspace(f, threshold, strict)
