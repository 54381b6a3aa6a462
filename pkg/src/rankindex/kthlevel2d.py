"""All-ranks direction index for the plane.

For every rank k, the identity of the k-th highest-scoring point is a
piecewise-constant function of the query direction's angle.  Building all
pieces at once: start from the score order at angle 0 and sweep the
direction counterclockwise; the order changes only at directions
perpendicular to some difference vector p - q, where the two (then adjacent)
points swap ranks.  Each swap writes one breakpoint into the two affected
rank arrays.  A query is a binary search over one rank's breakpoint angles.

Equivalently each swap is a vertex where two consecutive levels of the dual
line arrangement meet; the sweep enumerates exactly those vertices without
constructing the arrangement.
"""

from __future__ import annotations

import math

import numpy as np

from .core import Dataset, Point, ScoringVector
from .errors import UsageError

__all__ = ["LevelStructure2D", "build_levels_2d", "query_kth_2d"]

TWO_PI = 2.0 * math.pi

# Events closer in angle than this are resolved together (simultaneous
# crossings from collinear difference vectors land ulps apart).
_CLUSTER_TOL = 1e-12
_CLUSTER_TOL_WIDE = 1e-9


class LevelStructure2D:
    """Per-rank sorted breakpoint arrays over the direction circle.

    ``angles[k-1]`` / ``ids[k-1]`` encode rank k: for query angles in
    [angles[j], angles[j+1]) the rank-k point is ids[j]; angles below the
    first breakpoint wrap around to the last interval.  ``num_events`` is
    the number of adjacent swaps in one full sweep; the budget accounting
    attributes each swap to the lower of its two ranks.
    """

    def __init__(
        self,
        dataset: Dataset,
        angles: list[np.ndarray],
        ids: list[np.ndarray],
        initial_ids: np.ndarray,
        num_events: int,
    ):
        self.dataset = dataset
        self.angles = angles
        self.ids = ids
        self.initial_ids = initial_ids
        self.num_events = num_events

    @property
    def n(self) -> int:
        return self.dataset.n

    @property
    def breakpoint_total(self) -> int:
        """Budget count: one per swap event plus one start interval per rank."""
        return self.num_events + self.n

    def occupant(self, k: int, angle: float) -> int:
        """Point id at rank k for a direction at the given angle."""
        if not 1 <= k <= self.n:
            raise UsageError(f"rank k={k} out of range [1, {self.n}]")
        a = self.angles[k - 1]
        if a.shape[0] == 0:
            return int(self.initial_ids[k - 1])
        j = int(np.searchsorted(a, angle, side="right")) - 1
        if j < 0:
            j = a.shape[0] - 1  # wrap: the arc before the first breakpoint
        return int(self.ids[k - 1][j])


def _event_angles(coords: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All swap directions: for each pair, the two angles perpendicular to
    the difference vector, mapped into (0, 2*pi]."""
    n = coords.shape[0]
    a_idx, b_idx = np.triu_indices(n, k=1)
    delta = coords[a_idx] - coords[b_idx]
    if np.any((delta[:, 0] == 0.0) & (delta[:, 1] == 0.0)):
        raise UsageError("duplicate points are not supported; deduplicate first")
    theta = np.arctan2(delta[:, 0], -delta[:, 1]) % TWO_PI
    theta2 = (theta + math.pi) % TWO_PI
    angles = np.concatenate([theta, theta2])
    pa = np.concatenate([a_idx, a_idx])
    pb = np.concatenate([b_idx, b_idx])
    # crossings at exactly angle 0 belong to the end of the sweep: the
    # starting order is defined just after 0
    angles[angles == 0.0] = TWO_PI
    return angles, pa, pb


def build_levels_2d(D: Dataset) -> LevelStructure2D:
    """Kinetic sweep construction; O(n^2 log n) time, O(n^2) space."""
    if D.d != 2:
        raise UsageError("the level structure supports d = 2 only")
    coords = D.coords
    n = D.n

    # order just after angle 0: descending x, then descending y (the score
    # derivative at 0+), then id
    start = np.lexsort((np.arange(n), -coords[:, 1], -coords[:, 0]))
    order = start.astype(np.int64)
    pos = np.empty(n, dtype=np.int64)
    pos[order] = np.arange(n)
    initial_ids = order.copy()

    lvl_angles: list[list[float]] = [[] for _ in range(n)]
    lvl_ids: list[list[int]] = [[] for _ in range(n)]
    num_events = 0

    if n > 1:
        angles, pa, pb = _event_angles(coords)
        srt = np.lexsort((pb, pa, angles))
        angles, pa, pb = angles[srt], pa[srt], pb[srt]

        def apply_swap(theta: float, a: int, b: int) -> bool:
            i, j = pos[a], pos[b]
            if abs(i - j) != 1:
                return False
            if j < i:
                i, j = j, i
            order[i], order[j] = order[j], order[i]
            pos[order[i]] = i
            pos[order[j]] = j
            # crossings at exactly 2*pi wrap to a breakpoint at angle 0
            rec = theta if theta < TWO_PI else 0.0
            lvl_angles[i].append(rec)
            lvl_ids[i].append(int(order[i]))
            lvl_angles[j].append(rec)
            lvl_ids[j].append(int(order[j]))
            return True

        m = angles.shape[0]
        e = 0
        while e < m:
            # cluster of (near-)simultaneous events
            c_end = e + 1
            while c_end < m and angles[c_end] - angles[e] <= _CLUSTER_TOL:
                c_end += 1
            pending = [(float(angles[t]), int(pa[t]), int(pb[t])) for t in range(e, c_end)]
            widened = False
            while pending:
                progressed = False
                rest = []
                for theta, a, b in pending:
                    if apply_swap(theta, a, b):
                        num_events += 1
                        progressed = True
                    else:
                        rest.append((theta, a, b))
                pending = rest
                if pending and not progressed:
                    if not widened and c_end < m and (
                        angles[c_end] - angles[e] <= _CLUSTER_TOL_WIDE
                    ):
                        # near-degenerate block split by rounding: widen once
                        while c_end < m and angles[c_end] - angles[e] <= _CLUSTER_TOL_WIDE:
                            pending.append(
                                (float(angles[c_end]), int(pa[c_end]), int(pb[c_end]))
                            )
                            c_end += 1
                        widened = True
                        continue
                    raise UsageError(
                        "degenerate direction configuration could not be resolved"
                    )
            e = c_end

        if not np.array_equal(order, start):
            raise AssertionError("sweep did not close the circle")

    fin_angles: list[np.ndarray] = []
    fin_ids: list[np.ndarray] = []
    for k in range(n):
        a = np.asarray(lvl_angles[k], dtype=np.float64)
        i = np.asarray(lvl_ids[k], dtype=np.int64)
        if a.shape[0]:
            srt = np.argsort(a, kind="stable")
            a, i = a[srt], i[srt]
        fin_angles.append(a)
        fin_ids.append(i)

    return LevelStructure2D(
        dataset=D,
        angles=fin_angles,
        ids=fin_ids,
        initial_ids=initial_ids,
        num_events=num_events,
    )


def query_kth_2d(structure: LevelStructure2D, f: ScoringVector, i: int) -> Point:
    """Rank-i point in direction f via binary search; O(log n) compares."""
    if f.d != 2:
        raise UsageError("the level structure supports d = 2 only")
    if not 1 <= i <= structure.n:
        raise UsageError(f"rank i={i} out of range [1, {structure.n}]")
    angle = math.atan2(f.weights[1], f.weights[0]) % TWO_PI
    pid = structure.occupant(i, angle)
    return structure.dataset.point(pid)
