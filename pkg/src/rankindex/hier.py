"""Layered random-sampling index for stripe queries.

The structure keeps a chain of layers: layer 0 is the dataset, each layer
above is a uniform sample of the one below at decay rate r.  Every node is
assigned to its nearest sampled centroid one layer up, and each node stores
a ball enclosing all base points transitively assigned to it.  A query walks
top-down, keeping only nodes whose ball meets the stripe; base points of
surviving layer-1 nodes are then filtered individually, so the result is
always exact: the ball test can produce false candidates but never drops a
member.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dataset, Point, ScoringVector, StripeRange, score_rows
from .errors import UsageError
from .srr import ScanStats, _materialize

__all__ = [
    "Ball",
    "HierIndex",
    "build_hier",
    "smallest_enclosing_ball",
    "ball_intersects_stripe",
    "hier_query_stripe",
    "DEFAULT_DECAY",
]

DEFAULT_DECAY = 4

# Slab-distance tolerance from the ball-vs-stripe contract; inflating the
# test can only add candidates, never lose one.
BALL_TOL = 1e-9

# Routing margin for half-space counting shortcuts (same role as in srr).
_COUNT_MARGIN = 1e-9

# Rounds of the core-set iteration for approximate enclosing balls (d > 3).
_CORE_SET_ROUNDS = 100

# Batched distance tiles for nearest-centroid assignment are computed in
# float32: the assignment only shapes the partition (query exactness never
# depends on it) and the enclosing balls are inflated in float64 afterwards.
_ASSIGN_POINT_CHUNK = 8192
_ASSIGN_CENTROID_CHUNK = 4096


@dataclass(frozen=True, eq=False)
class Ball:
    center: np.ndarray
    radius: float

    def contains(self, p: np.ndarray) -> bool:
        return float(np.linalg.norm(np.asarray(p, dtype=np.float64) - self.center)) <= (
            self.radius + BALL_TOL
        )

    def __repr__(self) -> str:
        return f"Ball(center={self.center.tolist()}, radius={self.radius})"


def _circumball(boundary: tuple[np.ndarray, ...]) -> tuple[np.ndarray, float]:
    """Smallest ball with all boundary points on its surface.

    Solves for the center inside the boundary's affine hull (minimum-norm
    least squares), which is the unique smallest such ball.
    """
    p0 = boundary[0]
    if len(boundary) == 1:
        return p0.copy(), 0.0
    diffs = np.stack([p - p0 for p in boundary[1:]])
    rhs = np.einsum("ij,ij->i", diffs, diffs)
    x, *_ = np.linalg.lstsq(2.0 * diffs, rhs, rcond=None)
    center = p0 + x
    radius = max(float(np.linalg.norm(p - center)) for p in boundary)
    return center, radius


def _welzl_ball(pts: np.ndarray) -> tuple[np.ndarray, float]:
    """Exact minimum enclosing ball for d <= 3 (move-to-front style).

    Recursion depth is bounded by d + 2; the prefix rescans give the
    expected-linear behaviour after a deterministic shuffle.
    """
    d = pts.shape[1]
    order = np.random.default_rng(0x5EB).permutation(pts.shape[0])
    rows = [pts[i] for i in order]

    def grow(limit: int, boundary: tuple[np.ndarray, ...]):
        if len(boundary) == d + 1:
            return _circumball(boundary)
        center, radius = (None, 0.0) if not boundary else _circumball(boundary)
        for i in range(limit):
            p = rows[i]
            if center is None or float(np.linalg.norm(p - center)) > radius * (
                1.0 + 1e-12
            ) + 1e-14:
                center, radius = grow(i, boundary + (p,))
        if center is None:  # empty boundary and no points scanned
            raise UsageError("cannot compute a ball of zero points")
        return center, radius

    return grow(len(rows), ())


def _core_set_balls(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Core-set iteration over a batch: pts has shape (B, s, d).

    Returns centers (B, d) and radii (B,).  The final radius is the exact
    maximum distance from the returned center, so containment of the batch
    points is unconditional; only minimality is approximate.
    """
    centers = pts.mean(axis=1)
    if pts.shape[1] > 1:
        batch = np.arange(pts.shape[0])
        for t in range(1, _CORE_SET_ROUNDS + 1):
            diff = pts - centers[:, None, :]
            d2 = np.einsum("bsd,bsd->bs", diff, diff)
            far = np.argmax(d2, axis=1)
            centers += (pts[batch, far] - centers) / (t + 1.0)
    diff = pts - centers[:, None, :]
    d2 = np.einsum("bsd,bsd->bs", diff, diff)
    radii = np.sqrt(d2.max(axis=1))
    return centers, radii


def smallest_enclosing_ball(points: np.ndarray) -> Ball:
    """A ball containing every input point.

    Exact minimum for d <= 3; for higher dimensions the core-set iteration
    is used and the radius is inflated to cover every point, trading
    tightness (a performance concern) for unconditional containment.
    """
    pts = np.ascontiguousarray(np.atleast_2d(np.asarray(points, dtype=np.float64)))
    if pts.shape[0] == 0:
        raise UsageError("cannot compute a ball of zero points")
    if pts.shape[0] == 1:
        return Ball(center=pts[0].copy(), radius=0.0)
    if pts.shape[0] == 2:
        center = (pts[0] + pts[1]) / 2.0
        return Ball(center=center, radius=float(np.linalg.norm(pts[0] - center)))
    if pts.shape[1] <= 3:
        center, radius = _welzl_ball(pts)
    else:
        centers, radii = _core_set_balls(pts[None, :, :])
        center, radius = centers[0], float(radii[0])
    # containment pass: never return a ball that misses an input point
    radius = max(radius, float(np.sqrt(((pts - center) ** 2).sum(axis=1).max())))
    return Ball(center=center, radius=float(radius))


def ball_intersects_stripe(b: Ball, s: StripeRange) -> bool:
    """Whether the slab comes within the ball's radius of its center.

    Exact for unit-norm stripe directions, inflated by the fixed tolerance
    so a true intersection is never reported as empty.
    """
    c = float(np.einsum("j,j->", b.center, s.f.weights))
    return (s.lower - b.radius - BALL_TOL) <= c <= (s.upper + b.radius + BALL_TOL)


class HierIndex:
    """Layers, child adjacency, and enclosing balls (see module docstring).

    Layer arrays hold point ids sorted ascending.  ``children[l]`` is a CSR
    pair (indptr, positions-into-layer-(l-1)) for layer l >= 1.  Ball centers
    and radii are parallel to each layer's id array; layer 0 balls are the
    points themselves with radius zero.  ``area_sizes[l]`` counts the base
    points transitively assigned to each node; it is derived from the
    adjacency, not stored on disk.
    """

    name = "hier"

    def __init__(
        self,
        D: Dataset,
        layers: list[np.ndarray],
        children: list[tuple[np.ndarray, np.ndarray] | None],
        centers: list[np.ndarray],
        radii: list[np.ndarray],
        decay: int,
        seed: int,
    ):
        self.dataset = D
        self.layers = layers
        self.children = children
        self.centers = centers
        self.radii = radii
        self.decay = decay
        self.seed = seed
        self.area_sizes = self._derive_area_sizes()

    @property
    def num_layers(self) -> int:
        """L: index of the top layer (layer 0 is the dataset)."""
        return len(self.layers) - 1

    def _derive_area_sizes(self) -> list[np.ndarray]:
        sizes: list[np.ndarray] = [np.ones(self.layers[0].shape[0], dtype=np.int64)]
        for level in range(1, len(self.layers)):
            indptr, idx = self.children[level]
            below = sizes[level - 1]
            acc = np.zeros(self.layers[level].shape[0], dtype=np.int64)
            np.add.at(acc, np.repeat(np.arange(acc.shape[0]), np.diff(indptr)), below[idx])
            sizes.append(acc)
        return sizes

    def ball(self, level: int, position: int) -> Ball:
        return Ball(
            center=np.asarray(self.centers[level][position], dtype=np.float64),
            radius=float(self.radii[level][position]),
        )

    def node_count(self) -> int:
        return int(sum(layer.shape[0] for layer in self.layers))

    def _expand(self, level: int, survivors: np.ndarray) -> np.ndarray:
        indptr, idx = self.children[level]
        counts = indptr[survivors + 1] - indptr[survivors]
        total = int(counts.sum())
        if total == 0:
            return np.empty(0, dtype=np.int64)
        starts = indptr[survivors]
        shift = np.repeat(starts - np.concatenate(([0], np.cumsum(counts)[:-1])), counts)
        return idx[np.arange(total, dtype=np.int64) + shift]

    def query_stripe_counted(self, s: StripeRange) -> tuple[list[Point], ScanStats]:
        if self.dataset.d != s.f.d:
            raise UsageError("dimension mismatch between index and stripe")
        w = s.f.weights
        cand = np.arange(self.layers[-1].shape[0], dtype=np.int64)
        nodes_visited = 0
        for level in range(self.num_layers, 0, -1):
            nodes_visited += cand.shape[0]
            if cand.shape[0] == 0:
                break
            cs = score_rows(self.centers[level][cand], w)
            rad = self.radii[level][cand]
            keep = (cs >= s.lower - rad - BALL_TOL) & (cs <= s.upper + rad + BALL_TOL)
            cand = self._expand(level, cand[keep])
        # layer-0 positions are point ids
        points_examined = int(cand.shape[0])
        if points_examined:
            sc = score_rows(self.dataset.coords[cand], w)
            hits = cand[(sc >= s.lower) & (sc <= s.upper)]
        else:
            hits = np.empty(0, dtype=np.int64)
        return _materialize(self.dataset, hits), ScanStats(
            points_examined=points_examined, nodes_visited=nodes_visited
        )

    def query_stripe(self, s: StripeRange) -> list[Point]:
        return self.query_stripe_counted(s)[0]

    def count_halfspace(self, f: ScoringVector, threshold: float, strict: bool) -> int:
        w = f.weights
        margin = _COUNT_MARGIN * max(
            1.0, abs(threshold) if np.isfinite(threshold) else 0.0
        )
        total = 0
        cand = np.arange(self.layers[-1].shape[0], dtype=np.int64)
        for level in range(self.num_layers, 0, -1):
            if cand.shape[0] == 0:
                break
            cs = score_rows(self.centers[level][cand], w)
            rad = self.radii[level][cand]
            inside = cs - rad > threshold + margin
            outside = cs + rad < threshold - margin
            total += int(self.area_sizes[level][cand[inside]].sum())
            cand = self._expand(level, cand[~inside & ~outside])
        if cand.shape[0]:
            sc = score_rows(self.dataset.coords[cand], w)
            if strict:
                total += int(np.count_nonzero(sc > threshold))
            else:
                total += int(np.count_nonzero(sc >= threshold))
        return total


def _num_layers(n: int, r: int) -> int:
    # floor(log_r n) by repeated integer division; no float logs
    level = 0
    v = n
    while v >= r:
        v //= r
        level += 1
    return level


def _sample_prefix(rng: np.random.Generator, pool: np.ndarray, m: int) -> np.ndarray:
    pool = pool.copy()
    n = pool.shape[0]
    for j in range(m):
        swap = j + int(rng.integers(n - j))
        pool[j], pool[swap] = pool[swap], pool[j]
    return np.sort(pool[:m])


def _assign_nearest(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Index of the nearest centroid per point; first (lowest) index wins ties.

    Brute force over all pairs, tiled so distance blocks stay in memory.
    Distances are compared through the equivalent objective
    p.c - |c|^2/2 (maximized), which one augmented matrix product yields
    directly: points gain a constant-one column, centroids the column
    -|c|^2/2.
    """
    p32 = np.ascontiguousarray(points, dtype=np.float32)
    c32 = np.ascontiguousarray(centroids, dtype=np.float32)
    paug = np.hstack([p32, np.ones((p32.shape[0], 1), dtype=np.float32)])
    caug = np.hstack(
        [c32, -0.5 * np.einsum("ij,ij->i", c32, c32)[:, None]]
    )
    out = np.empty(points.shape[0], dtype=np.int64)
    rows = np.arange(min(_ASSIGN_POINT_CHUNK, paug.shape[0]))
    for p0 in range(0, paug.shape[0], _ASSIGN_POINT_CHUNK):
        pc = paug[p0 : p0 + _ASSIGN_POINT_CHUNK]
        best_val = np.full(pc.shape[0], -np.inf, dtype=np.float32)
        best_idx = np.zeros(pc.shape[0], dtype=np.int64)
        for c0 in range(0, caug.shape[0], _ASSIGN_CENTROID_CHUNK):
            g = pc @ caug[c0 : c0 + _ASSIGN_CENTROID_CHUNK].T
            j = np.argmax(g, axis=1)
            v = g[rows[: pc.shape[0]], j]
            upd = v > best_val
            best_val[upd] = v[upd]
            best_idx[upd] = j[upd] + c0
        out[p0 : p0 + pc.shape[0]] = best_idx
    return out


def _grouped_balls(
    coords: np.ndarray, owner: np.ndarray, num_groups: int
) -> tuple[np.ndarray, np.ndarray]:
    """Enclosing ball per group of base points (grouped by owner node)."""
    d = coords.shape[1]
    centers = np.zeros((num_groups, d), dtype=np.float64)
    radii = np.zeros(num_groups, dtype=np.float64)
    order = np.argsort(owner, kind="stable")
    bounds = np.concatenate(
        ([0], np.cumsum(np.bincount(owner, minlength=num_groups)))
    )
    if d <= 3:
        for g in range(num_groups):
            members = order[bounds[g] : bounds[g + 1]]
            if members.shape[0] == 0:
                continue
            ball = smallest_enclosing_ball(coords[members])
            centers[g] = ball.center
            radii[g] = ball.radius
        return centers, radii
    # d > 3: batch equal-sized groups through the core-set iteration
    sizes = np.diff(bounds)
    by_size: dict[int, list[int]] = {}
    for g, sz in enumerate(sizes):
        if sz > 0:
            by_size.setdefault(int(sz), []).append(g)
    for sz, groups in by_size.items():
        if sz == 1:
            g = np.asarray(groups)
            members = order[bounds[g]]
            centers[g] = coords[members]
            radii[g] = 0.0
            continue
        if sz <= 64 and len(groups) > 1:
            member_mat = np.stack(
                [order[bounds[g] : bounds[g + 1]] for g in groups]
            )
            pts = coords[member_mat]  # (B, sz, d)
            c, r = _core_set_balls(pts)
            # exact float64 containment pass per ball
            diff = pts - c[:, None, :]
            r = np.sqrt(np.einsum("bsd,bsd->bs", diff, diff).max(axis=1))
            centers[np.asarray(groups)] = c
            radii[np.asarray(groups)] = r
        else:
            for g in groups:
                members = order[bounds[g] : bounds[g + 1]]
                ball = smallest_enclosing_ball(coords[members])
                centers[g] = ball.center
                radii[g] = ball.radius
    return centers, radii


def build_hier(D: Dataset, r: int = DEFAULT_DECAY, seed: int = 0) -> HierIndex:
    """Build the layered index; deterministic given the seed.

    Layer l is a uniform sample of size floor(|L_{l-1}| / r) (at least one
    node) drawn without replacement from the layer below; each lower node
    joins the child list of its nearest centroid (lowest id on distance
    ties).  Balls cover each node's transitive base-point area.  Worst-case
    build time is O(d n^2) from the brute-force assignment.
    """
    if r < 2:
        raise UsageError("decay rate r must be at least 2")
    rng = np.random.default_rng(seed)
    n = D.n
    num_layers = _num_layers(n, r)
    layers: list[np.ndarray] = [np.arange(n, dtype=np.int64)]
    children: list[tuple[np.ndarray, np.ndarray] | None] = [None]
    centers: list[np.ndarray] = [D.coords]
    radii: list[np.ndarray] = [np.zeros(n, dtype=np.float64)]

    # base_owner[i]: position of base point i's ancestor in the current layer
    base_owner = np.arange(n, dtype=np.int64)
    for level in range(1, num_layers + 1):
        prev = layers[level - 1]
        if prev.shape[0] <= 1:
            break
        m = max(1, prev.shape[0] // r)
        ids = _sample_prefix(rng, prev, m)
        assign = _assign_nearest(D.coords[prev], D.coords[ids])
        # CSR adjacency: children of each layer node, ascending position
        counts = np.bincount(assign, minlength=m)
        indptr = np.concatenate(([0], np.cumsum(counts)))
        order = np.argsort(assign, kind="stable")
        children.append((indptr.astype(np.int64), order.astype(np.int64)))
        layers.append(ids)
        base_owner = assign[base_owner]
        c, rad = _grouped_balls(D.coords, base_owner, m)
        centers.append(c)
        radii.append(rad)

    return HierIndex(
        D,
        layers=layers,
        children=children,
        centers=centers,
        radii=radii,
        decay=int(r),
        seed=int(seed),
    )


def hier_query_stripe(index: HierIndex, D: Dataset, s: StripeRange) -> list[Point]:
    """Alg-style top-down frontier query; exact result set."""
    if index.dataset is not D and (
        index.dataset.n != D.n or index.dataset.d != D.d
    ):
        raise UsageError("index was not built over this dataset")
    return index.query_stripe(s)
