"""Gromov-Hausdorff distances for finite metric spaces and
embedding-guided convergence diagnostics.

Exact GH is computed only for tiny spaces (correspondence search is
exponential); cluster-scale comparisons go through the embedding-matched
correspondence, which upper-bounds GH and is reported as a diagnostic.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels


@dataclass(frozen=True)
class FiniteMetricSpace:
    points: tuple                      # point ids
    dist: np.ndarray = field(repr=False)       # (m, m) symmetric, zero diag
    embedding: np.ndarray = field(default=None, repr=False)  # optional (m, 2)

    def __post_init__(self):
        d = np.asarray(self.dist, dtype=np.float64)
        m = len(self.points)
        if d.shape != (m, m):
            raise ValueError(f"distance matrix shape {d.shape} != ({m},{m})")
        if (np.abs(np.diagonal(d)) > 0).any():
            raise ValueError("distance matrix must have a zero diagonal")
        if not np.allclose(d, d.T, atol=1e-12, rtol=0):
            raise ValueError("distance matrix must be symmetric")
        if (d < 0).any():
            raise ValueError("distances must be nonnegative")
        viol = d[:, :, None] + d[None, :, :] - d[:, None, :]
        if (viol < -1e-9).any():
            raise ValueError("triangle inequality violated beyond 1e-9")
        object.__setattr__(self, "dist", d)
        if self.embedding is not None:
            e = np.asarray(self.embedding, dtype=np.float64)
            if e.shape != (m, 2):
                raise ValueError(f"embedding shape {e.shape} != ({m}, 2)")
            object.__setattr__(self, "embedding", e)

    @property
    def size(self):
        return len(self.points)


GH_EXACT_CELL_CAP = 36


def gh_exact_small(X, Y, cell_cap=GH_EXACT_CELL_CAP):
    """Exact GH distance: half the minimal max distortion over all
    correspondences, found by threshold search with backtracking."""
    nx, ny = X.size, Y.size
    if nx * ny > cell_cap:
        raise ValueError(f"|X|*|Y| = {nx * ny} exceeds cap {cell_cap}")
    dx, dy = X.dist, Y.dist
    # distortion of pairing (i,j) with (k,l) is |dx[i,k] - dy[j,l]|
    dis = np.abs(dx[:, None, :, None] - dy[None, :, None, :])
    candidates = np.unique(dis)

    def feasible(t):
        # search a correspondence whose pairwise distortions are all <= t;
        # assign a partner to every x, then cover unmatched y's
        ok = dis <= t

        def extend(assign, stage_items, covered_y):
            if not stage_items:
                return True
            first, rest = stage_items[0], stage_items[1:]
            kind, idx = first
            if kind == "y" and idx in covered_y:
                return extend(assign, rest, covered_y)
            options = (range(ny) if kind == "x" else range(nx))
            for o in options:
                pair = (idx, o) if kind == "x" else (o, idx)
                if all(ok[pair[0], pair[1], i, j] for (i, j) in assign):
                    assign.append(pair)
                    newly = {pair[1]} if kind == "x" else set()
                    if extend(assign, rest, covered_y | newly):
                        return True
                    assign.pop()
            return False

        items = [("x", i) for i in range(nx)] + [("y", j) for j in range(ny)]
        return extend([], items, set())

    lo, hi = 0, len(candidates) - 1
    if feasible(candidates[0]):
        return 0.5 * float(candidates[0])
    while lo + 1 < hi:
        mid = (lo + hi) // 2
        if feasible(candidates[mid]):
            hi = mid
        else:
            lo = mid
    return 0.5 * float(candidates[hi])


def gh_exact_bruteforce(X, Y):
    """Enumerate every correspondence (test oracle; |X|*|Y| <= ~16)."""
    nx, ny = X.size, Y.size
    cells = list(itertools.product(range(nx), range(ny)))
    best = math.inf
    for bits in range(1, 1 << len(cells)):
        rel = [cells[k] for k in range(len(cells)) if bits >> k & 1]
        if len({i for i, _ in rel}) < nx or len({j for _, j in rel}) < ny:
            continue
        dist = max(abs(X.dist[i, k] - Y.dist[j, l])
                   for (i, j) in rel for (k, l) in rel)
        best = min(best, dist)
    return 0.5 * best


class UncoveredPoint(ValueError):
    def __init__(self, space_name, point):
        super().__init__(
            f"point {point!r} of {space_name} has no partner within "
            f"match_radius; increase the radius")
        self.point = point


def gh_upper_by_embedding(X, Y, match_radius):
    """Upper bound on GH from the embedding-matched correspondence
    {(x, y): |pi(x) - pi(y)| <= match_radius}."""
    if X.embedding is None or Y.embedding is None:
        raise ValueError("both spaces need embeddings")
    diff = X.embedding[:, None, :] - Y.embedding[None, :, :]
    close = (diff ** 2).sum(axis=2) <= match_radius ** 2
    if not close.any(axis=1).all():
        i = int(np.nonzero(~close.any(axis=1))[0][0])
        raise UncoveredPoint("X", X.points[i])
    if not close.any(axis=0).all():
        j = int(np.nonzero(~close.any(axis=0))[0][0])
        raise UncoveredPoint("Y", Y.points[j])
    xi, yj = np.nonzero(close)
    # max over pairs of |d_X(x,x') - d_Y(y,y')|
    dsub = np.abs(X.dist[np.ix_(xi, xi)] - Y.dist[np.ix_(yj, yj)])
    return 0.5 * float(dsub.max())


def measure_discrepancy(mu1, mu2, grid_k):
    """L1 distance between grid-aggregated masses on the unit square.

    A coarse surrogate for measure closeness; NOT the Prokhorov metric.
    """
    from .measures import measure_grid_masses
    m1 = measure_grid_masses(mu1, grid_k)
    m2 = measure_grid_masses(mu2, grid_k)
    return float(np.abs(m1 - m2).sum())


def farthest_point_sample(labeling, cluster_id, k):
    """k metric-representative sites of a cluster by farthest-point
    sampling in the geodesic metric (BFS per chosen center)."""
    sites = labeling.sites_of(cluster_id)
    m = len(sites)
    if m <= k:
        return sites
    box = labeling.box
    grid = labeling.open_labels > 0
    info = labeling.clusters[cluster_id]
    if info.color != "open":
        grid = labeling.closed_labels > 0
    rows = sites[:, 1] - box.lo.b
    cols = sites[:, 0] - box.lo.a
    chosen = [0]
    best = None
    for _ in range(k - 1):
        r, c = rows[chosen[-1]], cols[chosen[-1]]
        dist = _kernels.grid_bfs(grid, np.array([r], dtype=np.int64),
                                 np.array([c], dtype=np.int64), True)
        d = dist[rows, cols].astype(np.float64)
        d[d < 0] = -1.0
        best = d if best is None else np.minimum(best, d)
        nxt = int(np.argmax(best))
        if best[nxt] <= 0:
            break
        chosen.append(nxt)
        best[nxt] = -1.0
    return sites[sorted(set(chosen))]


def geodesic_space(labeling, cluster_id, max_points=200, rescale_n=None):
    """FiniteMetricSpace of a cluster under the geodesic metric, subsampled
    by farthest-point sampling and embedded by rescaled Euclidean image."""
    from .lattice import euclid_arrays
    n = rescale_n or labeling.box.side
    pts = farthest_point_sample(labeling, cluster_id, max_points)
    box = labeling.box
    info = labeling.clusters[cluster_id]
    grid = (labeling.open_labels if info.color == "open"
            else labeling.closed_labels) > 0
    m = len(pts)
    dist = np.zeros((m, m))
    rows = pts[:, 1] - box.lo.b
    cols = pts[:, 0] - box.lo.a
    for i in range(m):
        d = _kernels.grid_bfs(grid, rows[i:i + 1].astype(np.int64),
                              cols[i:i + 1].astype(np.int64), True)
        dist[i] = d[rows, cols]
    if (dist < 0).any():
        raise AssertionError("subsample must stay inside one cluster")
    dist = (dist + dist.T) / 2.0
    ex, ey = euclid_arrays(pts[:, 0] / n, pts[:, 1] / n)
    emb = np.column_stack([ex, ey])
    return FiniteMetricSpace(points=tuple(map(tuple, pts)), dist=dist,
                             embedding=emb)


def resistance_space(labeling, cluster_id, max_points=100, rescale_n=None):
    """FiniteMetricSpace of a cluster under effective resistance."""
    from .lattice import euclid_arrays
    from .resistance import ClusterResistor
    n = rescale_n or labeling.box.side
    pts = farthest_point_sample(labeling, cluster_id, max_points)
    resistor = ClusterResistor(labeling.sites_of(cluster_id))
    m = len(pts)
    dist = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            dist[i, j] = dist[j, i] = resistor.resistance(pts[i], pts[j])
    ex, ey = euclid_arrays(pts[:, 0] / n, pts[:, 1] / n)
    emb = np.column_stack([ex, ey])
    return FiniteMetricSpace(points=tuple(map(tuple, pts)), dist=dist,
                             embedding=emb)
