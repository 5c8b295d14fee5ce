"""Cluster metrics: geodesic (chemical) distance and the path-diameter
bracket, plus rescaling by normalizer constants.

Off-cluster distances are math.inf, never a sentinel.  The path metric is
reported as a certified bracket (lo, hi) with hi <= 2*lo: lo is the
smallest lens radius at which the endpoints connect inside
B(x, rho) & B(y, rho) (sup-norm parallelogram balls), hi is the sup-norm
diameter of the witness path found at that radius.  Bracket values are in
continuum units, i.e. divided by n.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .lattice import TriCoord, sup_dist


@dataclass(frozen=True)
class MetricSample:
    x: TriCoord
    y: TriCoord
    d_geo: float                 # graph hops, math.inf off-cluster
    d_path_lo: float = math.nan  # continuum units
    d_path_hi: float = math.nan
    d_res: float = math.nan      # filled by the resistance module

    def __post_init__(self):
        if math.isfinite(self.d_path_lo) and math.isfinite(self.d_path_hi):
            if not self.d_path_lo <= self.d_path_hi <= 2.0 * self.d_path_lo + 1e-12:
                raise ValueError(
                    f"path bracket violates lo <= hi <= 2lo: "
                    f"({self.d_path_lo}, {self.d_path_hi})")


def _same_open_cluster(labeling, x, y):
    box = labeling.box
    lx = labeling.open_labels[x[1] - box.lo.b, x[0] - box.lo.a]
    ly = labeling.open_labels[y[1] - box.lo.b, y[0] - box.lo.a]
    return lx > 0 and lx == ly


def geodesic_distance(labeling, x, y):
    """Hop distance within the same-color cluster of x; inf across clusters."""
    box = labeling.box
    x, y = TriCoord(*x), TriCoord(*y)
    rx, cx = x.b - box.lo.b, x.a - box.lo.a
    ry, cy = y.b - box.lo.b, y.a - box.lo.a
    x_open = labeling.open_labels[rx, cx] > 0
    y_open = labeling.open_labels[ry, cy] > 0
    if x_open != y_open:
        return math.inf
    arr = labeling.open_labels if x_open else labeling.closed_labels
    if arr[rx, cx] != arr[ry, cy]:
        return math.inf
    grid = labeling.open_labels > 0
    dist = _kernels.grid_bfs(grid, np.array([rx], dtype=np.int64),
                             np.array([cx], dtype=np.int64), x_open)
    return float(dist[ry, cy])


def _lens_connected(grid, x, y, rho, box):
    """BFS hit test inside B(x, rho) & B(y, rho); returns hop dist or -1."""
    side = box.side
    a = np.arange(side) + box.lo.a
    b = np.arange(side) + box.lo.b
    in_x = (np.abs(a[None, :] - x.a) <= rho) & (np.abs(b[:, None] - x.b) <= rho)
    in_y = (np.abs(a[None, :] - y.a) <= rho) & (np.abs(b[:, None] - y.b) <= rho)
    lens = in_x & in_y & grid
    dist = _kernels.grid_bfs(lens, np.array([x.b - box.lo.b], dtype=np.int64),
                             np.array([x.a - box.lo.a], dtype=np.int64), True)
    return dist


def path_metric_bracket(labeling, x, y):
    """Certified (lo, hi) bracket of the minimal path diameter, in units of
    the continuum square (lattice sup-norm distances divided by n)."""
    x, y = TriCoord(*x), TriCoord(*y)
    if not _same_open_cluster(labeling, x, y):
        raise ValueError(f"{x} and {y} are not in the same open cluster")
    box = labeling.box
    n = box.side
    grid = labeling.open_labels > 0
    yr, yc = y.b - box.lo.b, y.a - box.lo.a

    def connected(rho):
        return _lens_connected(grid, x, y, rho, box)[yr, yc] >= 0

    rho = sup_dist(x, y)          # no smaller lens can contain both ends
    known_bad = rho - 1
    while not connected(rho):
        known_bad = rho
        rho = max(2 * rho, 1)
        if rho > 2 * n:
            raise AssertionError("same-cluster sites must connect in the box")
    lo, hi = known_bad + 1, rho
    while lo < hi:
        mid = (lo + hi) // 2
        if connected(mid):
            hi = mid
        else:
            lo = mid + 1
    rho_min = hi
    # witness path at rho_min via parent descent on the BFS distances
    dist = _lens_connected(grid, x, y, rho_min, box)
    r, c = y.b - box.lo.b, y.a - box.lo.a
    path = [(r, c)]
    from .lattice import NEIGHBOR_OFFSETS
    while dist[r, c] > 0:
        for da, db in NEIGHBOR_OFFSETS:
            nr, nc = r + db, c + da
            if (0 <= nr < n and 0 <= nc < n and dist[nr, nc] == dist[r, c] - 1):
                r, c = nr, nc
                break
        path.append((r, c))
    rows = np.array([p[0] for p in path])
    cols = np.array([p[1] for p in path])
    witness_diam = int(max(rows.max() - rows.min(), cols.max() - cols.min()))
    return rho_min / n, max(witness_diam, rho_min) / n


def rescale(sample, q_geo, q_res, n):
    """Divide d_geo by q_geo and d_res by q_res; d_path is already rescaled."""
    if q_geo <= 0 or q_res <= 0:
        raise ValueError("normalizer quantiles must be positive")
    return replace(sample,
                   d_geo=sample.d_geo / q_geo,
                   d_res=sample.d_res / q_res)
