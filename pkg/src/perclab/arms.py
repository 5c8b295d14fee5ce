"""Arm events: disjoint crossings of annuli, arm-probability estimation,
and pivotal sites of left-right crossings.

Color sequences sigma are strings over {'O', 'C'}.  Supported patterns are
single colors (plain Menger/connectivity) and strictly alternating words,
detected through the interface-curve criterion: j alternating arms cross an
annulus iff at least j interface curves (dual curves separating open from
closed) run from the inner to the outer boundary.  In the half-plane the
crossing interfaces cut the half-annulus into count+1 monochromatic sectors
read linearly along the boundary walk.  Mixed non-alternating patterns
(adjacent equal colors next to unequal ones) are out of scope.
"""

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_flow

from . import _kernels
from .clusters import label_mask
from .lattice import Annulus, TriCoord, ring_sites
from .rng import hash64, open_threshold


def _check_sigma(sigma):
    if len(sigma) < 1 or any(ch not in "OC" for ch in sigma):
        raise ValueError(f"sigma must be a nonempty string over O/C: {sigma!r}")


def is_alternating(sigma):
    return all(sigma[i] != sigma[i - 1] for i in range(1, len(sigma)))


@dataclass(frozen=True)
class ArmQuery:
    annulus: Annulus
    sigma: str
    half_plane: bool = False

    def __post_init__(self):
        _check_sigma(self.sigma)


@dataclass(frozen=True)
class ArmCount:
    query: tuple          # (r, R, sigma, half_plane)
    satisfied: bool       # whether any sampled configuration hit
    n_samples: int
    n_hits: int

    def __post_init__(self):
        if not 0 <= self.n_hits <= self.n_samples:
            raise ValueError("need 0 <= n_hits <= n_samples")

    @property
    def estimate(self):
        return self.n_hits / self.n_samples

    @property
    def stderr(self):
        p = self.estimate
        return (p * (1.0 - p) / self.n_samples) ** 0.5


def _annulus_in_box(cfg, annulus, half_plane=False):
    b_lo = annulus.center.b if half_plane else annulus.center.b - annulus.r_out + 1
    if not (cfg.box.contains(TriCoord(annulus.center.a - annulus.r_out + 1, b_lo))
            and cfg.box.contains(TriCoord(annulus.center.a + annulus.r_out - 1,
                                          annulus.center.b + annulus.r_out - 1))):
        raise ValueError(f"annulus {annulus} not contained in box {cfg.box}")


def _ring_in_box(cfg, center, r, half_plane):
    sites = []
    for s in ring_sites(center, r):
        if half_plane and s.b < center.b:
            continue
        if cfg.box.contains(s):
            sites.append(s)
    return sites


def _annulus_masks(cfg, annulus, half_plane):
    """Boolean annulus-membership mask over the cfg grid."""
    box = cfg.box
    side = box.side
    a = np.arange(side) + box.lo.a
    b = np.arange(side) + box.lo.b
    da = np.abs(a[None, :] - annulus.center.a)
    db = np.abs(b[:, None] - annulus.center.b)
    d = np.maximum(da, db)
    member = (d >= annulus.r_in) & (d < annulus.r_out)
    if half_plane:
        member &= (b[:, None] >= annulus.center.b)
    return member


def count_disjoint_monochromatic(cfg, annulus, color):
    """Maximum number of vertex-disjoint same-color inner-to-outer crossings.

    Computed as a max-flow with unit vertex capacities (node splitting) on
    the same-color subgraph of the annulus, which equals the Menger value.
    """
    _annulus_in_box(cfg, annulus)
    member = _annulus_masks(cfg, annulus, half_plane=False)
    grid = cfg.grid()
    mask = member & (grid if color == "open" else ~grid)
    return _max_disjoint_crossings(
        cfg, mask, _ring_in_box(cfg, annulus.center, annulus.r_in, False),
        _ring_in_box(cfg, annulus.center, annulus.r_out - 1, False))


def _max_disjoint_crossings(cfg, mask, inner_sites, outer_sites):
    box = cfg.box
    rows, cols = np.nonzero(mask)
    m = rows.size
    if m == 0:
        return 0
    node_of = -np.ones(mask.shape, dtype=np.int64)
    node_of[rows, cols] = np.arange(m)
    # node split: site i -> in 2+2i, out 2+2i+1; source 0, sink 1
    src, dst, cap = [], [], []
    for i in range(m):
        src.append(2 + 2 * i)
        dst.append(2 + 2 * i + 1)
        cap.append(1)
    for dr, dc in ((0, 1), (1, 0), (1, -1)):
        r2, c2 = rows + dr, cols + dc
        ok = (r2 >= 0) & (r2 < mask.shape[0]) & (c2 >= 0) & (c2 < mask.shape[1])
        ok[ok] &= mask[r2[ok], c2[ok]]
        for i in np.nonzero(ok)[0]:
            u = node_of[rows[i], cols[i]]
            v = node_of[r2[i], c2[i]]
            src += [2 + 2 * u + 1, 2 + 2 * v + 1]
            dst += [2 + 2 * v, 2 + 2 * u]
            cap += [1, 1]
    n_inner = 0
    for s in inner_sites:
        i = node_of[s.b - box.lo.b, s.a - box.lo.a]
        if i >= 0:
            src.append(0)
            dst.append(2 + 2 * i)
            cap.append(1)
            n_inner += 1
    n_outer = 0
    for s in outer_sites:
        i = node_of[s.b - box.lo.b, s.a - box.lo.a]
        if i >= 0:
            src.append(2 + 2 * i + 1)
            dst.append(1)
            cap.append(1)
            n_outer += 1
    if n_inner == 0 or n_outer == 0:
        return 0
    n_nodes = 2 + 2 * m
    graph = csr_matrix((np.asarray(cap, dtype=np.int32),
                        (np.asarray(src), np.asarray(dst))),
                       shape=(n_nodes, n_nodes))
    return int(maximum_flow(graph, 0, 1).flow_value)


def interface_crossing_count(cfg, annulus, half_plane=False):
    """Number of interface curves crossing the annulus, plus the color of
    the first sector along the boundary walk ('O'/'C'/None).

    Triangles of the lattice are honeycomb vertices carrying 0, 1 or 2
    interface edges between differently-colored annulus sites; curves are
    the components of triangles chained by those edges, and a curve crosses
    iff its endpoints touch the inner hole and the outer ring.
    """
    _annulus_in_box(cfg, annulus, half_plane)
    c, ri, ro = annulus.center, annulus.r_in, annulus.r_out
    grid = cfg.grid()
    box = cfg.box

    def classify(a, b):
        if half_plane and b < c.b:
            return 4
        d = max(abs(a - c.a), abs(b - c.b))
        if d < ri:
            return 2
        if d >= ro:
            return 3
        return 1 if grid[b - box.lo.b, a - box.lo.a] else 0

    parent = {}

    def find(t):
        root = t
        while parent[root] != root:
            root = parent[root]
        while parent[t] != root:
            parent[t], t = root, parent[t]
        return root

    def union(t1, t2):
        parent.setdefault(t1, t1)
        parent.setdefault(t2, t2)
        r1, r2 = find(t1), find(t2)
        if r1 != r2:
            parent[r1] = r2

    marks = {}  # endpoint triangle -> (is_inner, walk_pos, side_color)
    outer_marks = set()
    walk = {s: i for i, s in enumerate(ring_sites(c, ri))}

    lo_a, hi_a = c.a - ro, c.a + ro
    lo_b = c.b if half_plane else c.b - ro
    hi_b = c.b + ro
    for b in range(lo_b - 1, hi_b + 1):
        for a in range(lo_a - 1, hi_a + 1):
            for kind in (0, 1):
                if kind == 0:
                    corners = ((a, b), (a + 1, b), (a, b + 1))
                else:
                    corners = ((a + 1, b), (a, b + 1), (a + 1, b + 1))
                ks = [classify(*p) for p in corners]
                region = [i for i in range(3) if ks[i] <= 1]
                if len(region) < 2:
                    continue
                tri = (kind, a, b)
                if len(region) == 3:
                    if ks[0] == ks[1] == ks[2]:
                        continue
                    for i, j in ((0, 1), (1, 2), (0, 2)):
                        if ks[i] != ks[j]:
                            union(tri, _flank(corners[i], corners[j], tri))
                    continue
                i, j = region
                if ks[i] == ks[j]:
                    continue
                third = ks[3 - i - j]
                union(tri, _flank(corners[i], corners[j], tri))
                if third == 2:
                    p1 = walk.get(TriCoord(*corners[i]), -1)
                    p2 = walk.get(TriCoord(*corners[j]), -1)
                    if p1 >= 0 and p2 >= 0:
                        pos, col = (p1, ks[i]) if p1 < p2 else (p2, ks[j])
                    else:
                        pos, col = -1, -1
                    marks[tri] = (pos, col)
                elif third == 3:
                    outer_marks.add(tri)

    agg = {}
    for tri, (pos, col) in marks.items():
        root = find(tri)
        cur = agg.setdefault(root, [False, False, -1, -1])
        cur[0] = True
        if pos >= 0 and (cur[2] < 0 or pos < cur[2]):
            cur[2], cur[3] = pos, col
    for tri in outer_marks:
        root = find(tri)
        agg.setdefault(root, [False, False, -1, -1])[1] = True
    crossing = [v for v in agg.values() if v[0] and v[1]]
    count = len(crossing)
    first = None
    best = None
    for v in crossing:
        if v[2] >= 0 and (best is None or v[2] < best):
            best = v[2]
            first = "O" if v[3] == 1 else "C"
    return count, first


def _flank(x, y, self_tri):
    """The triangle across lattice edge {x, y} other than self_tri."""
    (xa, xb), (ya, yb) = x, y
    da, db = ya - xa, yb - xb
    if (da, db) in ((-1, 0), (0, -1), (1, -1)):
        (xa, xb), (da, db) = (ya, yb), (-da, -db)
    if (da, db) == (1, 0):
        t1, t2 = (0, xa, xb), (1, xa, xb - 1)
    elif (da, db) == (0, 1):
        t1, t2 = (0, xa, xb), (1, xa - 1, xb)
    else:  # x = (a+1, b), y = (a, b+1)
        t1, t2 = (0, xa - 1, xb), (1, xa - 1, xb)
    return t2 if t1 == self_tri else t1


def _has_monochromatic_crossing(cfg, annulus, color, half_plane):
    member = _annulus_masks(cfg, annulus, half_plane)
    grid = cfg.grid()
    mask = member & (grid if color == "open" else ~grid)
    labels, k = label_mask(mask)
    if k == 0:
        return False
    box = cfg.box
    inner = _ring_in_box(cfg, annulus.center, annulus.r_in, half_plane)
    outer = _ring_in_box(cfg, annulus.center, annulus.r_out - 1, half_plane)
    on_inner = {int(labels[s.b - box.lo.b, s.a - box.lo.a]) for s in inner}
    on_outer = {int(labels[s.b - box.lo.b, s.a - box.lo.a]) for s in outer}
    return len((on_inner & on_outer) - {0}) > 0


def has_alternating_arms(cfg, query):
    """True iff |sigma| disjoint crossings realize sigma around the annulus.

    sigma must be a single color or strictly alternating; for other mixed
    patterns the interface criterion does not apply and the query is
    rejected.
    """
    ann, sigma, half = query.annulus, query.sigma, query.half_plane
    if half and ann.center.b != cfg.box.lo.b:
        raise ValueError(
            "half-plane query requires the annulus center on the bottom "
            f"boundary line b={cfg.box.lo.b}, got center {ann.center}")
    if len(sigma) == 1:
        color = "open" if sigma == "O" else "closed"
        if half:
            return _has_monochromatic_crossing(cfg, ann, color, True)
        return count_disjoint_monochromatic(cfg, ann, color) >= 1
    if not is_alternating(sigma):
        raise NotImplementedError(
            f"only single-color and strictly alternating sigmas are "
            f"supported, got {sigma!r}")
    count, first = interface_crossing_count(cfg, ann, half_plane=half)
    j = len(sigma)
    if half:
        if count == 0:
            return False
        need = j - 1 if first == sigma[0] else j
        return count >= need
    return count >= (j if j % 2 == 0 else j + 1)


def estimate_arm_probability(r, R, sigma, half_plane, n_samples, seed):
    """Monte-Carlo estimate of the arm probability A_sigma(r, R).

    Independent configurations are drawn on B(0, R) (side 2R-1 box) with
    per-sample seeds hash64(seed, R, i).  r == 1 single-color queries are
    center-rooted: the arm starts at the center site, so R = 1 degenerates
    to the color of the center alone.  All estimation runs in lazy numba
    kernels over the counter-based bits.
    """
    _check_sigma(sigma)
    if not 1 <= r < R and not (r == R == 1):
        raise ValueError(f"need r < R (or r = R = 1), got r={r}, R={R}")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if len(sigma) > 1 and not is_alternating(sigma):
        raise NotImplementedError(
            f"only single-color and strictly alternating sigmas are "
            f"supported, got {sigma!r}")
    thr = np.uint64(open_threshold(0.5))
    base = np.uint64(seed)

    if r == 1 and len(sigma) == 1 and not half_plane:
        hits = int(_kernels.one_arm_hits(base, thr, R, n_samples, 0,
                                         sigma == "O"))
    elif len(sigma) == 1:
        raise ValueError(
            "single-color estimation needs the center-rooted full-plane "
            "form (r == 1, half_plane False); use count_disjoint_... "
            "on explicit configurations otherwise")
    else:
        if r < 2:
            raise ValueError("multi-arm queries need r >= 2 so the inner "
                             "ring is nonempty")
        hits = int(_kernels.alternating_arm_hits(
            base, thr, R, r, len(sigma), half_plane, sigma[0] == "O",
            n_samples, 0))
    return ArmCount(query=(r, R, sigma, half_plane), satisfied=hits > 0,
                    n_samples=n_samples, n_hits=hits)


def find_pivotals(cfg):
    """All open sites whose closure destroys the open LR crossing.

    Pivotal sites lie on every open left-right crossing, so candidates are
    restricted to one crossing path and each is tested by removal.  Sorted
    left to right by Euclidean first coordinate, ties by b.
    """
    grid = cfg.grid().copy()
    side = cfg.side
    left = np.arange(side, dtype=np.int64)
    zeros = np.zeros(side, dtype=np.int64)
    dist_l = _kernels.grid_bfs(grid, left, zeros, True)
    reach_r = dist_l[:, side - 1]
    if not (reach_r >= 0).any():
        raise ValueError("configuration has no open left-right crossing")
    # walk one shortest crossing back from the right side
    r = int(np.nonzero(reach_r >= 0)[0][np.argmin(reach_r[reach_r >= 0])])
    c = side - 1
    path = [(r, c)]
    from .lattice import NEIGHBOR_OFFSETS
    while dist_l[r, c] > 0:
        for da, db in NEIGHBOR_OFFSETS:
            nr, nc = r + db, c + da
            if (0 <= nr < side and 0 <= nc < side
                    and dist_l[nr, nc] == dist_l[r, c] - 1):
                r, c = nr, nc
                break
        path.append((r, c))
    pivotal = []
    for (pr, pc) in path:
        grid[pr, pc] = False
        d = _kernels.grid_bfs(grid, left, zeros, True)
        grid[pr, pc] = True
        if not (d[:, side - 1] >= 0).any():
            pivotal.append(TriCoord(pc + cfg.box.lo.a, pr + cfg.box.lo.b))
    pivotal.sort(key=lambda s: (s.a + 0.5 * s.b, s.b))
    return pivotal
