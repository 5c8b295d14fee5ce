"""Triangular-lattice geometry: coordinates, boxes, annuli, boundaries.

Sites carry integer triangular coordinates (a, b) with Euclidean image
(a + b/2, b*sqrt(3)/2), so a "box" is a parallelogram with interior angles
pi/3 and 2*pi/3.  All connectivity logic stays in exact integer coordinates;
Euclidean values are computed on demand for diameters and reporting.
Distances to centers and boundaries use the sup norm in triangular
coordinates (parallelogram balls).
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

SQRT3 = math.sqrt(3.0)

#: The 6 neighbor offsets, counterclockwise in the Euclidean image,
#: starting from (+1, 0).  This order is part of the API contract.
NEIGHBOR_OFFSETS = ((1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1))


class TriCoord(NamedTuple):
    a: int
    b: int


def euclid(site):
    """Euclidean image of a triangular coordinate pair."""
    a, b = site
    return (a + 0.5 * b, (SQRT3 / 2.0) * b)


def euclid_arrays(a, b):
    """Vectorized Euclidean image; accepts ndarrays."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return a + 0.5 * b, (SQRT3 / 2.0) * b


def sup_dist(x, y):
    """Sup-norm distance in triangular coordinates (parallelogram metric)."""
    return max(abs(x[0] - y[0]), abs(x[1] - y[1]))


@dataclass(frozen=True)
class Box:
    """Parallelogram block of side^2 sites: lo.a <= a < lo.a+side, same for b."""

    lo: TriCoord
    side: int

    def __post_init__(self):
        if self.side < 1:
            raise ValueError(f"box side must be positive, got {self.side}")
        object.__setattr__(self, "lo", TriCoord(*self.lo))

    @property
    def n_sites(self):
        return self.side * self.side

    def contains(self, site):
        da = site[0] - self.lo.a
        db = site[1] - self.lo.b
        return 0 <= da < self.side and 0 <= db < self.side

    def index_of(self, site):
        """Row-major index (b - lo.b)*side + (a - lo.a); fixed file-format order."""
        if not self.contains(site):
            raise ValueError(f"site {site} outside box {self}")
        return (site[1] - self.lo.b) * self.side + (site[0] - self.lo.a)

    def site_at(self, index):
        db, da = divmod(index, self.side)
        return TriCoord(self.lo.a + da, self.lo.b + db)

    def sites(self):
        for b in range(self.lo.b, self.lo.b + self.side):
            for a in range(self.lo.a, self.lo.a + self.side):
                yield TriCoord(a, b)


def lambda_box(n):
    """The n x n box anchored at the origin (the standard sample domain)."""
    return Box(TriCoord(0, 0), n)


def neighbors(site, domain):
    """In-domain triangular neighbors of ``site``, in the fixed cyclic order."""
    a, b = site
    out = []
    for da, db in NEIGHBOR_OFFSETS:
        nb = TriCoord(a + da, b + db)
        if domain.contains(nb):
            out.append(nb)
    return out


def boundary_sites(box, side):
    """Sites of one box side: 'L', 'R', 'T' or 'B'; exactly box.side sites each."""
    lo, s = box.lo, box.side
    if side == "L":
        return [TriCoord(lo.a, lo.b + i) for i in range(s)]
    if side == "R":
        return [TriCoord(lo.a + s - 1, lo.b + i) for i in range(s)]
    if side == "B":
        return [TriCoord(lo.a + i, lo.b) for i in range(s)]
    if side == "T":
        return [TriCoord(lo.a + i, lo.b + s - 1) for i in range(s)]
    raise ValueError(f"side must be one of L/R/T/B, got {side!r}")


@dataclass(frozen=True)
class Annulus:
    """Sites at sup-norm distance in [r_in, r_out) from the center.

    The inner boundary ring (distance == r_in) and outer boundary ring
    (distance == r_out - 1) must be disjoint, hence r_out >= r_in + 2.
    """

    center: TriCoord
    r_in: int
    r_out: int

    def __post_init__(self):
        if self.r_in < 1:
            raise ValueError(f"r_in must be positive, got {self.r_in}")
        if self.r_out < self.r_in + 2:
            raise ValueError(
                f"need r_out >= r_in + 2 for disjoint boundary rings, "
                f"got r_in={self.r_in}, r_out={self.r_out}")
        object.__setattr__(self, "center", TriCoord(*self.center))

    def membership(self, site):
        return annulus_membership(self, site)

    def sites(self):
        c, ro = self.center, self.r_out
        for b in range(c.b - ro + 1, c.b + ro):
            for a in range(c.a - ro + 1, c.a + ro):
                if max(abs(a - c.a), abs(b - c.b)) >= self.r_in:
                    yield TriCoord(a, b)

    @property
    def n_sites(self):
        ro, ri = self.r_out, self.r_in
        return (2 * ro - 1) ** 2 - (2 * ri - 1) ** 2

    def inner_ring(self):
        """Sites at sup distance exactly r_in, in cyclic order (ccw image)."""
        return ring_sites(self.center, self.r_in)

    def outer_ring(self):
        """Sites at sup distance exactly r_out - 1, in cyclic order."""
        return ring_sites(self.center, self.r_out - 1)


def annulus_membership(ann, site):
    """Classify a site as 'inner_face', 'annulus' or 'outside'."""
    d = sup_dist(site, ann.center)
    if d < ann.r_in:
        return "inner_face"
    if d < ann.r_out:
        return "annulus"
    return "outside"


def ring_sites(center, r):
    """The 8r sites at sup distance exactly r, walked cyclically.

    The walk starts at (center.a + r, center.b - r + 1) and follows the
    right, top, left, bottom sides in order, which is counterclockwise in
    the Euclidean image.  r = 0 gives just the center.
    """
    ca, cb = center
    if r == 0:
        return [TriCoord(ca, cb)]
    out = []
    for db in range(-r + 1, r + 1):          # right side, corner (r, r) last
        out.append(TriCoord(ca + r, cb + db))
    for da in range(r - 1, -r - 1, -1):      # top side, to corner (-r, r)
        out.append(TriCoord(ca + da, cb + r))
    for db in range(r - 1, -r - 1, -1):      # left side, to corner (-r, -r)
        out.append(TriCoord(ca - r, cb + db))
    for da in range(-r + 1, r + 1):          # bottom side, to corner (r, -r)
        out.append(TriCoord(ca + da, cb - r))
    return out


def cluster_euclid_diameter(a_coords, b_coords):
    """Max pairwise Euclidean distance over a site set, via convex hull.

    Exact hull over all points for small sets; for large sets the hull of
    per-row extremes (which contains all hull vertices of the full set).
    """
    a = np.asarray(a_coords, dtype=np.int64)
    b = np.asarray(b_coords, dtype=np.int64)
    if a.size == 1:
        return 0.0
    if a.size > 10_000:
        keep = []
        for bb in np.unique(b):
            sel = np.nonzero(b == bb)[0]
            keep.append(sel[np.argmin(a[sel])])
            keep.append(sel[np.argmax(a[sel])])
        keep = np.array(sorted(set(keep)))
        a, b = a[keep], b[keep]
    x, y = euclid_arrays(a, b)
    pts = np.column_stack([x, y])
    if len(pts) > 3:
        from scipy.spatial import ConvexHull, QhullError
        try:
            pts = pts[ConvexHull(pts).vertices]
        except QhullError:
            pass  # collinear point sets: brute force below
    d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
    return float(np.sqrt(d2.max()))
