"""Normalized counting measures on clusters, annulus one-arm measures, and
dyadic box-counting volume statistics.

All measures divide by n^2 * A1_hat(1, n), one shared estimate of the
one-arm probability per lattice size, so masses of different clusters in a
run keep exact ratios.
"""

from dataclasses import dataclass, field

import numpy as np

from .clusters import label_mask
from .lattice import TriCoord


@dataclass(frozen=True)
class AtomicMeasure:
    atoms: np.ndarray = field(repr=False)   # (m, 2) int array of (a, b)
    weights: np.ndarray = field(repr=False)  # (m,) positive reals
    normalization: float                     # the divisor used
    n: int                                   # lattice size for rescaling

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=np.int64).reshape(-1, 2)
        weights = np.asarray(self.weights, dtype=np.float64).ravel()
        if len(atoms) != len(weights):
            raise ValueError("atoms and weights must have equal length")
        if (weights <= 0).any():
            raise ValueError("weights must be positive")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @property
    def total_mass(self):
        return float(self.weights.sum())


def cluster_measure(labeling, cluster_id, one_arm_hat):
    """Unit atoms on the cluster's sites, divided by n^2 * one_arm_hat."""
    if one_arm_hat <= 0:
        raise ValueError("one_arm_hat must be positive")
    if not 0 <= cluster_id < len(labeling.clusters):
        raise KeyError(f"unknown cluster id {cluster_id}")
    sites = labeling.sites_of(cluster_id)
    n = labeling.box.side
    norm = n * n * one_arm_hat
    return AtomicMeasure(atoms=sites, weights=np.full(len(sites), 1.0 / norm),
                         normalization=norm, n=n)


def annulus_measure(cfg, annulus, one_arm_hat=1.0):
    """Atoms on inner-face open sites connected (in the box) to the annulus
    outer face, normalized by n^2 * one_arm_hat."""
    if one_arm_hat <= 0:
        raise ValueError("one_arm_hat must be positive")
    box = cfg.box
    n = box.side
    c, ri, ro = annulus.center, annulus.r_in, annulus.r_out
    a = np.arange(n) + box.lo.a
    b = np.arange(n) + box.lo.b
    d = np.maximum(np.abs(a[None, :] - c.a), np.abs(b[:, None] - c.b))
    inner_face = d < ri
    outer_face = d >= ro
    grid = cfg.grid()
    labels, k = label_mask(grid)
    norm = n * n * one_arm_hat
    if k == 0:
        return AtomicMeasure(atoms=np.empty((0, 2), dtype=np.int64),
                             weights=np.empty(0), normalization=norm, n=n)
    out_labels = np.unique(labels[outer_face & grid])
    out_labels = out_labels[out_labels > 0]
    keep = inner_face & grid & np.isin(labels, out_labels)
    rows, cols = np.nonzero(keep)
    atoms = np.column_stack([cols + box.lo.a, rows + box.lo.b])
    return AtomicMeasure(atoms=atoms, weights=np.full(len(atoms), 1.0 / norm),
                         normalization=norm, n=n)


def box_count_Yk(labeling, cluster_id, k):
    """Number of level-k dyadic boxes whose doubled box meets the cluster.

    Boxes are anchored at the box origin with side floor(n / 2^k) sites;
    remainder strips count as partial boxes.  The doubled box 2Q keeps Q's
    center and twice the side.
    """
    n = labeling.box.side
    if 2 ** k > n:
        raise ValueError(f"2^k = {2**k} exceeds n = {n}")
    info = labeling.clusters[cluster_id]
    arr = (labeling.open_labels if info.color == "open"
           else labeling.closed_labels)
    mask = arr == info.raw_label
    return _count_boxes_meeting(mask, n, k)


def _count_boxes_meeting(mask, n, k):
    s = n // (2 ** k)
    n_boxes = -(-n // s)  # ceil: remainder strips as partial boxes
    # integral image for O(1) any-site-in-rectangle queries
    cum = np.zeros((n + 1, n + 1), dtype=np.int64)
    cum[1:, 1:] = np.cumsum(np.cumsum(mask, axis=0), axis=1)

    def rect_any(r0, r1, c0, c1):
        r0, c0 = max(r0, 0), max(c0, 0)
        r1, c1 = min(r1, n), min(c1, n)
        if r0 >= r1 or c0 >= c1:
            return False
        return (cum[r1, c1] - cum[r0, c1] - cum[r1, c0] + cum[r0, c0]) > 0

    count = 0
    for j in range(n_boxes):
        r0 = j * s - s // 2
        for i in range(n_boxes):
            c0 = i * s - s // 2
            if rect_any(r0, r0 + 2 * s, c0, c0 + 2 * s):
                count += 1
    return count


def measure_grid_masses(measure, grid_k):
    """Aggregate atom weights on a grid_k x grid_k partition of the unit
    square (rescaled triangular coordinates)."""
    masses = np.zeros((grid_k, grid_k))
    if len(measure.atoms) == 0:
        return masses
    pos = measure.atoms / measure.n
    cells = np.clip((pos * grid_k).astype(np.int64), 0, grid_k - 1)
    np.add.at(masses, (cells[:, 1], cells[:, 0]), measure.weights)
    return masses
