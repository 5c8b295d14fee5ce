"""Cluster labeling and crossing events.

Same-color connectivity uses the 6-neighbor triangular adjacency for both
colors (site percolation on the triangular lattice is self-matching).  The
heavy lifting is scipy.ndimage.label with the triangular structuring
element; per-cluster statistics are aggregated with numpy group-bys.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .lattice import Box, TriCoord, cluster_euclid_diameter

#: 3x3 structuring element of the triangular adjacency on an array indexed
#: [row = b offset, col = a offset]: 4 square neighbors plus the
#: (a+1, b-1) / (a-1, b+1) anti-diagonal pair.
TRI_STRUCTURE = np.array([[0, 1, 1],
                          [1, 1, 1],
                          [1, 1, 0]], dtype=np.int32)


def label_mask(mask):
    """Connected components of a boolean (side, side) mask; 0 = background."""
    labels, n = ndimage.label(mask, structure=TRI_STRUCTURE)
    return labels, n


@dataclass(frozen=True)
class ClusterInfo:
    id: int              # position in ClusterLabeling.clusters
    color: str           # "open" or "closed"
    raw_label: int       # label in the per-color label array
    size: int
    diam: float          # Euclidean diameter
    bbox: Box
    min_index: int       # smallest row-major site index in the cluster


@dataclass(frozen=True)
class ClusterLabeling:
    box: Box
    open_labels: np.ndarray = field(repr=False)    # (side, side) int32, 0=not open
    closed_labels: np.ndarray = field(repr=False)  # (side, side) int32
    clusters: tuple                                # ClusterInfo, diam descending

    def cluster_of(self, site):
        """ClusterInfo containing the site."""
        r = site[1] - self.box.lo.b
        c = site[0] - self.box.lo.a
        if self.open_labels[r, c]:
            return self.clusters[self._open_map[self.open_labels[r, c]]]
        return self.clusters[self._closed_map[self.closed_labels[r, c]]]

    def sites_of(self, cluster_id):
        """All sites of a cluster, as an (m, 2) array of (a, b) pairs."""
        info = self.clusters[cluster_id]
        arr = self.open_labels if info.color == "open" else self.closed_labels
        rows, cols = np.nonzero(arr == info.raw_label)
        return np.column_stack([cols + self.box.lo.a, rows + self.box.lo.b])


def _cluster_stats(labels, n_labels, color, box):
    if n_labels == 0:
        return []
    side = box.side
    flat = labels.ravel()
    order = np.argsort(flat, kind="stable")
    sorted_labels = flat[order]
    starts = np.searchsorted(sorted_labels, np.arange(1, n_labels + 1))
    ends = np.searchsorted(sorted_labels, np.arange(1, n_labels + 1), side="right")
    out = []
    for lab in range(1, n_labels + 1):
        idx = order[starts[lab - 1]:ends[lab - 1]]
        rows, cols = idx // side, idx % side
        a = cols + box.lo.a
        b = rows + box.lo.b
        diam = cluster_euclid_diameter(a, b)
        bbox = Box(TriCoord(int(a.min()), int(b.min())),
                   int(max(a.max() - a.min(), b.max() - b.min())) + 1)
        out.append(ClusterInfo(id=-1, color=color, raw_label=lab,
                               size=int(idx.size), diam=diam, bbox=bbox,
                               min_index=int(idx.min())))
    return out


def label_clusters(cfg):
    """Label open and closed clusters and compute per-cluster statistics.

    Clusters are sorted descending by Euclidean diameter, ties broken by the
    smallest row-major index of their minimal site.
    """
    grid = cfg.grid()
    open_labels, n_open = label_mask(grid)
    closed_labels, n_closed = label_mask(~grid)
    infos = (_cluster_stats(open_labels, n_open, "open", cfg.box)
             + _cluster_stats(closed_labels, n_closed, "closed", cfg.box))
    infos.sort(key=lambda c: (-c.diam, c.min_index))
    clusters = tuple(
        ClusterInfo(id=i, color=c.color, raw_label=c.raw_label, size=c.size,
                    diam=c.diam, bbox=c.bbox, min_index=c.min_index)
        for i, c in enumerate(infos))
    lab = ClusterLabeling(box=cfg.box, open_labels=open_labels,
                          closed_labels=closed_labels, clusters=clusters)
    open_map = {c.raw_label: c.id for c in clusters if c.color == "open"}
    closed_map = {c.raw_label: c.id for c in clusters if c.color == "closed"}
    object.__setattr__(lab, "_open_map", open_map)
    object.__setattr__(lab, "_closed_map", closed_map)
    return lab


def crossing_labels(labels, direction):
    """Labels appearing on both opposite boundaries; 'LR' or 'TB'."""
    if direction == "LR":
        first, last = labels[:, 0], labels[:, -1]
    elif direction == "TB":
        first, last = labels[0, :], labels[-1, :]
    else:
        raise ValueError(f"direction must be LR or TB, got {direction!r}")
    both = np.intersect1d(first[first > 0], last[last > 0])
    return both


def has_crossing(cfg, color, direction):
    """True iff a same-color path joins the two opposite boundary sides."""
    grid = cfg.grid()
    mask = grid if color == "open" else ~grid
    labels, n = label_mask(mask)
    if n == 0:
        return False
    return crossing_labels(labels, direction).size > 0


def crossing_mask_batch(grids, color, direction):
    """Vectorized LR/TB crossing decision over a (k, side, side) stack."""
    masks = grids if color == "open" else ~grids
    struct3 = np.zeros((3, 3, 3), dtype=np.int32)
    struct3[1] = TRI_STRUCTURE
    labels, _ = ndimage.label(masks, structure=struct3)
    out = np.zeros(len(masks), dtype=bool)
    for i in range(len(masks)):
        out[i] = crossing_labels(labels[i], direction).size > 0
    return out
