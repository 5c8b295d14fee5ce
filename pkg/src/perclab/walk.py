"""Random walk on open clusters: exact return-probability series, expected
exit times, one-arm-conditioned environments, and Monte-Carlo walkers.

The computational object is the discrete-time simple random walk, uniform
over open neighbors; degree-0 sites get a self-loop so the kernel stays
stochastic.  Variable-speed (continuous-time) normalization is an analysis
layer: the jump rate per neighbor is n^2 * A1(1,n) * q_n_res.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .clusters import label_clusters, label_mask
from .config import Configuration, sample
from .lattice import Box, TriCoord, lambda_box
from .normalizer import AcceptanceStall
from .resistance import cluster_adjacency
from .rng import hash64, open_threshold


@dataclass(frozen=True)
class WalkEnvironment:
    labeling: object                 # ClusterLabeling of the window
    start: TriCoord
    cluster_id: int
    conditioning: tuple = ("none",)  # or ("one_arm", R)

    @property
    def sites(self):
        return self.labeling.sites_of(self.cluster_id)


@dataclass(frozen=True)
class WalkStats:
    p_return: np.ndarray = field(repr=False)   # p_{2t}(0,0), t = 0..T
    exit_times: tuple = ()                     # ((radius, E_tau), ...)
    time_unit: str = "discrete_step"


def environment_from_labeling(labeling, start):
    info = labeling.cluster_of(start)
    if info.color != "open":
        raise ValueError(f"start site {start} is not open")
    return WalkEnvironment(labeling=labeling, start=TriCoord(*start),
                           cluster_id=info.id)


def _srw_kernel(sites):
    """Row-stochastic CSR kernel of the SRW on a site set (self-loop at
    degree-0 sites) plus the adjacency used to build it."""
    adj = cluster_adjacency(sites)
    deg = np.asarray(adj.sum(axis=1)).ravel()
    m = adj.shape[0]
    inv = np.divide(1.0, deg, out=np.zeros(m), where=deg > 0)
    kernel = sp.diags(inv) @ adj
    isolated = np.nonzero(deg == 0)[0]
    if isolated.size:
        kernel = kernel.tolil()
        for i in isolated:
            kernel[i, i] = 1.0
        kernel = kernel.tocsr()
    return kernel.tocsr(), adj, deg


EXACT_SITE_CAP = 500_000


def return_probability_series(env, T, site_cap=EXACT_SITE_CAP):
    """Exact p_{2t}(start, start) for t = 0..T by vector iteration."""
    sites = env.sites
    if len(sites) > site_cap:
        raise ValueError(
            f"cluster has {len(sites)} sites, above the exact-mode cap "
            f"{site_cap}; shrink the environment or use simulate_walk_paths")
    kernel, _, _ = _srw_kernel(sites)
    kt = kernel.T.tocsr()
    start_idx = _site_index(sites, env.start)
    v = np.zeros(len(sites))
    v[start_idx] = 1.0
    out = np.empty(T + 1)
    out[0] = 1.0
    for t in range(1, 2 * T + 1):
        v = kt @ v
        if t % 2 == 0:
            out[t // 2] = v[start_idx]
    return out


def _site_index(sites, site):
    hit = np.nonzero((sites[:, 0] == site[0]) & (sites[:, 1] == site[1]))[0]
    if hit.size != 1:
        raise ValueError(f"site {tuple(site)} not in the cluster")
    return int(hit[0])


def expected_exit_time(env, radius):
    """E[steps] for the SRW from start to reach sup distance >= radius.

    Solves the discrete Poisson equation L u = deg with u = 0 on the exit
    set, restricted to the component of start inside the ball.
    """
    sites = env.sites
    start = env.start
    d = np.maximum(np.abs(sites[:, 0] - start.a), np.abs(sites[:, 1] - start.b))
    exit_mask = d >= radius
    if not exit_mask.any():
        raise ValueError(
            f"cluster does not reach sup distance {radius} from {tuple(start)}")
    adj = cluster_adjacency(sites)
    deg = np.asarray(adj.sum(axis=1)).ravel()
    start_idx = _site_index(sites, start)
    if exit_mask[start_idx]:
        return 0.0
    interior = np.nonzero(~exit_mask)[0]
    # keep only start's component of the interior subgraph; other interior
    # components never meet the exit set and would make the system singular
    a_ii = adj[interior][:, interior]
    from scipy.sparse.csgraph import connected_components
    _, comp = connected_components(a_ii, directed=False)
    pos_of_start = int(np.nonzero(interior == start_idx)[0][0])
    keep = comp == comp[pos_of_start]
    interior = interior[keep]
    a_ii = a_ii[keep][:, keep]
    lap = sp.diags(deg[interior]) - a_ii
    import scipy.sparse.linalg as spla
    u = spla.spsolve(lap.tocsc(), deg[interior])
    val = float(u[np.nonzero(interior == start_idx)[0][0]])
    if not math.isfinite(val) or val < 0:
        raise ArithmeticError("singular exit system; cluster/exit mismatch")
    return val


def vsrw_rate(n, one_arm_hat, qn_res):
    """Jump rate per open neighbor for the variable-speed walk."""
    return n * n * one_arm_hat * qn_res


class _ArmScratch:
    """Reusable BFS scratch for repeated lazy one-arm checks at one scale."""

    def __init__(self, big_r):
        s = 2 * big_r - 1
        self.stamp = np.zeros(s * s, dtype=np.int64)
        self.queue = np.empty(s * s, dtype=np.int64)
        self.gen = 0

    def hit(self, seed, thr, big_r):
        self.gen += 1
        return _kernels.one_arm_hit(seed, thr, big_r, self.stamp, self.gen,
                                    self.queue, True)


def sample_iic_environment(r, R_factor, seed, p=0.5,
                           stall_attempts=1_000_000, scratch=None):
    """One-arm-conditioned environment: the origin's cluster reaches
    sup distance R = R_factor * r; the window keeps B(0, r) only.

    The conditioning event is checked lazily (BFS with counter-based bits),
    so only the explored part of the big box is ever touched.  Callers
    drawing many environments at one scale may pass a shared ``scratch``.
    """
    if R_factor < 100:
        raise ValueError(f"need R_factor >= 100, got {R_factor}")
    big_r = R_factor * r
    thr = np.uint64(open_threshold(p))
    if scratch is None:
        scratch = _ArmScratch(big_r)
    attempt = 0
    while True:
        attempt_seed = np.uint64(hash64(seed, big_r, attempt))
        attempt += 1
        if scratch.hit(attempt_seed, thr, big_r):
            break
        if attempt >= stall_attempts:
            raise AcceptanceStall(big_r, attempt, 0)
    # extract the window B(0, r): sites with sup distance <= r - 1
    s = 2 * big_r - 1
    side = 2 * r - 1
    c = big_r - 1
    rows = np.arange(c - r + 1, c + r, dtype=np.uint64)
    cols = np.arange(c - r + 1, c + r, dtype=np.uint64)
    idx = rows[:, None] * np.uint64(s) + cols[None, :]
    from .rng import site_u53
    bits = site_u53(idx.ravel(), attempt_seed) < thr
    cfg = Configuration(box=Box(TriCoord(0, 0), side),
                        open_bits=bits, seed=int(attempt_seed), p=p)
    labeling = label_clusters(cfg)
    start = TriCoord(r - 1, r - 1)
    env = environment_from_labeling(labeling, start)
    return WalkEnvironment(labeling=labeling, start=start,
                           cluster_id=env.cluster_id,
                           conditioning=("one_arm", big_r))


def simulate_walk_paths(env, n_walks, t_max, seed, exit_radius=None):
    """Monte-Carlo walks; returns (p2t_hat array for t=0..t_max//2,
    exit_fraction_reached, mean_exit_steps or nan)."""
    if n_walks < 1:
        raise ValueError("n_walks must be >= 1")
    sites = env.sites
    kernel, adj, deg = _srw_kernel(sites)
    start_idx = _site_index(sites, env.start)
    if exit_radius is None:
        exit_mask = np.zeros(len(sites), dtype=np.bool_)
    else:
        d = np.maximum(np.abs(sites[:, 0] - env.start.a),
                       np.abs(sites[:, 1] - env.start.b))
        exit_mask = d >= exit_radius
    returns, exit_steps = _kernels.random_walk_stats(
        adj.indptr.astype(np.int64), adj.indices.astype(np.int64),
        start_idx, n_walks, t_max, exit_mask, np.uint64(seed))
    p2t = np.empty(t_max // 2 + 1)
    p2t[0] = 1.0
    for t in range(1, t_max // 2 + 1):
        p2t[t] = returns[2 * t] / n_walks
    reached = exit_steps[exit_steps >= 0]
    mean_exit = float(reached.mean()) if reached.size else math.nan
    return p2t, len(reached) / n_walks, mean_exit
