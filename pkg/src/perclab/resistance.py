"""Effective resistance on unit-conductance cluster graphs.

Set-to-set resistance contracts the source set to one supernode and the
sink set to another (parallel edges add), grounds the sink, and solves the
Dirichlet problem.  Two routes are provided: Jacobi-preconditioned
conjugate gradients for large clusters, and dense Gaussian elimination as
the exact oracle for small ones.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

EXACT_SIZE_CAP = 2000


class SolverError(RuntimeError):
    """CG failed to reach the requested residual; carries the last value."""

    def __init__(self, msg, residual):
        super().__init__(f"{msg} (last relative residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class ResistanceProblem:
    sites: np.ndarray = field(repr=False)  # (m, 2) int array of (a, b) pairs
    source_set: frozenset                  # of (a, b) tuples, potential 1
    sink_set: frozenset                    # potential 0
    tolerance: float = 1e-10
    max_iters: int = 0                     # 0 = auto (20 * m + 100)

    def __post_init__(self):
        if not self.source_set or not self.sink_set:
            raise ValueError("source and sink sets must be nonempty")
        if self.source_set & self.sink_set:
            raise ValueError("source and sink sets must be disjoint")
        here = {tuple(s) for s in np.asarray(self.sites)}
        missing = (self.source_set | self.sink_set) - here
        if missing:
            raise ValueError(f"terminal sites not in the cluster: {missing}")


def problem_for_pair(labeling, cluster_id, x, y, **kw):
    sites = labeling.sites_of(cluster_id)
    return ResistanceProblem(sites=sites, source_set=frozenset([tuple(x)]),
                             sink_set=frozenset([tuple(y)]), **kw)


def cluster_adjacency(sites):
    """CSR adjacency (unit conductances) of a site set under the
    triangular 6-neighbor relation; site order follows ``sites``."""
    sites = np.asarray(sites, dtype=np.int64)
    m = len(sites)
    index = {(int(a), int(b)): i for i, (a, b) in enumerate(sites)}
    src, dst = [], []
    for da, db in ((1, 0), (0, 1), (-1, 1)):
        for i, (a, b) in enumerate(sites):
            j = index.get((int(a) + da, int(b) + db))
            if j is not None:
                src += [i, j]
                dst += [j, i]
    data = np.ones(len(src), dtype=np.float64)
    return sp.csr_matrix((data, (src, dst)), shape=(m, m))


def _contracted_system(adj, src_idx, snk_idx):
    """Laplacian system after contracting sources to s and sinks to t.

    Returns (L_II, b, c_st, interior_to_s_conductance_row) where the
    unknowns are the interior potentials, b = conductance to s, and c_st is
    the direct source-sink conductance.
    """
    m = adj.shape[0]
    group = np.zeros(m, dtype=np.int64)  # 0 interior, 1 source, 2 sink
    group[src_idx] = 1
    group[snk_idx] = 2
    interior = np.nonzero(group == 0)[0]
    a_ii = adj[interior][:, interior]
    a_is = np.asarray(adj[interior][:, src_idx].sum(axis=1)).ravel()
    a_it = np.asarray(adj[interior][:, snk_idx].sum(axis=1)).ravel()
    c_st = float(adj[src_idx][:, snk_idx].sum())
    deg = np.asarray(a_ii.sum(axis=1)).ravel() + a_is + a_it
    lap = sp.diags(deg) - a_ii
    return lap.tocsr(), a_is, a_it, c_st, interior


def _energy(lap, f, a_is, c_st):
    # Exact Dirichlet energy of the computed potentials (f(s)=1, f(t)=0):
    # E = f' L_II f - 2 a_is . f + sum(a_is) + c_st.  Evaluating the
    # quadratic form keeps the energy error second order in the potential
    # error, which the CG route needs for tight oracle agreement.
    if len(f) == 0:
        return float(a_is.sum() + c_st)
    return float(f @ (lap @ f) - 2.0 * (a_is @ f) + a_is.sum() + c_st)


def _pcg(lap, b, rtol, maxiter):
    """Jacobi-preconditioned conjugate gradients; returns x."""
    diag = lap.diagonal()
    minv = 1.0 / diag
    x = np.zeros_like(b)
    r = b.copy()
    z = minv * r
    p = z.copy()
    rz = float(r @ z)
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return x
    for _ in range(maxiter):
        if np.linalg.norm(r) <= rtol * bnorm:
            return x
        ap = lap @ p
        alpha = rz / float(p @ ap)
        x += alpha * p
        r -= alpha * ap
        z = minv * r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    res = float(np.linalg.norm(r) / bnorm)
    if res <= rtol:
        return x
    raise SolverError("conjugate gradient did not converge", res)


def _terminal_indices(problem):
    sites = np.asarray(problem.sites)
    index = {(int(a), int(b)): i for i, (a, b) in enumerate(sites)}
    src = np.array(sorted(index[s] for s in problem.source_set))
    snk = np.array(sorted(index[s] for s in problem.sink_set))
    return src, snk


def effective_resistance(problem):
    """1 / (minimal Dirichlet energy), via preconditioned CG."""
    adj = cluster_adjacency(problem.sites)
    src, snk = _terminal_indices(problem)
    lap, a_is, a_it, c_st, interior = _contracted_system(adj, src, snk)
    if len(interior) == 0:
        f = np.zeros(0)
    else:
        maxiter = problem.max_iters or 20 * lap.shape[0] + 100
        f = _pcg(lap, a_is, problem.tolerance, maxiter)
    return 1.0 / _energy(lap, f, a_is, c_st)


def effective_resistance_exact(problem, size_cap=EXACT_SIZE_CAP):
    """Oracle route: dense Gaussian elimination on the contracted Laplacian."""
    m = len(problem.sites)
    if m > size_cap:
        raise ValueError(f"cluster size {m} exceeds exact-solver cap {size_cap}")
    adj = cluster_adjacency(problem.sites)
    src, snk = _terminal_indices(problem)
    lap, a_is, a_it, c_st, interior = _contracted_system(adj, src, snk)
    if len(interior) == 0:
        f = np.zeros(0)
    else:
        f = np.linalg.solve(lap.toarray(), a_is)
    return 1.0 / _energy(lap, f, a_is, c_st)


class ClusterResistor:
    """Shared-factorization pairwise resistances within one open cluster.

    Grounds the first cluster site and LU-factorizes the reduced Laplacian
    once; each pair costs two triangular solves.
    """

    def __init__(self, sites):
        self.sites = np.asarray(sites, dtype=np.int64)
        self.index = {(int(a), int(b)): i for i, (a, b) in enumerate(self.sites)}
        adj = cluster_adjacency(self.sites)
        deg = np.asarray(adj.sum(axis=1)).ravel()
        lap = (sp.diags(deg) - adj).tocsc()
        self.m = len(self.sites)
        if self.m > 1:
            self._lu = spla.splu(lap[1:, 1:])

    def resistance(self, x, y):
        ix, iy = self.index[tuple(x)], self.index[tuple(y)]
        if ix == iy:
            return 0.0
        b = np.zeros(self.m)
        b[ix] += 1.0
        b[iy] -= 1.0
        u = np.zeros(self.m)
        u[1:] = self._lu.solve(b[1:])
        return float(u[ix] - u[iy])


def pairwise_resistance_fill(labeling, samples):
    """Fill d_res on MetricSample records; pairs grouped per cluster so the
    factorization is shared.  Off-cluster pairs get d_res = inf."""
    from dataclasses import replace
    out = []
    resistors = {}
    for s in samples:
        info_x = labeling.cluster_of(s.x)
        if info_x.color != "open":
            raise ValueError(f"site {s.x} is not open")
        if tuple(s.x) == tuple(s.y):
            out.append(replace(s, d_res=0.0))
            continue
        info_y = labeling.cluster_of(s.y)
        if info_y.id != info_x.id:
            out.append(replace(s, d_res=math.inf))
            continue
        if info_x.id not in resistors:
            resistors[info_x.id] = ClusterResistor(labeling.sites_of(info_x.id))
        out.append(replace(s, d_res=resistors[info_x.id].resistance(s.x, s.y)))
    return out
