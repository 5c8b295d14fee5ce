"""Numba kernels for the sampling-heavy estimators.

All kernels draw site bits lazily through the counter-based generator
(`rng.site_is_open`), so only the visited portion of a configuration is ever
materialized.  Site indices are row-major in the ambient square box of side
``s``: index = b*s + a with (a, b) box-local coordinates.
"""

import numba
import numpy as np
from numba import njit, uint64

from .rng import _philox_u64, site_is_open

U64 = numba.uint64


@njit(uint64(uint64, uint64), cache=True, nogil=True, inline="always")
def _mix(h, x):
    h = h ^ x
    h = (h + U64(0x9E3779B97F4A7C15))
    z = h
    z = (z ^ (z >> U64(30))) * U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> U64(27))) * U64(0x94D049BB133111EB)
    return z ^ (z >> U64(31))


@njit(uint64(uint64, uint64, uint64), cache=True, nogil=True, inline="always")
def derive_seed(base, k1, k2):
    """Jitted twin of rng.hash64(base, k1, k2)."""
    return _mix(_mix(_mix(U64(0), base), k1), k2)


# neighbor offsets (da, db), counterclockwise from (+1, 0)
_OFF_A = np.array([1, 0, -1, -1, 0, 1], dtype=np.int64)
_OFF_B = np.array([0, 1, 1, 0, -1, -1], dtype=np.int64)


@njit(cache=True, nogil=True)
def one_arm_hit(seed, thr, big_r, stamp, gen, queue, want_open):
    """Does the center's same-color cluster reach sup-distance big_r - 1?

    Ambient box side s = 2*big_r - 1, center (big_r-1, big_r-1).  BFS over
    ``want_open``-colored sites with lazily evaluated bits; early exit on
    touching the outer ring.  `stamp`/`queue` are scratch arrays of length
    s*s reused across calls via the generation counter `gen`.
    """
    s = 2 * big_r - 1
    c = big_r - 1
    center_idx = c * s + c
    if site_is_open(U64(center_idx), seed, thr) != want_open:
        return False
    if big_r == 1:
        return True
    stamp[center_idx] = gen
    queue[0] = center_idx
    head, tail = 0, 1
    while head < tail:
        idx = queue[head]
        head += 1
        b, a = idx // s, idx % s
        for k in range(6):
            na = a + _OFF_A[k]
            nb = b + _OFF_B[k]
            if na < 0 or na >= s or nb < 0 or nb >= s:
                continue
            nidx = nb * s + na
            if stamp[nidx] == gen:
                continue
            stamp[nidx] = gen
            if site_is_open(U64(nidx), seed, thr) == want_open:
                da = na - c if na > c else c - na
                db = nb - c if nb > c else c - nb
                d = da if da > db else db
                if d == big_r - 1:
                    return True
                queue[tail] = nidx
                tail += 1
    return False


@njit(cache=True, nogil=True)
def one_arm_hits(base_seed, thr, big_r, n_samples, first_index, want_open):
    """Count one-arm hits over samples [first_index, first_index+n_samples)."""
    s = 2 * big_r - 1
    stamp = np.zeros(s * s, dtype=np.int64)
    queue = np.empty(s * s, dtype=np.int64)
    hits = 0
    for i in range(n_samples):
        seed = derive_seed(base_seed, U64(big_r), U64(first_index + i))
        if one_arm_hit(seed, thr, big_r, stamp, i + 1, queue, want_open):
            hits += 1
    return hits


@njit(cache=True, nogil=True)
def _uf_find(parent, i):
    root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        nxt = parent[i]
        parent[i] = root
        i = nxt
    return root


@njit(cache=True, nogil=True, inline="always")
def _site_class(cls, idx, a, b, s, ca, cb, r_in, big_r, half_plane, seed, thr):
    """Lazily classify a lattice point: 2 hole, 3 beyond the outer ring,
    4 below the half-plane line, 0 closed annulus site, 1 open one."""
    if half_plane and b < cb:
        return 4
    da = a - ca if a > ca else ca - a
    db = b - cb if b > cb else cb - b
    d = da if da > db else db
    if d < r_in:
        return 2
    if d > big_r - 1:
        return 3
    c = cls[idx]
    if c < 0:
        c = 1 if site_is_open(U64(idx), seed, thr) else 0
        cls[idx] = c
    return c


@njit(cache=True, nogil=True)
def interface_crossings(seed, thr, big_r, r_in, half_plane):
    """Number of interface curves crossing the annulus A(center; r_in, big_r)
    plus the color on the walk-start side of the first inner port.

    Interface curves live on the hexagonal dual: each lattice triangle
    (honeycomb vertex) carries 0, 1 or 2 interface edges between
    differently-colored annulus sites.  Union-find over triangles linked by
    interface edges recovers the curves; a curve crosses iff one endpoint
    triangle contains an inner-hole corner and another a corner beyond the
    outer ring.  j alternating arms exist iff the crossing count is >= j
    (full plane, j even; odd j needs j+1); in the half-plane the crossing
    interfaces cut the half-annulus into count+1 alternating sectors whose
    first color is returned as first_open (1/0, -1 if no crossings).

    Returns (count, first_open).
    """
    s = 2 * big_r - 1
    ca = big_r - 1
    cb = 0 if half_plane else big_r - 1
    cls = np.full(s * s, -1, dtype=np.int8)
    n_tri = 2 * (s + 1) * (s + 1)
    parent = np.full(n_tri, -1, dtype=np.int64)
    # per-endpoint-triangle port info, aggregated over curves afterwards
    touch_inner = np.zeros(n_tri, dtype=np.uint8)
    touch_outer = np.zeros(n_tri, dtype=np.uint8)
    port_pos = np.full(n_tri, -1, dtype=np.int64)
    port_col = np.full(n_tri, -1, dtype=np.int8)

    b_lo = cb - big_r
    b_hi = cb + big_r
    for b in range(b_lo, b_hi):
        for a in range(ca - big_r, ca + big_r):
            for kind in range(2):
                # corners of T_up(a,b) / T_down(a,b)
                if kind == 0:
                    c0a, c0b = a, b
                    c1a, c1b = a + 1, b
                    c2a, c2b = a, b + 1
                else:
                    c0a, c0b = a + 1, b
                    c1a, c1b = a, b + 1
                    c2a, c2b = a + 1, b + 1
                k0 = _site_class(cls, c0b * s + c0a, c0a, c0b, s, ca, cb,
                                 r_in, big_r, half_plane, seed, thr) \
                    if 0 <= c0a < s and 0 <= c0b < s else \
                    _far_class(c0a, c0b, ca, cb, r_in, big_r, half_plane)
                k1 = _site_class(cls, c1b * s + c1a, c1a, c1b, s, ca, cb,
                                 r_in, big_r, half_plane, seed, thr) \
                    if 0 <= c1a < s and 0 <= c1b < s else \
                    _far_class(c1a, c1b, ca, cb, r_in, big_r, half_plane)
                k2 = _site_class(cls, c2b * s + c2a, c2a, c2b, s, ca, cb,
                                 r_in, big_r, half_plane, seed, thr) \
                    if 0 <= c2a < s and 0 <= c2b < s else \
                    _far_class(c2a, c2b, ca, cb, r_in, big_r, half_plane)
                n_region = (k0 <= 1) + (k1 <= 1) + (k2 <= 1)
                if n_region < 2:
                    continue
                tri = 2 * ((b - b_lo) * (s + 1) + (a - (ca - big_r))) + kind
                if n_region == 3:
                    if k0 == k1 and k1 == k2:
                        continue
                    # mixed triangle: 2 interface edges pass through; union
                    # with the neighbor triangle across each bichromatic pair
                    if k0 != k1:
                        _union_tri(parent, tri, _other_tri(
                            kind, 0, a, b, b_lo, ca, big_r, s))
                    if k1 != k2:
                        _union_tri(parent, tri, _other_tri(
                            kind, 1, a, b, b_lo, ca, big_r, s))
                    if k0 != k2:
                        _union_tri(parent, tri, _other_tri(
                            kind, 2, a, b, b_lo, ca, big_r, s))
                    continue
                # exactly 2 region corners: possible curve endpoint
                if k0 > 1:
                    third, ra, rb_, qa, qb = k0, c1a, c1b, c2a, c2b
                    col_a, col_b = k1, k2
                elif k1 > 1:
                    third, ra, rb_, qa, qb = k1, c0a, c0b, c2a, c2b
                    col_a, col_b = k0, k2
                else:
                    third, ra, rb_, qa, qb = k2, c0a, c0b, c1a, c1b
                    col_a, col_b = k0, k1
                if col_a == col_b:
                    continue
                if parent[tri] < 0:
                    parent[tri] = tri
                _union_tri(parent, tri, _other_tri_sites(
                    ra, rb_, qa, qb, b_lo, ca, big_r, s, tri))
                if third == 2:
                    touch_inner[tri] = 1
                    p1 = _walk_pos(ra, rb_, ca, cb, r_in)
                    p2 = _walk_pos(qa, qb, ca, cb, r_in)
                    if p1 >= 0 and p2 >= 0:
                        if p1 < p2:
                            port_pos[tri], port_col[tri] = p1, col_a
                        else:
                            port_pos[tri], port_col[tri] = p2, col_b
                elif third == 3:
                    touch_outer[tri] = 1

    # aggregate endpoint flags over each curve (union-find component)
    root_inner = np.zeros(n_tri, dtype=np.uint8)
    root_outer = np.zeros(n_tri, dtype=np.uint8)
    root_pos = np.full(n_tri, -1, dtype=np.int64)
    root_col = np.full(n_tri, -1, dtype=np.int8)
    for t in range(n_tri):
        if parent[t] < 0:
            continue
        root = _uf_find(parent, t)
        if touch_inner[t] == 1:
            root_inner[root] = 1
            if port_pos[t] >= 0 and (root_pos[root] < 0
                                     or port_pos[t] < root_pos[root]):
                root_pos[root] = port_pos[t]
                root_col[root] = port_col[t]
        if touch_outer[t] == 1:
            root_outer[root] = 1
    count = 0
    best_pos = np.int64(1) << 60
    first_open = -1
    for t in range(n_tri):
        if parent[t] == t and root_inner[t] == 1 and root_outer[t] == 1:
            count += 1
            if 0 <= root_pos[t] < best_pos:
                best_pos = root_pos[t]
                first_open = root_col[t]
    return count, first_open


@njit(cache=True, nogil=True, inline="always")
def _far_class(a, b, ca, cb, r_in, big_r, half_plane):
    if half_plane and b < cb:
        return 4
    da = a - ca if a > ca else ca - a
    db = b - cb if b > cb else cb - b
    d = da if da > db else db
    if d < r_in:
        return 2
    return 3


@njit(cache=True, nogil=True, inline="always")
def _union_tri(parent, t1, t2):
    if parent[t1] < 0:
        parent[t1] = t1
    if parent[t2] < 0:
        parent[t2] = t2
    r1 = _uf_find(parent, t1)
    r2 = _uf_find(parent, t2)
    if r1 != r2:
        parent[r1] = r2


@njit(cache=True, nogil=True, inline="always")
def _other_tri(kind, pair, a, b, b_lo, ca, big_r, s):
    """Triangle on the other side of corner pair `pair` of T_kind(a, b)."""
    if kind == 0:
        if pair == 0:    # (a,b)-(a+1,b): T_down(a, b-1)
            oa, ob, okind = a, b - 1, 1
        elif pair == 1:  # (a+1,b)-(a,b+1): T_down(a, b)
            oa, ob, okind = a, b, 1
        else:            # (a,b)-(a,b+1): T_down(a-1, b)
            oa, ob, okind = a - 1, b, 1
    else:
        if pair == 0:    # (a+1,b)-(a,b+1): T_up(a, b)
            oa, ob, okind = a, b, 0
        elif pair == 1:  # (a,b+1)-(a+1,b+1): T_up(a, b+1)
            oa, ob, okind = a, b + 1, 0
        else:            # (a+1,b)-(a+1,b+1): T_up(a+1, b)
            oa, ob, okind = a + 1, b, 0
    return 2 * ((ob - b_lo) * (s + 1) + (oa - (ca - big_r))) + okind


@njit(cache=True, nogil=True, inline="always")
def _other_tri_sites(xa, xb, ya, yb, b_lo, ca, big_r, s, self_tri):
    """The triangle across lattice edge {x, y} that is not self_tri."""
    da = ya - xa
    db = yb - xb
    if da == -1 and db == 0 or da == 0 and db == -1 or da == 1 and db == -1:
        xa, xb, ya, yb = ya, yb, xa, xb
        da, db = -da, -db
    if da == 1 and db == 0:
        t1 = 2 * ((xb - b_lo) * (s + 1) + (xa - (ca - big_r)))           # up(x)
        t2 = 2 * ((xb - 1 - b_lo) * (s + 1) + (xa - (ca - big_r))) + 1   # down(a, b-1)
    elif da == 0 and db == 1:
        t1 = 2 * ((xb - b_lo) * (s + 1) + (xa - (ca - big_r)))
        t2 = 2 * ((xb - b_lo) * (s + 1) + (xa - 1 - (ca - big_r))) + 1   # down(a-1, b)
    else:  # da == -1, db == 1: x=(a+1,b), y=(a,b+1)
        t1 = 2 * ((xb - b_lo) * (s + 1) + (xa - 1 - (ca - big_r)))       # up(a, b)
        t2 = 2 * ((xb - b_lo) * (s + 1) + (xa - 1 - (ca - big_r))) + 1   # down(a, b)
    return t2 if t1 == self_tri else t1


@njit(cache=True, nogil=True, inline="always")
def _walk_pos(a, b, ca, cb, r):
    """Position of a ring site in the ccw ring walk; -1 if not on the ring."""
    da = a - ca
    db = b - cb
    ada = da if da > 0 else -da
    adb = db if db > 0 else -db
    d = ada if ada > adb else adb
    if d != r:
        return -1
    if da == r and db > -r:
        return db + r - 1                      # right side
    if db == r:
        return 2 * r - 1 + (r - 1 - da) + 1    # top side
    if da == -r and db < r:
        return 4 * r + (r - 1 - db)            # left side
    return 6 * r + (da + r - 1)                # bottom side


@njit(cache=True, nogil=True)
def alternating_arm_hits(base_seed, thr, big_r, r_in, n_arms, half_plane,
                         sigma_first_open, n_samples, first_index):
    """Hit count for an alternating arm pattern of length ``n_arms`` >= 2.

    Full plane: j alternating arms exist iff the interface crossing count
    is >= j (j even) or >= j + 1 (j odd).  Half plane: count + 1 sectors
    alternate along the half-ring starting with first_open, and sigma is
    realizable iff count + 1 >= n_arms + (0 if the first sector matches
    sigma's first color else 1).
    """
    hits = 0
    for i in range(n_samples):
        seed = derive_seed(base_seed, U64(big_r), U64(first_index + i))
        count, first_open = interface_crossings(
            seed, thr, big_r, r_in, half_plane)
        if half_plane:
            need = n_arms - 1
            if count > 0 and first_open != (1 if sigma_first_open else 0):
                need = n_arms
            ok = count >= need and count >= 1
        else:
            need = n_arms if n_arms % 2 == 0 else n_arms + 1
            ok = count >= need
        if ok:
            hits += 1
    return hits


@njit(cache=True, nogil=True)
def grid_bfs(open_grid, start_rows, start_cols, target_open):
    """BFS hop distances over same-color sites of a (h, w) grid.

    ``target_open`` selects the color traversed (True = open sites).
    Returns an int32 (h, w) array with -1 for unreached sites.
    """
    h, w = open_grid.shape
    dist = np.full((h, w), -1, dtype=np.int32)
    queue = np.empty(h * w, dtype=np.int64)
    head, tail = 0, 0
    for i in range(len(start_rows)):
        r, c = start_rows[i], start_cols[i]
        if open_grid[r, c] == target_open and dist[r, c] < 0:
            dist[r, c] = 0
            queue[tail] = r * w + c
            tail += 1
    while head < tail:
        idx = queue[head]
        head += 1
        r, c = idx // w, idx % w
        d = dist[r, c]
        for k in range(6):
            nc = c + _OFF_A[k]
            nr = r + _OFF_B[k]
            if nc < 0 or nc >= w or nr < 0 or nr >= h:
                continue
            if dist[nr, nc] >= 0 or open_grid[nr, nc] != target_open:
                continue
            dist[nr, nc] = d + 1
            queue[tail] = nr * w + nc
            tail += 1
    return dist


@njit(cache=True, nogil=True)
def random_walk_stats(indptr, indices, start, n_walks, t_max, exit_mask,
                      walk_seed):
    """Monte-Carlo SRW on a cluster given as CSR adjacency.

    Returns (returns[t] = #walks at start after step t for t <= t_max,
    exit_steps[w] = first step hitting exit_mask or -1).  Degree-0 starts
    stay put.  The per-step uniforms come from a SplitMix64 stream seeded
    per walk, so results are independent of scheduling.
    """
    returns = np.zeros(t_max + 1, dtype=np.int64)
    exit_steps = np.full(n_walks, -1, dtype=np.int64)
    for w in range(n_walks):
        state = derive_seed(walk_seed, U64(w), U64(0x57A1C))
        pos = start
        if exit_mask[pos]:
            exit_steps[w] = 0
        for t in range(1, t_max + 1):
            lo = indptr[pos]
            deg = indptr[pos + 1] - lo
            if deg > 0:
                state = _mix(state, U64(t))
                pos = indices[lo + state % U64(deg)]
            if pos == start:
                returns[t] += 1
            if exit_steps[w] < 0 and exit_mask[pos]:
                exit_steps[w] = t
    return returns, exit_steps
