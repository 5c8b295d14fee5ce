"""Independent brute-force oracles used to pin expected values.

Everything here is deliberately naive (recursion, exhaustive enumeration)
and shares no code with the implementation paths it checks.
"""

import sys

import numpy as np

OFFS = ((1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1))


def flood_fill_clusters(grid):
    """Recursive same-color components; returns (labels, n) per color dict."""
    sys.setrecursionlimit(100_000)
    h, w = grid.shape
    labels = np.zeros((h, w), dtype=int)
    nxt = 0

    def visit(r, c, lab, val):
        labels[r, c] = lab
        for da, db in OFFS:
            rr, cc = r + db, c + da
            if 0 <= rr < h and 0 <= cc < w and labels[rr, cc] == 0 \
                    and grid[rr, cc] == val:
                visit(rr, cc, lab, val)

    for r in range(h):
        for c in range(w):
            if labels[r, c] == 0:
                nxt += 1
                visit(r, c, nxt, grid[r, c])
    return labels, nxt


def shortest_path_hops(grid, src, dst, want=True):
    """Plain BFS hop count between (a, b) sites on want-colored cells."""
    h, w = grid.shape
    (sa, sb), (da_, db_) = src, dst
    if grid[sb, sa] != want or grid[db_, da_] != want:
        return None
    dist = {(sb, sa): 0}
    queue = [(sb, sa)]
    while queue:
        r, c = queue.pop(0)
        if (r, c) == (db_, da_):
            return dist[(r, c)]
        for da, db in OFFS:
            rr, cc = r + db, c + da
            if 0 <= rr < h and 0 <= cc < w and grid[rr, cc] == want \
                    and (rr, cc) not in dist:
                dist[(rr, cc)] = dist[(r, c)] + 1
                queue.append((rr, cc))
    return None


def all_simple_paths(grid, src, dst, want=True, cap=200_000):
    """Every simple path between two sites on want-colored cells."""
    h, w = grid.shape
    out = []
    budget = [cap]

    def walk(cur, body):
        budget[0] -= 1
        if budget[0] <= 0:
            raise RuntimeError("path enumeration budget exhausted")
        if cur == dst:
            out.append(body)
            return
        a, b = cur
        for da, db in OFFS:
            nxt = (a + da, b + db)
            if 0 <= nxt[1] < h and 0 <= nxt[0] < w \
                    and grid[nxt[1], nxt[0]] == want and nxt not in body:
                walk(nxt, body + (nxt,))

    walk(src, (src,))
    return out


def sup_diam(path):
    a = [p[0] for p in path]
    b = [p[1] for p in path]
    return max(max(a) - min(a), max(b) - min(b))


def min_path_sup_diameter(grid, src, dst, want=True):
    """Minimum sup-norm diameter over all simple connecting paths."""
    return min(sup_diam(p) for p in all_simple_paths(grid, src, dst, want))


def exhaustive_pivotals(grid):
    """Open sites whose closure kills the open LR crossing (flip & test)."""
    from perclab.clusters import has_crossing
    from perclab.config import from_grid
    h, w = grid.shape
    assert has_crossing(from_grid(grid), "open", "LR")
    out = []
    for b in range(h):
        for a in range(w):
            if not grid[b, a]:
                continue
            g2 = grid.copy()
            g2[b, a] = False
            if not has_crossing(from_grid(g2), "open", "LR"):
                out.append((a, b))
    out.sort(key=lambda s: (s[0] + 0.5 * s[1], s[1]))
    return out


def _hole_adjacent(rc, center, r, half_plane=False):
    b, a = rc
    ca, cb = center
    for da, db in OFFS:
        if half_plane and b + db < cb:
            continue
        if max(abs(a + da - ca), abs(b + db - cb)) < r:
            return True
    return False


def _crossing_paths(grid, member, ring_set, outer_set, color):
    h, w = grid.shape
    want = color == "O"
    out = set()
    for start in ring_set:
        if not member[start] or grid[start] != want:
            continue
        stack = [(start, frozenset([start]))]
        while stack:
            cur, body = stack.pop()
            if cur in outer_set:
                out.add(body)
                continue
            r0, c0 = cur
            for da, db in OFFS:
                nxt = (r0 + db, c0 + da)
                if (0 <= nxt[0] < h and 0 <= nxt[1] < w and member[nxt]
                        and grid[nxt] == want and nxt not in body):
                    stack.append((nxt, body | {nxt}))
    return list(out)


def brute_alternating_arms(grid, center, r_in, r_out, sigma, half_plane=False):
    """Exhaustive search for |sigma| disjoint crossings realizing sigma.

    Arms attach to the inner boundary at sites adjacent to the inner face;
    the order of attachment points is cyclic for the full plane and linear
    along the half-ring walk in the half-plane.
    """
    from perclab.lattice import TriCoord, ring_sites
    h, w = grid.shape
    ca, cb = center
    member = np.zeros((h, w), bool)
    for rr in range(h):
        for cc in range(w):
            if half_plane and rr < cb:
                continue
            d = max(abs(cc - ca), abs(rr - cb))
            if r_in <= d < r_out:
                member[rr, cc] = True
    walk = [(s.b, s.a) for s in ring_sites(TriCoord(ca, cb), r_in)
            if not (half_plane and s.b < cb)]
    pos = {s: i for i, s in enumerate(walk)}
    attach = {s for s in walk if _hole_adjacent(s, (ca, cb), r_in, half_plane)}
    outer = {(s.b, s.a) for s in ring_sites(TriCoord(ca, cb), r_out - 1)
             if not (half_plane and s.b < cb)}
    pools = {}
    for color in set(sigma):
        paths = _crossing_paths(grid, member, set(walk), outer, color)
        pool = []
        for body in paths:
            contacts = sorted(pos[s] for s in body if s in attach)
            if contacts:
                pool.append((body, contacts))
        pools[color] = pool
    m = len(walk)

    def search(pls, k, used, last_pos):
        if k == len(sigma):
            return True
        for body, contacts in pls.get(sigma[k], ()):
            if any(body & u for u in used):
                continue
            for x in contacts:
                if k > 0 and x <= last_pos:
                    continue
                if search(pls, k + 1, used + [body], x):
                    return True
        return False

    if half_plane:
        return search(pools, 0, [], -1)
    # cyclic order: try every rotation and both orientations of the walk
    for shift in range(m):
        for flip in (False, True):
            def repos(p, shift=shift, flip=flip):
                q = (p - shift) % m
                return (m - q) % m if flip else q
            pools_r = {c: [(b, sorted(repos(x) for x in cts))
                           for (b, cts) in pool]
                       for c, pool in pools.items()}
            if search(pools_r, 0, [], -1):
                return True
    return False
