"""Interface loops between open and closed sites on the hexagonal dual.

Each site is a hexagonal cell; adjacent sites of different colors share a
dual edge.  With an all-closed exterior collar every open cluster's outer
boundary is one closed loop, holes contribute further loops, and every
honeycomb vertex touches exactly 0 or 2 interface edges, so the loops are
recovered by walking those cycles.  Loops are oriented with the open side
on the left of the travel direction; a counterclockwise loop (positive
signed area) therefore encloses open sites.
"""

from dataclasses import dataclass

from .lattice import TriCoord, euclid


@dataclass(frozen=True)
class InterfaceLoop:
    #: cyclic list of dual edges as (open_site, closed_site) pairs, in
    #: traversal order; closed_site may lie outside the box (collar).
    edges: tuple
    enclosed_color: str  # "open" or "closed"

    @property
    def n_edges(self):
        return len(self.edges)


def _triangles_of_edge(x, y):
    """The two honeycomb vertices (triangles) flanking lattice edge {x, y}.

    Triangles are keyed ('u', a, b) = {(a,b),(a+1,b),(a,b+1)} and
    ('d', a, b) = {(a+1,b),(a,b+1),(a+1,b+1)}.
    """
    (ax, bx), (ay, by) = x, y
    da, db = ay - ax, by - bx
    if (da, db) == (-1, 0) or (da, db) == (0, -1) or (da, db) == (1, -1):
        (ax, bx), (ay, by) = (ay, by), (ax, bx)
        da, db = -da, -db
    if (da, db) == (1, 0):
        return ("u", ax, bx), ("d", ax, bx - 1)
    if (da, db) == (0, 1):
        return ("u", ax, bx), ("d", ax - 1, bx)
    if (da, db) == (-1, 1):   # x=(a+1,b), y=(a,b+1) of triangles at (a,b)
        return ("u", ax - 1, bx), ("d", ax - 1, bx)
    raise ValueError(f"sites {x}, {y} are not adjacent")


def _tri_pos(tri):
    kind, a, b = tri
    if kind == "u":
        corners = [(a, b), (a + 1, b), (a, b + 1)]
    else:
        corners = [(a + 1, b), (a, b + 1), (a + 1, b + 1)]
    xs, ys = zip(*(euclid(c) for c in corners))
    return (sum(xs) / 3.0, sum(ys) / 3.0)


def trace_interfaces(cfg, collar="closed"):
    """All interface loops of a configuration with the given collar color.

    The collar makes every site outside the box count as ``collar``-colored,
    the paper-standard convention being all-closed.
    """
    if collar not in ("open", "closed"):
        raise ValueError(f"collar must be open or closed, got {collar!r}")
    box = cfg.box
    grid = cfg.grid()
    collar_open = collar == "open"

    def is_open(site):
        if box.contains(site):
            return bool(grid[site[1] - box.lo.b, site[0] - box.lo.a])
        return collar_open

    from .lattice import NEIGHBOR_OFFSETS
    edges = set()
    for idx in range(box.n_sites):
        x = box.site_at(idx)
        x_open = is_open(x)
        for da, db in NEIGHBOR_OFFSETS:
            y = TriCoord(x.a + da, x.b + db)
            if is_open(y) != x_open:
                edges.add((x, y) if x_open else (y, x))

    # honeycomb vertex -> incident interface edges (exactly 0 or 2)
    incident = {}
    for e in edges:
        for tri in _triangles_of_edge(*e):
            incident.setdefault(tri, []).append(e)

    loops = []
    unused = set(edges)
    while unused:
        start = min(unused)  # lexicographically smallest (open, closed) pair
        # Orient: travel from triangle t0 to t1 keeping the open site on the
        # left.  Left test: cross(dir, open_pos - midpoint) > 0.
        t0, t1 = _triangles_of_edge(*start)
        p0, p1 = _tri_pos(t0), _tri_pos(t1)
        ox, oy = euclid(start[0])
        mx, my = (p0[0] + p1[0]) / 2.0, (p0[1] + p1[1]) / 2.0
        dx, dy = p1[0] - p0[0], p1[1] - p0[1]
        if dx * (oy - my) - dy * (ox - mx) <= 0:
            t0, t1 = t1, t0
        loop = [start]
        unused.discard(start)
        cur_vertex, cur_edge = t1, start
        while True:
            nxt = [e for e in incident[cur_vertex] if e != cur_edge]
            if not nxt:
                raise AssertionError("open interface path; should be a cycle")
            cur_edge = nxt[0]
            if cur_edge == start:
                break
            loop.append(cur_edge)
            unused.discard(cur_edge)
            a, b = _triangles_of_edge(*cur_edge)
            cur_vertex = b if a == cur_vertex else a
        # signed area of the traversed honeycomb polygon
        verts = []
        v = t0
        for e in loop:
            a, b = _triangles_of_edge(*e)
            v = b if a == v else a
            verts.append(_tri_pos(v))
        area = 0.0
        for i in range(len(verts)):
            x1, y1 = verts[i - 1]
            x2, y2 = verts[i]
            area += x1 * y2 - x2 * y1
        loops.append(InterfaceLoop(
            edges=tuple(loop),
            enclosed_color="open" if area > 0 else "closed"))
    loops.sort(key=lambda lp: lp.edges[0])
    return loops
