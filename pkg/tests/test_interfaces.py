import numpy as np

from perclab.clusters import label_clusters
from perclab.config import from_grid, sample
from perclab.interfaces import trace_interfaces
from perclab.lattice import TriCoord, neighbors, Box


def test_single_open_site_hexagon():
    g = np.zeros((3, 3), bool)
    g[1, 1] = True
    loops = trace_interfaces(from_grid(g))
    assert len(loops) == 1
    assert loops[0].n_edges == 6
    assert loops[0].enclosed_color == "open"


def test_all_closed_no_loops():
    assert trace_interfaces(from_grid(np.zeros((5, 5), bool))) == []


def test_two_adjacent_open_sites_ten_edges():
    g = np.zeros((4, 4), bool)
    g[1, 1] = g[1, 2] = True   # sites (1,1), (2,1)
    loops = trace_interfaces(from_grid(g))
    assert len(loops) == 1
    assert loops[0].n_edges == 10


def test_hole_gets_its_own_loop():
    # open ring around a closed center: outer boundary + hole boundary
    g = np.ones((3, 3), bool)
    g[1, 1] = False
    loops = trace_interfaces(from_grid(g))
    assert len(loops) == 2
    enclosed = sorted(lp.enclosed_color for lp in loops)
    assert enclosed == ["closed", "open"]
    assert sorted(lp.n_edges for lp in loops) == [6, 22]


def test_edges_separate_colors_and_loops_cover_open_clusters():
    cfg = sample(12, 20240810)
    grid = cfg.grid()
    loops = trace_interfaces(cfg)
    box = cfg.box

    def is_open(site):
        if box.contains(site):
            return bool(grid[site[1], site[0]])
        return False  # all-closed collar

    seen_edges = set()
    for lp in loops:
        for (x, y) in lp.edges:
            assert is_open(x) and not is_open(y)
            assert TriCoord(*y) in neighbors(TriCoord(*x), Box(TriCoord(-1, -1), 14))
            assert (x, y) not in seen_edges  # edge-disjoint loops
            seen_edges.add((x, y))
    lab = label_clusters(cfg)
    n_open = sum(1 for c in lab.clusters if c.color == "open")
    assert len(loops) >= n_open  # one outer loop per open cluster, plus holes


def test_open_collar_flag():
    g = np.zeros((3, 3), bool)
    g[1, 1] = True
    # with an all-open collar the closed ring around (1,1) interfaces both
    # against the center and against the collar
    loops = trace_interfaces(from_grid(g), collar="open")
    assert len(loops) == 2
    assert {lp.n_edges for lp in loops} == {6, 22}
