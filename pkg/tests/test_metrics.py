import math

import numpy as np
import pytest

from oracles import min_path_sup_diameter, shortest_path_hops
from perclab.clusters import label_clusters
from perclab.config import from_grid, sample
from perclab.metrics import (MetricSample, geodesic_distance,
                             path_metric_bracket, rescale)
from perclab.rng import hash64

# horseshoe in the 5-box: chemical distance 9 between sites at Euclidean
# distance 2 (frozen from an induced-path search, BFS oracle verified)
HORSESHOE = ((0, 0), (0, 1), (0, 2), (1, 2), (2, 2), (3, 2), (4, 1),
             (4, 0), (3, 0), (2, 0))


def horseshoe_grid():
    g = np.zeros((5, 5), bool)
    for (a, b) in HORSESHOE:
        g[b, a] = True
    return g


def test_geodesic_trivial_cases():
    lab = label_clusters(from_grid(np.ones((3, 3), bool)))
    assert geodesic_distance(lab, (1, 1), (1, 1)) == 0
    assert geodesic_distance(lab, (0, 0), (1, 0)) == 1


def test_geodesic_horseshoe():
    g = horseshoe_grid()
    lab = label_clusters(from_grid(g))
    assert geodesic_distance(lab, (0, 0), (2, 0)) == 9
    assert shortest_path_hops(g, (0, 0), (2, 0)) == 9


def test_geodesic_infinite_across_clusters_and_colors():
    g = np.zeros((3, 3), bool)
    g[0, 0] = g[2, 2] = True
    lab = label_clusters(from_grid(g))
    assert geodesic_distance(lab, (0, 0), (2, 2)) == math.inf
    assert geodesic_distance(lab, (0, 0), (1, 0)) == math.inf  # open vs closed


def test_geodesic_triangle_inequality_sampled():
    cfg = sample(24, 8899)
    lab = label_clusters(cfg)
    big = next(c for c in lab.clusters if c.color == "open")
    sites = lab.sites_of(big.id)
    rng = np.random.default_rng(1)
    for _ in range(300):
        x, y, z = (tuple(sites[i]) for i in rng.integers(0, len(sites), 3))
        dxy = geodesic_distance(lab, x, y)
        dyz = geodesic_distance(lab, y, z)
        dxz = geodesic_distance(lab, x, z)
        assert dxz <= dxy + dyz


def test_bracket_adjacent_and_segment():
    n = 6
    g = np.zeros((n, n), bool)
    g[0, 0:5] = True   # straight segment (0,0)..(4,0)
    lab = label_clusters(from_grid(g))
    lo, hi = path_metric_bracket(lab, (0, 0), (1, 0))
    assert lo == hi == 1 / n
    lo, hi = path_metric_bracket(lab, (0, 0), (4, 0))
    assert hi == 4 / n          # the segment is its own minimal path
    assert lo <= hi <= 2 * lo


def test_bracket_straddles_u_shape_true_value():
    # U-shaped corridor: the true minimal path diameter comes from
    # exhaustive simple-path enumeration on the small cluster
    g = np.zeros((6, 6), bool)
    for (a, b) in [(0, 3), (0, 2), (0, 1), (1, 0), (2, 0), (3, 0),
                   (4, 1), (4, 2), (4, 3)]:
        g[b, a] = True
    lab = label_clusters(from_grid(g))
    x, y = (0, 3), (4, 3)
    true_diam = min_path_sup_diameter(g, x, y)
    lo, hi = path_metric_bracket(lab, x, y)
    assert lo <= true_diam / 6 <= hi
    assert hi <= 2 * lo


def test_bracket_same_site_and_disconnected():
    g = np.zeros((4, 4), bool)
    g[0, 0] = g[3, 3] = True
    lab = label_clusters(from_grid(g))
    assert path_metric_bracket(lab, (0, 0), (0, 0)) == (0.0, 0.0)
    with pytest.raises(ValueError):
        path_metric_bracket(lab, (0, 0), (3, 3))


def test_bracket_invariant_on_random_pairs():
    cfg = sample(20, 4321)
    lab = label_clusters(cfg)
    big = next(c for c in lab.clusters if c.color == "open")
    sites = lab.sites_of(big.id)
    rng = np.random.default_rng(2)
    for _ in range(40):
        x, y = (tuple(sites[i]) for i in rng.integers(0, len(sites), 2))
        lo, hi = path_metric_bracket(lab, x, y)
        assert lo <= hi <= 2 * lo + 1e-12


def test_rescale_arithmetic():
    s = MetricSample(x=(0, 0), y=(1, 0), d_geo=10.0, d_res=5.0)
    r = rescale(s, q_geo=10.0, q_res=2.0, n=8)
    assert r.d_geo == 1.0 and r.d_res == 2.5
    assert rescale(s, 1.0, 1.0, 8) == s
    assert rescale(MetricSample((0, 0), (1, 0), 137.0, d_res=1.0),
                   54.8, 1.0, 8).d_geo == pytest.approx(2.5)
    with pytest.raises(ValueError):
        rescale(s, 0.0, 1.0, 8)


def test_series_law_across_pivotals():
    # geodesic distance adds along consecutive pinch points of a crossing
    from perclab.arms import find_pivotals
    hits = 0
    for i in range(60):
        cfg = sample(12, hash64(606, 12, i))
        try:
            piv = find_pivotals(cfg)
        except ValueError:
            continue
        if len(piv) < 3:
            continue
        lab = label_clusters(cfg)
        total = geodesic_distance(lab, piv[0], piv[-1])
        parts = sum(geodesic_distance(lab, piv[k], piv[k + 1])
                    for k in range(len(piv) - 1))
        assert total == parts
        hits += 1
    assert hits >= 5


def test_parallel_bound_vertex_cut():
    # removing a separator: d(x, y) >= min_i d(x, a_i) for any vertex cut
    g = horseshoe_grid()
    lab = label_clusters(from_grid(g))
    x, y = (0, 0), (2, 0)
    cut = [(2, 2)]  # single-site cut on the horseshoe
    dxy = geodesic_distance(lab, x, y)
    assert dxy >= min(geodesic_distance(lab, x, a) for a in cut)


def test_monotonicity_under_restriction():
    # restricting to a sub-box never decreases the geodesic distance
    cfg = sample(16, 13)
    lab = label_clusters(cfg)
    big = next(c for c in lab.clusters if c.color == "open")
    sites = [tuple(s) for s in lab.sites_of(big.id)
             if 2 <= s[0] < 14 and 2 <= s[1] < 14]
    if len(sites) < 2:
        pytest.skip("cluster too small in the sub-box")
    sub = cfg.grid()[2:14, 2:14]
    sub_lab = label_clusters(from_grid(sub))
    rng = np.random.default_rng(3)
    checked = 0
    for _ in range(200):
        x, y = (sites[i] for i in rng.integers(0, len(sites), 2))
        d_full = geodesic_distance(lab, x, y)
        d_sub = geodesic_distance(
            sub_lab, (x[0] - 2, x[1] - 2), (y[0] - 2, y[1] - 2))
        assert d_sub >= d_full or math.isinf(d_full)
        checked += 1
    assert checked


def test_holder_style_ratio_stays_bounded():
    # statistical sanity: rescaled geodesic distance against the path
    # metric bracket grows with exponent below 1, and the ratio against
    # d_path^(5/8) does not blow up between scales
    from perclab.harness import fit_exponent
    ratios = {}
    for n in (24, 48):
        cfg = sample(n, 2025)
        lab = label_clusters(cfg)
        big = next(c for c in lab.clusters if c.color == "open")
        sites = lab.sites_of(big.id)
        rng = np.random.default_rng(n)
        pts, rat = [], []
        for _ in range(120):
            x, y = (tuple(sites[i]) for i in rng.integers(0, len(sites), 2))
            if x == y:
                continue
            d = geodesic_distance(lab, x, y) / n ** 1.13
            lo, hi = path_metric_bracket(lab, x, y)
            mid = (lo + hi) / 2
            if mid > 0 and d > 0:
                pts.append({"x": mid, "y": d})
                rat.append(d / mid ** 0.625)
        fit = fit_exponent(pts, "x", "y")
        assert fit.slope < 1.0
        ratios[n] = max(rat)
    assert ratios[48] <= 4.0 * ratios[24]
