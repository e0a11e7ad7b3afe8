import math

import numpy as np
import pytest

from nervecert.core import PointCloud, ResourceError
from nervecert.persistence import compute_persistence, full_cap, rips_filtration

from oracles import naive_rips_bars


def bars_tuple(diagram):
    return sorted((b.hom_dim, b.birth, b.death) for b in diagram.bars)


def test_filtration_two_points():
    cloud = PointCloud(np.array([[0.0, 0.0], [1.0, 0.0]]))
    simplices = rips_filtration(cloud, 1, 1.0).simplices()
    assert simplices == [((0,), 0.0), ((1,), 0.0), ((0, 1), 0.5)]


def test_filtration_equilateral_triangle():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]])
    simplices = rips_filtration(PointCloud(pts), 1, 1.0).simplices()
    tri = [s for s in simplices if len(s[0]) == 3]
    assert len(tri) == 1
    assert tri[0][1] == pytest.approx(0.5, abs=1e-12)


def test_filtration_below_min_distance_vertices_only():
    rng = np.random.default_rng(2)
    pts = rng.uniform(0, 1, (12, 2))
    cloud = PointCloud(pts)
    from nervecert.core import distance_matrix

    d = distance_matrix(pts)
    np.fill_diagonal(d, np.inf)
    front = d.min() / 2 * 0.9
    simplices = rips_filtration(cloud, 1, front).simplices()
    assert all(len(s[0]) == 1 for s in simplices)


def test_filtration_order_is_value_dim_lex():
    rng = np.random.default_rng(3)
    cloud = PointCloud(rng.uniform(0, 1, (10, 2)))
    entries = rips_filtration(cloud, 2, full_cap(cloud)).simplices()
    keys = [(v, len(s), s) for s, v in entries]
    assert keys == sorted(keys)


def test_unit_square_h1_bar():
    cloud = PointCloud(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]))
    diagram = compute_persistence(cloud, 1, full_cap(cloud))
    h1 = diagram.finite_in_dim(1)
    assert len(h1) == 1
    assert h1[0].birth == pytest.approx(0.5, abs=1e-9)
    assert h1[0].death == pytest.approx(math.sqrt(2) / 2, abs=1e-9)


def test_isolated_points_all_infinite():
    pts = np.array([[0.0, 0.0], [50.0, 0.0], [0.0, 50.0], [50.0, 50.0]])
    diagram = compute_persistence(PointCloud(pts), 1, 1.0)
    assert diagram.n_infinite(0) == 4
    assert not diagram.finite_in_dim(0)


def test_one_infinite_component_at_full_cap():
    rng = np.random.default_rng(4)
    for seed in range(5):
        pts = np.random.default_rng(seed).uniform(0, 1, (20, 2))
        cloud = PointCloud(pts)
        diagram = compute_persistence(cloud, 1, full_cap(cloud))
        assert diagram.n_infinite(0) == 1


def test_oracle_equivalence_50_clouds():
    for seed in range(50):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(5, 21))
        pts = rng.uniform(0, 1, (n, 2))
        cloud = PointCloud(pts)
        cap = full_cap(cloud) * float(rng.uniform(0.4, 1.1))
        ours = bars_tuple(compute_persistence(cloud, 1, cap))
        assert ours == naive_rips_bars(pts, 1, cap), f"seed {seed}"


def test_oracle_equivalence_on_tie_heavy_inputs():
    # exact value ties (grids, regular polygons, duplicates) are where
    # reduction-order bugs hide
    cases = []
    for w, h in [(2, 3), (3, 3)]:
        cases.append((np.array([[i, j] for i in range(w) for j in range(h)], float), 1))
    cases.append((np.array([[0, 0], [1, 0], [1, 0], [2, 0], [3, 0], [3, 0]], float), 1))
    for k in (5, 6):
        ang = 2 * np.pi * np.arange(k) / k
        cases.append((np.column_stack([np.cos(ang), np.sin(ang)]), 2))
    for pts, md in cases:
        cloud = PointCloud(pts)
        for frac in (0.35, 0.7, 1.0):
            cap = full_cap(cloud) * frac
            ours = bars_tuple(compute_persistence(cloud, md, cap))
            assert ours == naive_rips_bars(pts, md, cap)


def test_single_point_and_dim_zero_cap():
    one = compute_persistence(PointCloud(np.array([[1.0, 2.0]])), 1, 1.0)
    assert bars_tuple(one) == [(0, 0.0, math.inf)]
    pair = compute_persistence(PointCloud(np.array([[0.0, 0.0], [1.0, 0.0]])), 0, 1.0)
    assert bars_tuple(pair) == [(0, 0.0, 0.5), (0, 0.0, math.inf)]


def test_euler_characteristic_at_three_radii():
    # with every dimension computed, alternating bar counts match the
    # alternating simplex counts at any radius
    for seed in (0, 1, 2):
        rng = np.random.default_rng(seed)
        n = 7
        pts = rng.uniform(0, 1, (n, 2))
        cloud = PointCloud(pts)
        cap = full_cap(cloud)
        diagram = compute_persistence(cloud, n - 1, cap)
        filt = rips_filtration(cloud, n - 1, cap)
        entries = filt.simplices()
        for frac in (0.3, 0.6, 1.0):
            t = cap * frac
            chi_simplices = sum(
                (-1) ** (len(s) - 1) for s, v in entries if v <= t and len(s) - 1 <= n - 1
            )
            chi_bars = sum(
                (-1) ** b.hom_dim
                for b in diagram.bars
                if b.birth <= t and (b.is_infinite or b.death > t)
            )
            assert chi_bars == chi_simplices


def test_monotone_in_radius():
    # every finite bar entirely below a smaller cap survives a larger cap
    rng = np.random.default_rng(9)
    pts = rng.uniform(0, 1, (18, 2))
    cloud = PointCloud(pts)
    cap_hi = full_cap(cloud)
    cap_lo = cap_hi * 0.55
    small = compute_persistence(cloud, 1, cap_lo)
    large = compute_persistence(cloud, 1, cap_hi)
    large_bars = [(b.hom_dim, b.birth, b.death) for b in large.bars]
    for b in small.bars:
        if not b.is_infinite and b.death < cap_lo:
            assert (b.hom_dim, b.birth, b.death) in large_bars


def test_simplex_budget_error_names_budget():
    rng = np.random.default_rng(11)
    cloud = PointCloud(rng.uniform(0, 1, (40, 2)))
    with pytest.raises(ResourceError, match="1000"):
        compute_persistence(cloud, 1, full_cap(cloud), simplex_budget=1000)


def test_zero_length_bars_dropped():
    # duplicated points merge at radius 0: no zero-length bars in output
    pts = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]])
    diagram = compute_persistence(PointCloud(pts), 1, 2.0)
    assert all(b.lifespan > 0 for b in diagram.bars)


def test_diagram_sorted():
    rng = np.random.default_rng(12)
    cloud = PointCloud(rng.uniform(0, 1, (15, 3)))
    diagram = compute_persistence(cloud, 2, full_cap(cloud))
    keys = [(b.hom_dim, b.birth, b.death) for b in diagram.bars]
    assert keys == sorted(keys)


def test_json_export_shape():
    cloud = PointCloud(np.array([[0.0, 0.0], [1.0, 0.0]]))
    obj = compute_persistence(cloud, 1, 1.0).to_json_obj()
    assert obj == [{"dim": 0, "birth": 0.0, "death": 0.5}, {"dim": 0, "birth": 0.0, "death": None}]
