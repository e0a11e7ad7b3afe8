import math

import numpy as np
import pytest

from nervecert.core import PointCloud
from nervecert.mapper import FilterSpec, FixedCutoff, build_mapper
from nervecert.persistence import compute_persistence, full_cap
from nervecert.separation import corollary_check, pairwise_separation

from oracles import min_cross_distance


def mapper_of(points, intervals=2, overlap=0.5, eps=1.0):
    cloud = PointCloud(points)
    return cloud, build_mapper(cloud, FilterSpec("coordinate", intervals, overlap), FixedCutoff(eps))


def diagrams_of(cloud, mapper, max_dim=1):
    out = {}
    for simplex in mapper.nerve:
        sub = cloud.subset(mapper.member_points[simplex])
        out[simplex] = compute_persistence(sub, max_dim, full_cap(sub))
    return out


def test_pairwise_two_singletons():
    pts = np.array([[0.0, 0.0], [2.0, 0.0]])
    cloud, mapper = mapper_of(pts, intervals=2, overlap=0.2, eps=0.5)
    sep = pairwise_separation(cloud, mapper)
    assert sep[(0, 1)] == 2.0


def test_pairwise_nested_is_infinite():
    from nervecert.mapper import MapperStructure

    pts = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    cloud = PointCloud(pts)
    mapper = MapperStructure(
        cover_elements=((0, 1, 2), (0, 1)),
        interval_of=(0, 1),
        nerve=((0,), (1,), (0, 1)),
        member_points={(0,): (0, 1, 2), (1,): (0, 1), (0, 1): (0, 1)},
        nerve_dim_cap=1,
    )
    sep = pairwise_separation(cloud, mapper)
    assert math.isinf(sep[(0, 1)])


def test_pairwise_shared_point_oracle():
    # two 3-point sets sharing one point; nearest cross pair at 0.7
    pts = np.array(
        [[0.0, 0.0], [0.2, 0.0], [0.9, 0.0], [1.5, 0.0], [5.0, 5.0]]
    )
    from nervecert.mapper import MapperStructure

    cloud = PointCloud(pts)
    ea, eb = (0, 1, 4), (2, 3, 4)
    mapper = MapperStructure(
        cover_elements=(ea, eb),
        interval_of=(0, 1),
        nerve=((0,), (1,), (0, 1)),
        member_points={(0,): ea, (1,): eb, (0, 1): (4,)},
        nerve_dim_cap=1,
    )
    sep = pairwise_separation(cloud, mapper)
    assert sep[(0, 1)] == pytest.approx(0.7, abs=1e-12)
    assert sep[(0, 1)] == pytest.approx(
        min_cross_distance(pts[[0, 1]], pts[[2, 3]]), abs=1e-15
    )


def test_pairwise_symmetric_by_construction():
    rng = np.random.default_rng(0)
    cloud, mapper = mapper_of(rng.normal(0, 1, (40, 2)), intervals=4, eps=0.8)
    sep = pairwise_separation(cloud, mapper)
    for (i, j), v in sep.items():
        assert i < j
        only_i = [p for p in mapper.cover_elements[i] if p not in mapper.cover_elements[j]]
        only_j = [p for p in mapper.cover_elements[j] if p not in mapper.cover_elements[i]]
        if only_i and only_j:
            assert v == pytest.approx(
                min_cross_distance(cloud.points[only_i], cloud.points[only_j]), abs=1e-12
            )


def test_corollary_separated_clusters_apply():
    rng = np.random.default_rng(1)
    blob1 = rng.uniform(0, 0.2, (10, 2))
    blob2 = rng.uniform(0, 0.2, (10, 2)) + [10.0, 0.0]
    cloud = PointCloud(np.vstack([blob1, blob2]))
    mapper = build_mapper(cloud, FilterSpec("coordinate", 2, 0.5), FixedCutoff(5.0))
    diagrams = diagrams_of(cloud, mapper)
    report = corollary_check(cloud, mapper, diagrams, mapper.nerve_dim_cap)
    assert report.applies
    max_death = max(
        b.death for d in diagrams.values() for b in d.bars if not b.is_infinite
    )
    assert report.epsilon_required == pytest.approx(max_death)
    assert report.interleaving_bound == pytest.approx(
        2 * (mapper.nerve_dim_cap + 1) * report.epsilon_required
    )


def test_corollary_close_clusters_fail_with_reason():
    rng = np.random.default_rng(2)
    pts = rng.uniform(0, 1, (40, 2))
    cloud = PointCloud(pts)
    mapper = build_mapper(cloud, FilterSpec("coordinate", 4, 0.5))
    report = corollary_check(cloud, mapper, diagrams_of(cloud, mapper), mapper.nerve_dim_cap)
    assert not report.applies
    assert "separation" in report.failure_reasons


def test_corollary_missing_diagram_is_error():
    from nervecert.core import InputError

    rng = np.random.default_rng(3)
    cloud, mapper = mapper_of(rng.normal(0, 1, (30, 2)), intervals=3)
    diagrams = diagrams_of(cloud, mapper)
    diagrams.pop(mapper.nerve[0])
    with pytest.raises(InputError):
        corollary_check(cloud, mapper, diagrams, mapper.nerve_dim_cap)


def test_scaling_by_power_of_two_scales_report_exactly():
    rng = np.random.default_rng(4)
    blob1 = rng.uniform(0, 0.3, (8, 2))
    blob2 = rng.uniform(0, 0.3, (8, 2)) + [7.0, 0.0]
    pts = np.vstack([blob1, blob2])
    for c in (2.0, 0.5):
        cloud, mapper = mapper_of(pts, intervals=2, eps=2.0)
        scaled_cloud = PointCloud(pts * c)
        scaled_mapper = build_mapper(
            scaled_cloud, FilterSpec("coordinate", 2, 0.5), FixedCutoff(2.0 * c)
        )
        assert scaled_mapper.cover_elements == mapper.cover_elements
        base = corollary_check(cloud, mapper, diagrams_of(cloud, mapper), 1)
        scaled = corollary_check(
            scaled_cloud, scaled_mapper, diagrams_of(scaled_cloud, scaled_mapper), 1
        )
        assert scaled.epsilon_sep == c * base.epsilon_sep
        assert scaled.epsilon_required == c * base.epsilon_required
        assert scaled.applies == base.applies
        if base.applies:
            assert scaled.interleaving_bound == c * base.interleaving_bound


def test_applies_monotone_in_separation():
    # pushing the blobs further apart never flips applies to false
    rng = np.random.default_rng(5)
    blob1 = rng.uniform(0, 0.3, (8, 2))
    blob2 = rng.uniform(0, 0.3, (8, 2))
    prev_applies = False
    for gap in (0.5, 2.0, 10.0, 100.0):
        pts = np.vstack([blob1, blob2 + [gap, 0.0]])
        cloud = PointCloud(pts)
        mapper = build_mapper(cloud, FilterSpec("coordinate", 2, 0.5), FixedCutoff(gap / 2))
        report = corollary_check(cloud, mapper, diagrams_of(cloud, mapper), 1)
        if prev_applies:
            assert report.applies
        prev_applies = report.applies
    assert prev_applies
