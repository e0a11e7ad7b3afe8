import math

import numpy as np
import pytest

from nervecert.core import PointCloud
from nervecert.invariants import (
    InvariantRow,
    InvariantTable,
    log_transform,
    max_difference,
    max_ratio,
)
from nervecert.persistence import PersistenceBar, PersistenceDiagram, compute_persistence, full_cap


def diagram_from(bars):
    return PersistenceDiagram(
        bars=tuple(PersistenceBar(*b) for b in bars), max_dim=2, max_radius=10.0
    )


def test_max_difference_single_bar():
    d = diagram_from([(1, 0.5, 0.9)])
    assert max_difference(d, 1).value == pytest.approx(0.4)


def test_max_difference_reduced_homology_empty():
    d = diagram_from([(0, 0.0, math.inf)])
    assert max_difference(d, 0).value is None


def test_max_difference_unit_square():
    cloud = PointCloud(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]))
    d = compute_persistence(cloud, 1, full_cap(cloud))
    assert max_difference(d, 1).value == pytest.approx(math.sqrt(2) / 2 - 0.5, abs=1e-12)


def test_max_ratio_simple():
    assert max_ratio(diagram_from([(1, 0.5, 1.0)]), 1).value == pytest.approx(2.0)


def test_max_ratio_dim0_undefined():
    result = max_ratio(diagram_from([(0, 0.0, 1.0)]), 0)
    assert result.value is None
    assert "dimension 0" in result.reason


def test_max_ratio_picks_max():
    d = diagram_from([(1, 0.2, 0.3), (1, 0.1, 0.4)])
    assert max_ratio(d, 1).value == pytest.approx(4.0)


def test_log_transform_basics():
    assert log_transform(1.0) == 0.0
    assert log_transform(math.e) == pytest.approx(1.0)
    assert log_transform(None) is None


def test_log_transform_nonpositive_warns():
    with pytest.warns(UserWarning):
        assert log_transform(0.0) is None
    with pytest.warns(UserWarning):
        assert log_transform(-3.0) is None


def test_max_difference_positively_homogeneous():
    rng = np.random.default_rng(0)
    for _ in range(20):
        bars = [(1, float(b), float(b + rng.uniform(0.01, 2))) for b in rng.uniform(0, 1, 5)]
        d = diagram_from(bars)
        c = float(rng.uniform(0.1, 7))
        scaled = diagram_from([(k, c * b, c * dd) for k, b, dd in bars])
        assert max_difference(scaled, 1).value == pytest.approx(
            c * max_difference(d, 1).value
        )


def test_max_ratio_scale_invariant():
    rng = np.random.default_rng(1)
    bars = [(1, float(b), float(b + rng.uniform(0.01, 2))) for b in rng.uniform(0.1, 1, 5)]
    d = diagram_from(bars)
    scaled = diagram_from([(k, 3.7 * b, 3.7 * dd) for k, b, dd in bars])
    assert max_ratio(scaled, 1).value == pytest.approx(max_ratio(d, 1).value)


def test_table_rejects_mismatched_sim_counts():
    table = InvariantTable(kind="max_diff")
    table.add(InvariantRow((0,), 0, 1.0, [0.5, 0.6]))
    with pytest.raises(ValueError):
        table.add(InvariantRow((1,), 0, 1.0, [0.5]))


def test_table_csv_includes_none_as_empty():
    table = InvariantTable(kind="max_diff")
    table.add(InvariantRow((0,), 1, None, [0.5, None]))
    csv = table.to_csv()
    lines = csv.strip().splitlines()
    assert lines[0] == "simplex,hom_dim,source,value"
    assert lines[1] == "0,1,data,"
    assert lines[3] == "0,1,sim_1,"
