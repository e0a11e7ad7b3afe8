"""Bundled reference data."""
from __future__ import annotations

from importlib import resources

import numpy as np

from .core import PointCloud

IRIS_PETAL_LENGTH_COLUMN = 2


def load_iris() -> PointCloud:
    """The 150-flower Iris measurements (sepal/petal length and width)."""
    text = resources.files("nervecert").joinpath("data/iris.csv").read_text()
    rows = [line.split(",") for line in text.strip().splitlines()[1:]]
    return PointCloud(np.array(rows, dtype=np.float64))
