"""Shared domain types: point clouds, boxes, and seeded random streams."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


class InputError(ValueError):
    """Raised when an operation receives structurally invalid input."""


class ResourceError(RuntimeError):
    """Raised when a computation would exceed a configured resource budget."""


@dataclass(frozen=True)
class PointCloud:
    """A finite set of points in R^d, stored as an immutable (n, d) array."""

    points: np.ndarray
    dim: int = field(init=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2:
            raise InputError(f"points must be a 2-d array, got shape {pts.shape}")
        if pts.shape[0] < 1:
            raise InputError("a point cloud needs at least one point")
        if pts.shape[1] < 1:
            raise InputError("ambient dimension must be >= 1")
        if not np.all(np.isfinite(pts)):
            raise InputError("points must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "dim", pts.shape[1])

    def __len__(self) -> int:
        return self.points.shape[0]

    def subset(self, indices) -> "PointCloud":
        return PointCloud(self.points[np.asarray(sorted(indices), dtype=np.intp)])

    def scaled(self, factor: float) -> "PointCloud":
        return PointCloud(self.points * float(factor))

    def diameter(self) -> float:
        return float(distance_matrix(self.points).max(initial=0.0))


@dataclass(frozen=True)
class Box:
    """An axis-aligned box; zero-width axes are allowed."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=np.float64)
        hi = np.asarray(self.upper, dtype=np.float64)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise InputError("lower/upper must be 1-d vectors of equal length")
        if np.any(lo > hi):
            raise InputError("box has lower > upper on some axis")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, points: np.ndarray) -> bool:
        pts = np.asarray(points, dtype=np.float64)
        return bool(np.all(pts >= self.lower) and np.all(pts <= self.upper))


def _fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


@dataclass(frozen=True)
class RngSpec:
    """Master seed plus a counter-based stream derivation.

    Streams with the same (master_seed, index-or-label) always replay the
    same sample sequence, independent of creation order, so simulations can
    be farmed out to workers without affecting results.
    """

    master_seed: int

    def __post_init__(self):
        if not (0 <= int(self.master_seed) < 2**64):
            raise InputError("master_seed must fit in 64 unsigned bits")
        object.__setattr__(self, "master_seed", int(self.master_seed))

    def stream(self, index: int) -> np.random.Generator:
        return np.random.Generator(
            np.random.Philox(key=[self.master_seed, int(index) & 0xFFFFFFFFFFFFFFFF])
        )

    def labeled_stream(self, label: str) -> np.random.Generator:
        return self.stream(_fnv1a64(label.encode("utf-8")))


def euclidean_distance(a, b) -> float:
    """L2 distance between two points of equal dimension.

    Squared differences are accumulated coordinate by coordinate so the
    result is bit-identical to distance_matrix entries.
    """
    pa = np.asarray(a, dtype=np.float64)
    pb = np.asarray(b, dtype=np.float64)
    if pa.shape != pb.shape:
        raise InputError(f"dimension mismatch: {pa.shape} vs {pb.shape}")
    d2 = 0.0
    for k in range(pa.shape[0]):
        diff = float(pa[k]) - float(pb[k])
        d2 += diff * diff
    return float(np.sqrt(d2))


def distance_matrix(points: np.ndarray) -> np.ndarray:
    """Dense symmetric matrix of pairwise L2 distances.

    Accumulates per coordinate in axis order; reproducible to the bit across
    callers, which downstream exact-equality checks rely on.
    """
    pts = np.asarray(points, dtype=np.float64)
    n = pts.shape[0]
    d2 = np.zeros((n, n), dtype=np.float64)
    for k in range(pts.shape[1]):
        diff = pts[:, k, None] - pts[None, :, k]
        d2 += diff * diff
    d = np.sqrt(d2)
    np.fill_diagonal(d, 0.0)
    return d


def unbiased_bounding_box(cloud: PointCloud) -> Box:
    """Per-axis unbiased estimate of the box a uniform sample came from.

    With N sample coordinates the estimates are (N*min - max)/(N-1) and
    (N*max - min)/(N-1); the sample range is inflated by (N+1)/(N-1).
    """
    n = len(cloud)
    if n < 2:
        raise InputError("bounding-box estimator needs at least 2 points")
    mins = cloud.points.min(axis=0)
    maxs = cloud.points.max(axis=0)
    lower = (n * mins - maxs) / (n - 1)
    upper = (n * maxs - mins) / (n - 1)
    return Box(lower, upper)


def load_points_csv(path) -> PointCloud:
    """Read one point per row; a non-numeric first row is treated as a header."""
    with open(path, "r", encoding="utf-8") as fh:
        rows = [line.strip() for line in fh if line.strip()]
    if not rows:
        raise InputError(f"no data rows in {path}")
    parsed = []
    for i, row in enumerate(rows):
        cells = [c.strip() for c in row.split(",")]
        try:
            parsed.append([float(c) for c in cells])
        except ValueError:
            if i == 0:
                continue
            raise InputError(f"non-numeric value on row {i + 1} of {path}")
    if not parsed:
        raise InputError(f"no numeric rows in {path}")
    widths = {len(r) for r in parsed}
    if len(widths) != 1:
        raise InputError(f"rows of unequal width in {path}: {sorted(widths)}")
    return PointCloud(np.array(parsed, dtype=np.float64))


def load_points_json(path) -> PointCloud:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, list) or not data:
        raise InputError(f"{path}: expected a non-empty JSON array of arrays")
    return PointCloud(np.array(data, dtype=np.float64))


def load_points(path) -> PointCloud:
    path = str(path)
    if path.endswith(".json"):
        return load_points_json(path)
    return load_points_csv(path)
