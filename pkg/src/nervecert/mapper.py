"""Mapper construction: interval covers, per-preimage clustering, and the nerve.

Filters are one-dimensional (a coordinate or user-supplied per-point values).
The filter range is covered by equal-length overlapping intervals, each
preimage is split by single-linkage clustering, and the nerve records every
set of cover elements with common points.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .core import InputError, PointCloud, distance_matrix


@dataclass(frozen=True)
class FilterSpec:
    """One-dimensional filter plus cover parameters."""

    kind: str  # "coordinate" or "custom"
    num_intervals: int
    overlap: float
    coordinate: int = 0
    values: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("coordinate", "custom"):
            raise InputError(f"unknown filter kind {self.kind!r}")
        if self.num_intervals < 1:
            raise InputError("num_intervals must be >= 1")
        if not (0.0 < self.overlap < 1.0):
            raise InputError("overlap must be in (0, 1)")
        if self.kind == "custom":
            if self.values is None:
                raise InputError("custom filter needs values")
            vals = np.asarray(self.values, dtype=np.float64)
            vals.setflags(write=False)
            object.__setattr__(self, "values", vals)

    def evaluate(self, cloud: PointCloud) -> np.ndarray:
        if self.kind == "coordinate":
            if not (0 <= self.coordinate < cloud.dim):
                raise InputError(
                    f"coordinate {self.coordinate} out of range for dimension {cloud.dim}"
                )
            return cloud.points[:, self.coordinate]
        if len(self.values) != len(cloud):
            raise InputError("custom filter length does not match point count")
        return self.values


@dataclass(frozen=True)
class MapperStructure:
    """Cover elements, the nerve, and the point set under every simplex."""

    cover_elements: tuple  # tuple of sorted point-index tuples
    interval_of: tuple  # source interval index per cover element
    nerve: tuple  # simplices as sorted tuples of cover-element indices
    member_points: dict  # simplex -> sorted point-index tuple
    nerve_dim_cap: int

    @property
    def nerve_dim(self) -> int:
        return max((len(s) - 1 for s in self.nerve), default=0)

    def vertices(self) -> list:
        return [s for s in self.nerve if len(s) == 1]

    def edges(self) -> list:
        return [s for s in self.nerve if len(s) == 2]

    def simplex_points(self, simplex) -> tuple:
        return self.member_points[tuple(simplex)]


def interval_cover(values: np.ndarray, num_intervals: int, overlap: float) -> list:
    """Equal-length intervals covering [min, max] with pairwise overlap fraction g.

    Interval length solves L = R / (n - (n-1)g); starts step by L(1-g).
    """
    if num_intervals < 1:
        raise InputError("num_intervals must be >= 1")
    if not (0.0 < overlap < 1.0):
        raise InputError("overlap must be in (0, 1)")
    vals = np.asarray(values, dtype=np.float64)
    lo, hi = float(vals.min()), float(vals.max())
    span = hi - lo
    if span == 0.0:
        warnings.warn("all filter values equal; cover degenerates to one interval")
        return [(lo, hi)]
    n, g = num_intervals, overlap
    length = span / (n - (n - 1) * g)
    step = length * (1.0 - g)
    intervals = []
    for i in range(n):
        start = lo + i * step
        end = start + length
        if i == n - 1:
            end = max(end, hi)  # guard the cover property against rounding
        intervals.append((start, end))
    return intervals


def _single_linkage_heights(dist: np.ndarray) -> np.ndarray:
    """Merge heights (ascending) of single-linkage clustering = MST edge weights."""
    n = dist.shape[0]
    if n <= 1:
        return np.zeros(0, dtype=np.float64)
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    best = dist[0].copy()
    heights = np.empty(n - 1, dtype=np.float64)
    for i in range(n - 1):
        best_masked = np.where(in_tree, np.inf, best)
        j = int(np.argmin(best_masked))
        heights[i] = best_masked[j]
        in_tree[j] = True
        np.minimum(best, dist[j], out=best)
    heights.sort()
    return heights


def _cut_components(dist: np.ndarray, cutoff: float) -> list:
    """Connected components of the graph with edges strictly below cutoff."""
    n = dist.shape[0]
    labels = -np.ones(n, dtype=np.intp)
    comp = 0
    adj = dist < cutoff
    np.fill_diagonal(adj, False)
    for start in range(n):
        if labels[start] >= 0:
            continue
        stack = [start]
        labels[start] = comp
        while stack:
            cur = stack.pop()
            for nb in np.nonzero(adj[cur])[0]:
                if labels[nb] < 0:
                    labels[nb] = comp
                    stack.append(int(nb))
        comp += 1
    return [np.nonzero(labels == c)[0] for c in range(comp)]


@dataclass(frozen=True)
class FixedCutoff:
    """Merge clusters closer than a user-chosen distance."""

    epsilon: float

    def cutoff(self, heights: np.ndarray, diameter: float) -> float:
        return self.epsilon


@dataclass(frozen=True)
class HistogramGapCutoff:
    """Cut single linkage at the first empty bin of the merge-height histogram.

    Mirrors the reference Mapper implementations: heights plus the diameter
    are binned between the smallest height and the diameter, and the cutoff
    is the midpoint of the first empty bin. No gap means one cluster.
    """

    num_bins: int = 10

    def cutoff(self, heights: np.ndarray, diameter: float) -> float:
        if len(heights) == 0 or diameter <= 0.0:
            return np.inf
        lo = float(heights[0])
        if diameter <= lo:
            return np.inf
        counts, edges = np.histogram(
            np.append(heights, diameter), bins=self.num_bins, range=(lo, diameter)
        )
        empty = np.nonzero(counts == 0)[0]
        if len(empty) == 0:
            return np.inf
        return float((edges[empty[0]] + edges[empty[0] + 1]) / 2.0)


def cluster_preimage(cloud: PointCloud, member_indices, cutoff_rule) -> list:
    """Split one preimage into single-linkage clusters under the cutoff rule.

    Returns sorted index arrays (ascending by smallest member).
    """
    idx = np.asarray(sorted(member_indices), dtype=np.intp)
    if len(idx) == 0:
        raise InputError("member_indices must be nonempty")
    if len(idx) == 1:
        return [idx]
    sub = cloud.points[idx]
    dist = distance_matrix(sub)
    heights = _single_linkage_heights(dist)
    cutoff = cutoff_rule.cutoff(heights, float(dist.max()))
    comps = _cut_components(dist, cutoff)
    clusters = [idx[c] for c in comps]
    clusters.sort(key=lambda c: int(c[0]))
    return clusters


def build_mapper(
    cloud: PointCloud,
    filter_spec: FilterSpec,
    cutoff_rule=None,
    nerve_dim_cap: int | None = None,
) -> MapperStructure:
    """Cover, cluster, and take the nerve.

    Cover elements are ordered by (interval index, smallest member index);
    empty interval preimages are skipped. The nerve keeps every simplex of
    cover elements with a common point, up to the dimension cap (by default
    the ambient dimension or the largest observed point multiplicity minus
    one, whichever is smaller).
    """
    if cutoff_rule is None:
        cutoff_rule = HistogramGapCutoff()
    values = filter_spec.evaluate(cloud)
    intervals = interval_cover(values, filter_spec.num_intervals, filter_spec.overlap)

    cover_elements = []
    interval_of = []
    for i, (start, end) in enumerate(intervals):
        members = np.nonzero((values >= start) & (values <= end))[0]
        if len(members) == 0:
            continue
        for cluster in cluster_preimage(cloud, members, cutoff_rule):
            cover_elements.append(tuple(int(x) for x in cluster))
            interval_of.append(i)

    point_membership = [[] for _ in range(len(cloud))]
    for ei, element in enumerate(cover_elements):
        for p in element:
            point_membership[p].append(ei)

    if nerve_dim_cap is None:
        # a value can land in at most ceil(1/(1-g)) consecutive intervals,
        # so with a 1-d filter the nerve cannot exceed that dimension
        stacking = int(np.ceil(1.0 / (1.0 - filter_spec.overlap)))
        cap = min(cloud.dim, stacking - 1, filter_spec.num_intervals - 1)
        cap = max(cap, 0)
    else:
        cap = max(int(nerve_dim_cap), 0)

    member_points: dict = {}
    for ei, element in enumerate(cover_elements):
        member_points[(ei,)] = element
    for membership in point_membership:
        if len(membership) < 2:
            continue
        for size in range(2, min(len(membership), cap + 1) + 1):
            for simplex in combinations(membership, size):
                member_points.setdefault(simplex, None)
    for simplex in list(member_points):
        if member_points[simplex] is None:
            common = set(cover_elements[simplex[0]])
            for ei in simplex[1:]:
                common &= set(cover_elements[ei])
            member_points[simplex] = tuple(sorted(common))

    nerve = sorted(member_points, key=lambda s: (len(s), s))
    return MapperStructure(
        cover_elements=tuple(cover_elements),
        interval_of=tuple(interval_of),
        nerve=tuple(nerve),
        member_points=member_points,
        nerve_dim_cap=cap,
    )


def nerve_to_dot(mapper: MapperStructure) -> str:
    """Graph layout input: vertices labeled interval:cluster, sized by members."""
    lines = ["graph nerve {", "  node [shape=circle];"]
    cluster_counter: dict = {}
    labels = []
    for ei in range(len(mapper.cover_elements)):
        interval = mapper.interval_of[ei]
        k = cluster_counter.get(interval, 0)
        cluster_counter[interval] = k + 1
        labels.append(f"{interval}:{k}")
    for ei, element in enumerate(mapper.cover_elements):
        size = 0.3 + 0.12 * np.sqrt(len(element))
        lines.append(
            f'  n{ei} [label="{labels[ei]}" width={size:.3f} '
            f'tooltip="{len(element)} points"];'
        )
    for simplex in mapper.nerve:
        if len(simplex) == 2:
            lines.append(f"  n{simplex[0]} -- n{simplex[1]};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def mapper_to_json_obj(mapper: MapperStructure) -> dict:
    return {
        "cover_elements": [list(e) for e in mapper.cover_elements],
        "interval_of": list(mapper.interval_of),
        "simplices": [list(s) for s in mapper.nerve],
        "member_points": {
            ",".join(map(str, s)): list(mapper.member_points[s]) for s in mapper.nerve
        },
        "nerve_dim_cap": mapper.nerve_dim_cap,
    }
