"""Null model: uniform draws in the unbiased bounding box of a point set.

Uniform box samples are the reference for "no topological signal": their
diagrams carry only short bars. Each nerve simplex gets its own box,
estimated from its member points, and a deterministic stream keyed by the
simplex and the draw index, so batches are reproducible no matter how the
work is scheduled.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Box, InputError, PointCloud, RngSpec, unbiased_bounding_box
from .invariants import KIND_MAX_DIFF, KIND_MAX_RATIO, invariant_of
from .mapper import MapperStructure
from .persistence import compute_persistence, full_cap


@dataclass(frozen=True)
class NullBatch:
    simplex: tuple
    n_points: int
    box: Box
    sims: tuple  # N-1 point clouds
    seed_stream: int


def sample_null(box: Box, n_points: int, stream: np.random.Generator) -> PointCloud:
    """n_points i.i.d. uniform points in the box; zero-width axes stay constant."""
    if n_points < 1:
        raise InputError("n_points must be >= 1")
    u = stream.random((n_points, len(box.lower)))
    return PointCloud(box.lower + u * (box.upper - box.lower))


def simplex_stream_label(simplex, j: int) -> str:
    return "null:" + ",".join(map(str, simplex)) + f":{j}"


def build_null_batches(
    cloud: PointCloud,
    mapper: MapperStructure,
    n_total: int,
    rng: RngSpec,
) -> tuple[dict, dict]:
    """One batch of N-1 matched uniform clouds per nerve simplex.

    Returns (batches, skipped): simplices with fewer than 2 member points
    cannot seed the box estimator and are recorded in skipped with a reason.
    """
    if n_total < 2:
        raise InputError("need N >= 2 (at least one simulation)")
    batches: dict = {}
    skipped: dict = {}
    for simplex in mapper.nerve:
        members = mapper.member_points[simplex]
        if len(members) < 2:
            skipped[simplex] = "fewer than 2 points; box estimator undefined"
            continue
        sub = cloud.subset(members)
        box = unbiased_bounding_box(sub)
        sims = tuple(
            sample_null(box, len(members), rng.labeled_stream(simplex_stream_label(simplex, j)))
            for j in range(n_total - 1)
        )
        batches[simplex] = NullBatch(
            simplex=simplex,
            n_points=len(members),
            box=box,
            sims=sims,
            seed_stream=rng.master_seed,
        )
    return batches, skipped


def cloud_invariant(
    cloud: PointCloud,
    hom_dim: int,
    kind: str = KIND_MAX_DIFF,
    max_dim: int | None = None,
    simplex_budget: int | None = None,
):
    """Invariant of one cloud's Rips diagram, computed at the full radius cap."""
    from .persistence import DEFAULT_SIMPLEX_BUDGET

    budget = DEFAULT_SIMPLEX_BUDGET if simplex_budget is None else simplex_budget
    md = hom_dim if max_dim is None else max_dim
    diagram = compute_persistence(cloud, md, full_cap(cloud), budget)
    return invariant_of(diagram, hom_dim, kind).value


def cloud_invariants_all_dims(
    cloud: PointCloud,
    max_dim: int,
    simplex_budget: int,
) -> dict:
    """(hom_dim, kind) -> value for one cloud, sharing a single diagram."""
    diagram = compute_persistence(cloud, max_dim, full_cap(cloud), simplex_budget)
    out = {}
    for k in range(max_dim + 1):
        out[(k, KIND_MAX_DIFF)] = invariant_of(diagram, k, KIND_MAX_DIFF).value
        if k >= 1:
            out[(k, KIND_MAX_RATIO)] = invariant_of(diagram, k, KIND_MAX_RATIO).value
    return out
