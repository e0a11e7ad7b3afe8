"""Separation checks that decide whether the interleaving certificate applies.

A cover with every pair of elements separated by more than the largest
lifespan/death time in the per-simplex diagrams admits a quantified bound:
the nerve's persistent homology in dimension n is within 2(n+1) times that
scale of the data's, and within 2(d+1) times it across all dimensions for
data in R^d.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import InputError, PointCloud
from .mapper import MapperStructure
from .persistence import PersistenceDiagram


@dataclass(frozen=True)
class SeparationReport:
    pairwise_sep: dict  # (i, j) with i < j -> min cross-difference distance
    epsilon_sep: float
    epsilon_death: float
    epsilon_required: float
    applies: bool
    failure_reasons: tuple
    nerve_dim: int
    ambient_dim: int
    interleaving_bound: float | None
    bounds_per_dim: tuple  # 2(k+1) * eps_required for k = 0..nerve_dim
    global_bound: float  # 2(d+1) * eps_required

    def to_json_obj(self) -> dict:
        return {
            "pairwise_sep": [
                {"pair": list(k), "distance": (None if math.isinf(v) else v)}
                for k, v in sorted(self.pairwise_sep.items())
            ],
            "epsilon_sep": None if math.isinf(self.epsilon_sep) else self.epsilon_sep,
            "epsilon_death": self.epsilon_death,
            "epsilon_required": self.epsilon_required,
            "applies": self.applies,
            "failure_reasons": list(self.failure_reasons),
            "nerve_dim": self.nerve_dim,
            "ambient_dim": self.ambient_dim,
            "interleaving_bound": self.interleaving_bound,
            "bounds_per_dim": list(self.bounds_per_dim),
            "global_bound": self.global_bound,
        }


def pairwise_separation(cloud: PointCloud, cover: MapperStructure) -> dict:
    """Minimum distance between U_i minus U_j and U_j minus U_i, per pair.

    Pairs where either difference is empty (nested elements) are unconstrained
    and reported as +inf.
    """
    elements = [set(e) for e in cover.cover_elements]
    if len(elements) < 2:
        raise InputError("need at least 2 cover elements")
    pts = cloud.points
    out: dict = {}
    for i in range(len(elements)):
        for j in range(i + 1, len(elements)):
            only_i = sorted(elements[i] - elements[j])
            only_j = sorted(elements[j] - elements[i])
            if not only_i or not only_j:
                out[(i, j)] = math.inf
                continue
            a = pts[np.asarray(only_i, dtype=np.intp)]
            b = pts[np.asarray(only_j, dtype=np.intp)]
            d2 = np.zeros((len(only_i), len(only_j)))
            for k in range(pts.shape[1]):
                diff = a[:, k, None] - b[None, :, k]
                d2 += diff * diff
            out[(i, j)] = float(np.sqrt(d2.min()))
    return out


def corollary_check(
    cloud: PointCloud,
    cover: MapperStructure,
    diagrams: dict,
    nerve_dim: int,
) -> SeparationReport:
    """Evaluate the three certificate conditions and the implied bound.

    diagrams maps every nerve simplex to the persistence diagram of its
    member points. The required scale is the maximum of finite lifespans and
    finite death times over all those diagrams; the certificate applies when
    the cover separation strictly exceeds it and each diagram keeps exactly
    one surviving component.
    """
    for simplex in cover.nerve:
        if simplex not in diagrams:
            raise InputError(f"missing diagram for simplex {simplex}")

    eps_death = 0.0
    eps_required = 0.0
    component_violations = []
    for simplex, diagram in sorted(diagrams.items()):
        if not isinstance(diagram, PersistenceDiagram):
            raise InputError(f"diagram for {simplex} has wrong type")
        for bar in diagram.bars:
            if bar.is_infinite:
                continue
            eps_death = max(eps_death, bar.death)
            eps_required = max(eps_required, bar.death, bar.lifespan)
        if diagram.n_infinite(0) != 1:
            component_violations.append(simplex)

    pairwise = pairwise_separation(cloud, cover) if len(cover.cover_elements) >= 2 else {}
    eps_sep = min(pairwise.values()) if pairwise else math.inf

    reasons = []
    if not (eps_sep > eps_required):
        reasons.append("separation")
    if component_violations:
        reasons.append("component count")
    applies = not reasons

    bounds_per_dim = tuple(2.0 * (k + 1) * eps_required for k in range(nerve_dim + 1))
    global_bound = 2.0 * (cloud.dim + 1) * eps_required
    bound = 2.0 * (nerve_dim + 1) * eps_required if applies else None
    return SeparationReport(
        pairwise_sep=pairwise,
        epsilon_sep=eps_sep,
        epsilon_death=eps_death,
        epsilon_required=eps_required,
        applies=applies,
        failure_reasons=tuple(reasons),
        nerve_dim=nerve_dim,
        ambient_dim=cloud.dim,
        interleaving_bound=bound,
        bounds_per_dim=bounds_per_dim,
        global_bound=global_bound,
    )
