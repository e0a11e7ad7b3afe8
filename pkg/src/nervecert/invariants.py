"""Scalar diagram invariants and the data-versus-simulations table.

Infinite bars are excluded throughout (reduced homology: the surviving
component carries no acyclicity information). A missing value is represented
by None and stays None through every transform; downstream statistics drop
None rows instead of zero-filling them, since zeros would deflate the null
distribution.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

from .persistence import PersistenceDiagram

KIND_MAX_DIFF = "max_diff"
KIND_MAX_RATIO = "max_ratio"


@dataclass(frozen=True)
class InvariantValue:
    hom_dim: int
    kind: str
    value: float | None
    reason: str | None = None


def max_difference(diagram: PersistenceDiagram, hom_dim: int) -> InvariantValue:
    """Largest finite bar length d - b in the given dimension, or None."""
    finite = diagram.finite_in_dim(hom_dim)
    if not finite:
        return InvariantValue(hom_dim, KIND_MAX_DIFF, None, "no finite bars")
    return InvariantValue(hom_dim, KIND_MAX_DIFF, max(b.lifespan for b in finite))


def max_ratio(diagram: PersistenceDiagram, hom_dim: int) -> InvariantValue:
    """Largest finite bar ratio d / b; undefined in dimension 0 (births are 0)."""
    if hom_dim == 0:
        return InvariantValue(hom_dim, KIND_MAX_RATIO, None, "undefined in dimension 0")
    finite = [b for b in diagram.finite_in_dim(hom_dim) if b.birth > 0]
    if not finite:
        return InvariantValue(hom_dim, KIND_MAX_RATIO, None, "no finite bars")
    return InvariantValue(hom_dim, KIND_MAX_RATIO, max(b.death / b.birth for b in finite))


def invariant_of(diagram: PersistenceDiagram, hom_dim: int, kind: str) -> InvariantValue:
    if kind == KIND_MAX_DIFF:
        return max_difference(diagram, hom_dim)
    if kind == KIND_MAX_RATIO:
        return max_ratio(diagram, hom_dim)
    raise ValueError(f"unknown invariant kind {kind!r}")


def log_transform(value: float | None) -> float | None:
    """Natural log; None propagates, nonpositive values become None."""
    if value is None:
        return None
    if value <= 0.0:
        warnings.warn(f"log transform undefined for {value}; treating as missing")
        return None
    return math.log(value)


@dataclass
class InvariantRow:
    """One (simplex, homological dimension) row: data value plus its null draws."""

    simplex: tuple
    hom_dim: int
    data_value: float | None
    sim_values: list  # length N-1, entries float or None

    def defined_sims(self) -> list:
        return [v for v in self.sim_values if v is not None]


@dataclass
class InvariantTable:
    kind: str
    rows: list = field(default_factory=list)

    def __post_init__(self):
        counts = {len(r.sim_values) for r in self.rows}
        if len(counts) > 1:
            raise ValueError(f"rows have differing simulation counts: {sorted(counts)}")

    @property
    def n_sims(self) -> int:
        return len(self.rows[0].sim_values) if self.rows else 0

    def add(self, row: InvariantRow):
        if self.rows and len(row.sim_values) != self.n_sims:
            raise ValueError("row simulation count does not match table")
        self.rows.append(row)

    def to_csv(self) -> str:
        lines = ["simplex,hom_dim,source,value"]
        for row in self.rows:
            name = " ".join(map(str, row.simplex))
            val = "" if row.data_value is None else repr(row.data_value)
            lines.append(f"{name},{row.hom_dim},data,{val}")
            for j, v in enumerate(row.sim_values):
                sval = "" if v is None else repr(v)
                lines.append(f"{name},{row.hom_dim},sim_{j},{sval}")
        return "\n".join(lines) + "\n"
