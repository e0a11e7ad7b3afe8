"""Vietoris-Rips filtrations and persistent homology over Z/2.

Filtration convention: a simplex enters at half its diameter, so scale
parameters here are radii. Vertices enter at 0 and an edge of length L at
L/2. Homology is computed one dimension at a time by reducing coboundary
columns in reverse filtration order, with three standard shortcuts that do
not change the pairing:

* dimension 0 is done with union-find instead of matrix columns;
* columns whose simplex was claimed as a pivot one dimension down are
  skipped (clearing);
* columns are kept as arbitrary-precision bitmasks and only materialized
  when two columns actually collide, so most columns cost one dict probe.

The naive full-matrix reduction used to validate this module lives with the
tests, not here, so the two routes share no code.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import InputError, PointCloud, ResourceError, distance_matrix

INFINITE = math.inf

DEFAULT_SIMPLEX_BUDGET = 5_000_000


@dataclass(frozen=True)
class PersistenceBar:
    hom_dim: int
    birth: float
    death: float  # math.inf marks a class that never dies below the cap

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.death)

    @property
    def lifespan(self) -> float:
        return self.death - self.birth


@dataclass(frozen=True)
class PersistenceDiagram:
    bars: tuple
    max_dim: int
    max_radius: float

    def in_dim(self, k: int) -> list:
        return [b for b in self.bars if b.hom_dim == k]

    def finite_in_dim(self, k: int) -> list:
        return [b for b in self.bars if b.hom_dim == k and not b.is_infinite]

    def n_infinite(self, k: int) -> int:
        return sum(1 for b in self.bars if b.hom_dim == k and b.is_infinite)

    def to_json_obj(self) -> list:
        return [
            {"dim": b.hom_dim, "birth": b.birth, "death": None if b.is_infinite else b.death}
            for b in self.bars
        ]


@dataclass
class Filtration:
    """Per-dimension simplex arrays, each sorted by (value, vertex order)."""

    n_points: int
    max_radius: float
    verts: list = field(default_factory=list)  # verts[k]: (m_k, k+1) intp array
    vals: list = field(default_factory=list)  # vals[k]: (m_k,) float array

    def simplices(self):
        """All simplices ordered by (value, dimension, vertex order)."""
        entries = []
        for k in range(len(self.verts)):
            for row, v in zip(self.verts[k], self.vals[k]):
                entries.append((tuple(int(x) for x in row), float(v)))
        entries.sort(key=lambda e: (e[1], len(e[0]), e[0]))
        return entries

    @property
    def size(self) -> int:
        return sum(len(v) for v in self.vals)


def _sorted_by_value_then_vertices(verts: np.ndarray, vals: np.ndarray):
    keys = tuple(verts[:, c] for c in reversed(range(verts.shape[1]))) + (vals,)
    order = np.lexsort(keys)
    return verts[order], vals[order]


def _budget_check(total: int, budget: int, dim: int):
    if total > budget:
        raise ResourceError(f"simplex budget of {budget} exceeded at dimension {dim}")


def rips_filtration(
    cloud: PointCloud,
    max_dim: int,
    max_radius: float,
    simplex_budget: int = DEFAULT_SIMPLEX_BUDGET,
) -> Filtration:
    """Enumerate simplices up to dimension max_dim+1 with diameter <= 2*max_radius."""
    if max_dim < 0:
        raise InputError("max_dim must be >= 0")
    if not (max_radius > 0):
        raise InputError("max_radius must be > 0")
    pts = cloud.points
    n = len(cloud)
    top_dim = max_dim + 1
    dist = distance_matrix(pts)
    adj = dist <= 2.0 * max_radius
    np.fill_diagonal(adj, False)

    filt = Filtration(n_points=n, max_radius=float(max_radius))
    filt.verts.append(np.arange(n, dtype=np.intp)[:, None])
    filt.vals.append(np.zeros(n, dtype=np.float64))
    total = n
    _budget_check(total, simplex_budget, 0)

    iu, ju = np.triu_indices(n, 1)
    keep = adj[iu, ju]
    ev = np.column_stack([iu[keep], ju[keep]]).astype(np.intp)
    eval_ = dist[iu[keep], ju[keep]] / 2.0
    ev, eval_ = _sorted_by_value_then_vertices(ev, eval_)
    filt.verts.append(ev)
    filt.vals.append(eval_)
    total += len(eval_)
    _budget_check(total, simplex_budget, 1)

    for k in range(2, top_dim + 1):
        prev_v, prev_val = filt.verts[k - 1], filt.vals[k - 1]
        if len(prev_val) == 0:
            verts = np.zeros((0, k + 1), dtype=np.intp)
            vals = np.zeros(0, dtype=np.float64)
        elif k == 2 and n <= 400:
            # one broadcast pass instead of a per-edge loop
            tri = adj[:, :, None] & adj[:, None, :] & adj[None, :, :]
            ia, ja, ka = np.nonzero(tri)
            keep3 = (ia < ja) & (ja < ka)
            ia, ja, ka = ia[keep3], ja[keep3], ka[keep3]
            total += len(ia)
            _budget_check(total, simplex_budget, 2)
            verts = np.column_stack([ia, ja, ka]).astype(np.intp)
            vals = np.maximum(np.maximum(dist[ia, ja], dist[ia, ka]), dist[ja, ka]) / 2.0
            verts, vals = _sorted_by_value_then_vertices(verts, vals)
        else:
            out_v, out_val = [], []
            for row, v in zip(prev_v, prev_val):
                mask = adj[row[0]]
                for idx in row[1:]:
                    mask = mask & adj[idx]
                cands = np.nonzero(mask)[0]
                cands = cands[cands > row[-1]]
                if len(cands) == 0:
                    continue
                total += len(cands)
                _budget_check(total, simplex_budget, k)
                new_vals = np.maximum(dist[cands[:, None], row].max(axis=1) / 2.0, v)
                ext = np.empty((len(cands), k + 1), dtype=np.intp)
                ext[:, :k] = row
                ext[:, k] = cands
                out_v.append(ext)
                out_val.append(new_vals)
            if out_v:
                verts = np.vstack(out_v)
                vals = np.concatenate(out_val)
                verts, vals = _sorted_by_value_then_vertices(verts, vals)
            else:
                verts = np.zeros((0, k + 1), dtype=np.intp)
                vals = np.zeros(0, dtype=np.float64)
        filt.verts.append(verts)
        filt.vals.append(vals)
    return filt


class _UnionFind:
    __slots__ = ("parent",)

    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


def _encode(verts: np.ndarray, n: int) -> np.ndarray:
    """Injective integer key for sorted vertex tuples (row-wise)."""
    enc = verts[:, 0].astype(np.int64)
    for c in range(1, verts.shape[1]):
        enc = enc * n + verts[:, c]
    return enc


def _column_bits(positions: np.ndarray, n_rows: int) -> int:
    """Bitmask with bit (n_rows-1-p) set per row position p.

    Reversing the index makes the earliest cofacet the highest bit, so the
    reduction pivot is just bit_length()-1.
    """
    buf = bytearray((n_rows + 7) >> 3)
    top = n_rows - 1
    for p in positions.tolist():
        r = top - p
        buf[r >> 3] |= 1 << (r & 7)
    return int.from_bytes(buf, "little")


def _coboundary_table(col_verts: np.ndarray, row_verts: np.ndarray, n: int):
    """Row positions of every column's cofacets, grouped per column.

    Built by walking the rows once: each (k+1)-simplex contributes itself to
    the column of each of its k-faces.
    """
    m_cols = len(col_verts)
    m_rows = len(row_verts)
    if m_rows == 0:
        starts = np.zeros(m_cols + 1, dtype=np.int64)
        return starts, np.zeros(0, dtype=np.int64)
    col_enc = _encode(col_verts, n)
    perm = np.argsort(col_enc, kind="stable")
    enc_sorted = col_enc[perm]
    width = row_verts.shape[1]
    col_ids = np.empty(m_rows * width, dtype=np.int64)
    row_pos = np.empty(m_rows * width, dtype=np.int64)
    rows_arange = np.arange(m_rows, dtype=np.int64)
    for j in range(width):
        face = np.delete(row_verts, j, axis=1)
        enc_f = _encode(face, n)
        col_ids[j * m_rows : (j + 1) * m_rows] = perm[np.searchsorted(enc_sorted, enc_f)]
        row_pos[j * m_rows : (j + 1) * m_rows] = rows_arange
    order = np.argsort(col_ids, kind="stable")
    col_sorted = col_ids[order]
    row_sorted = row_pos[order]
    starts = np.searchsorted(col_sorted, np.arange(m_cols + 1, dtype=np.int64))
    return starts, row_sorted


def _reduce_dimension(
    col_order: np.ndarray,
    starts: np.ndarray,
    row_sorted: np.ndarray,
    m_rows: int,
):
    """Reduce one dimension's coboundary columns in reverse filtration order.

    Returns (pairs, essential): pairs maps column index -> killing row
    position; essential lists columns whose class never dies.
    """
    pairs: dict[int, int] = {}
    essential: list[int] = []
    top = m_rows - 1
    owner_raw: dict[int, np.ndarray] = {}  # pivot -> unmaterialized positions
    owner_int: dict[int, int] = {}  # pivot -> bitmask, built on first collision
    for ci in col_order[::-1]:
        ci = int(ci)
        positions = row_sorted[starts[ci] : starts[ci + 1]]
        if len(positions) == 0:
            essential.append(ci)
            continue
        low = top - int(positions.min())
        if low not in owner_raw:
            owner_raw[low] = positions
            pairs[ci] = top - low
            continue
        col = _column_bits(positions, m_rows)
        while True:
            other = owner_int.get(low)
            if other is None:
                raw = owner_raw.get(low)
                if raw is None:
                    break
                other = _column_bits(raw, m_rows)
                owner_int[low] = other
            col ^= other
            if col == 0:
                break
            low = col.bit_length() - 1
        if col == 0:
            essential.append(ci)
        else:
            owner_int[low] = col
            owner_raw[low] = None  # claimed; bitmask form is authoritative
            pairs[ci] = top - low
    return pairs, essential


def compute_persistence(
    cloud: PointCloud,
    max_dim: int,
    max_radius: float,
    simplex_budget: int = DEFAULT_SIMPLEX_BUDGET,
) -> PersistenceDiagram:
    """Persistence diagram of the Vietoris-Rips filtration, dimensions 0..max_dim.

    Zero-length bars are discarded; classes alive at max_radius come out with
    an infinite death.
    """
    filt = rips_filtration(cloud, max_dim, max_radius, simplex_budget)
    n = filt.n_points
    bars = []

    # dimension 0: union-find over edges in filtration order
    uf = _UnionFind(n)
    ev, evals = filt.verts[1], filt.vals[1]
    merged = np.zeros(len(evals), dtype=bool)
    for i in range(len(evals)):
        if uf.union(int(ev[i, 0]), int(ev[i, 1])):
            merged[i] = True
            if evals[i] > 0.0:
                bars.append(PersistenceBar(0, 0.0, float(evals[i])))
    n_components = len({uf.find(i) for i in range(n)})
    bars.extend(PersistenceBar(0, 0.0, INFINITE) for _ in range(n_components))

    # cleared columns for dimension 1 are the merge (death) edges
    cleared = np.nonzero(merged)[0]

    for k in range(1, max_dim + 1):
        col_verts, col_vals = filt.verts[k], filt.vals[k]
        col_order = np.arange(len(col_vals), dtype=np.intp)
        if len(cleared):
            keep = np.ones(len(col_vals), dtype=bool)
            keep[cleared] = False
            col_order = col_order[keep]
        row_verts, row_vals = filt.verts[k + 1], filt.vals[k + 1]
        starts, row_sorted = _coboundary_table(col_verts, row_verts, n)
        pairs, essential = _reduce_dimension(col_order, starts, row_sorted, len(row_vals))
        for ci, rpos in pairs.items():
            birth = float(col_vals[ci])
            death = float(row_vals[rpos])
            if death > birth:
                bars.append(PersistenceBar(k, birth, death))
        bars.extend(PersistenceBar(k, float(col_vals[ci]), INFINITE) for ci in essential)
        cleared = np.fromiter(sorted(pairs.values()), dtype=np.intp, count=len(pairs))

    bars.sort(key=lambda b: (b.hom_dim, b.birth, b.death))
    return PersistenceDiagram(bars=tuple(bars), max_dim=max_dim, max_radius=float(max_radius))


def full_cap(cloud: PointCloud) -> float:
    """Radius at which the Rips complex is the full simplex (half the diameter)."""
    d = cloud.diameter()
    return d / 2.0 if d > 0 else 1.0
