"""Simulation study: generators, the precomputed invariant store, and the
level/power/goodness-of-fit experiments.

Experiments never recompute persistence: they draw from a store of
precomputed invariants, matching box shape and point count between a data
cloud and its simulated nulls. The store is a pair of append-only CSVs
written cloud by cloud, so consecutive rows of one group belong to one
cloud.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import Box, InputError, PointCloud, RngSpec
from .invariants import KIND_MAX_DIFF, KIND_MAX_RATIO, InvariantRow, InvariantTable
from .nullmodel import cloud_invariants_all_dims, sample_null
from .stattests import (
    METHOD_GLOBAL_HISTEQ,
    METHOD_GLOBAL_LOGZ,
    METHOD_GLOBAL_Z,
    METHOD_LOG_NORMAL,
    METHOD_NORMAL,
    METHOD_QUANTILE_T,
    GLOBAL_METHODS,
    fwer_adjusted_pvalues,
    global_test,
    normal_test,
    quantile_t_test,
)

DEFAULT_BOX_SIDES = (0.1, 1.0, 10.0)
DEFAULT_POINT_COUNTS = (10, 50, 100)
# Rips diagrams of circles below ~100 points carry little usable signal at
# these noise levels, so planted circles use the largest desk-scale count
DEFAULT_CIRCLE_POINT_COUNTS = (100,)
DEFAULT_SIGMAS = (0.1, 0.25)
DEFAULT_ALPHAS = (0.1, 0.05, 0.01)
TABLE_METHODS = (
    METHOD_NORMAL,
    METHOD_LOG_NORMAL,
    METHOD_QUANTILE_T,
    METHOD_GLOBAL_Z,
    METHOD_GLOBAL_LOGZ,
    METHOD_GLOBAL_HISTEQ,
)


def sample_noisy_circle(n: int, sigma: float, stream: np.random.Generator) -> PointCloud:
    """Uniform angles on the radius-0.5 circle centered in the unit square,
    plus isotropic Gaussian noise of standard deviation sigma."""
    if n < 1:
        raise InputError("n must be >= 1")
    theta = stream.uniform(0.0, 2.0 * np.pi, n)
    pts = np.column_stack([0.5 + 0.5 * np.cos(theta), 0.5 + 0.5 * np.sin(theta)])
    if sigma > 0:
        pts = pts + stream.normal(0.0, sigma, (n, 2))
    return PointCloud(pts)


def fit_to_unit_box(cloud: PointCloud) -> PointCloud:
    """Affinely rescale each axis so the bounding box is exactly the unit box.

    The planted-signal experiments store circle invariants on this scale so
    they are comparable with unit-box null draws; degenerate axes collapse
    to 0.
    """
    pts = cloud.points
    lo = pts.min(axis=0)
    widths = pts.max(axis=0) - lo
    widths = np.where(widths > 0, widths, 1.0)
    return PointCloud((pts - lo) / widths)


def sample_tubes(n: int = 250, stream: np.random.Generator | None = None) -> PointCloud:
    """Two diagonal segments crossed with a circle: (t, +-t, cos a, sin a)."""
    if n < 1:
        raise InputError("n must be >= 1")
    if stream is None:
        stream = RngSpec(0).stream(0)
    t = stream.uniform(0.0, 1.0, n)
    sign = np.where(stream.random(n) < 0.5, 1.0, -1.0)
    theta = stream.uniform(0.0, 2.0 * np.pi, n)
    return PointCloud(np.column_stack([t, sign * t, np.cos(theta), np.sin(theta)]))


def tubes_box_report(cloud: PointCloud) -> dict:
    """Observed bounding-box side lengths versus the (2, 2, 1, 1) the write-up
    states; any mismatch is reported, not reconciled."""
    widths = cloud.points.max(axis=0) - cloud.points.min(axis=0)
    stated = (2.0, 2.0, 1.0, 1.0)
    matches = len(widths) == 4 and all(
        abs(w - s) <= 0.15 for w, s in zip(sorted(widths), sorted(stated))
    )
    return {
        "observed_widths": [float(w) for w in widths],
        "stated_widths": list(stated),
        "matches_stated": bool(matches),
    }


# ---------------------------------------------------------------------------
# invariant store

STORE_KINDS = ((0, KIND_MAX_DIFF), (1, KIND_MAX_DIFF), (1, KIND_MAX_RATIO))


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


def _store_task(args):
    kind, params, master_seed, count, budget = args
    rng = RngSpec(master_seed)
    rows = []
    if kind == "null":
        bx, by, n = params
        box = Box(np.array([0.0, 0.0]), np.array([bx, by]))
        for i in range(count):
            stream = rng.labeled_stream(f"store:null:{bx}:{by}:{n}:{i}")
            cloud = sample_null(box, n, stream)
            inv = cloud_invariants_all_dims(cloud, 1, budget)
            rows.append([_fmt(inv[key]) for key in STORE_KINDS])
    else:
        sigma, n = params
        for i in range(count):
            stream = rng.labeled_stream(f"store:circle:{sigma}:{n}:{i}")
            cloud = fit_to_unit_box(sample_noisy_circle(n, sigma, stream))
            inv = cloud_invariants_all_dims(cloud, 1, budget)
            rows.append([_fmt(inv[key]) for key in STORE_KINDS])
    return kind, params, rows


def build_store(
    out_dir,
    count_per_group: int,
    master_seed: int,
    point_counts=DEFAULT_POINT_COUNTS,
    box_sides=DEFAULT_BOX_SIDES,
    sigmas=DEFAULT_SIGMAS,
    circle_point_counts=DEFAULT_CIRCLE_POINT_COUNTS,
    budget: int = 2_000_000,
    workers: int = 0,
) -> dict:
    """Write null.csv and circle.csv under out_dir; returns group counts."""
    os.makedirs(out_dir, exist_ok=True)
    workers = workers if workers > 0 else (os.cpu_count() or 1)
    tasks = []
    for bx in box_sides:
        for by in box_sides:
            for n in point_counts:
                tasks.append(("null", (float(bx), float(by), int(n)), master_seed,
                              count_per_group, budget))
    for sigma in sigmas:
        for n in circle_point_counts:
            tasks.append(("circle", (float(sigma), int(n)), master_seed,
                          count_per_group, budget))
    if workers <= 1:
        results = [_store_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_store_task, tasks, chunksize=1))

    null_path = os.path.join(out_dir, "null.csv")
    circle_path = os.path.join(out_dir, "circle.csv")
    counts = {}
    with open(null_path, "w", encoding="utf-8") as nf, open(
        circle_path, "w", encoding="utf-8"
    ) as cf:
        nf.write("box_x,box_y,n_points,hom_dim,kind,value\n")
        cf.write("sigma,n_points,hom_dim,kind,value\n")
        for kind, params, rows in results:
            counts[(kind,) + params] = len(rows)
            for row in rows:
                for (hd, kd), val in zip(STORE_KINDS, row):
                    if kind == "null":
                        bx, by, n = params
                        nf.write(f"{bx},{by},{n},{hd},{kd},{val}\n")
                    else:
                        sigma, n = params
                        cf.write(f"{sigma},{n},{hd},{kd},{val}\n")
    return counts


class InvariantStore:
    """Grouped access to precomputed invariants.

    null groups are keyed (box_x, box_y, n_points); circle groups
    ("circle", sigma, n_points). Each group holds one row per cloud and one
    column per (hom_dim, kind), NaN marking undefined values.
    """

    def __init__(self, groups: dict):
        self.groups = groups

    @classmethod
    def load(cls, store_dir) -> "InvariantStore":
        groups: dict = {}

        def ingest(path, key_of):
            if not os.path.exists(path):
                return
            with open(path, "r", encoding="utf-8") as fh:
                header = fh.readline()
                assert header  # header row is fixed by build_store
                pending: dict = {}
                pending_key = None
                for line in fh:
                    parts = line.rstrip("\n").split(",")
                    key = key_of(parts)
                    hd, kd = int(parts[-3]), parts[-2]
                    val = float(parts[-1]) if parts[-1] != "" else np.nan
                    if pending_key != key or (hd, kd) in pending:
                        if pending_key is not None:
                            groups.setdefault(pending_key, []).append(pending)
                        pending, pending_key = {}, key
                    pending[(hd, kd)] = val
                if pending_key is not None:
                    groups.setdefault(pending_key, []).append(pending)

        ingest(
            os.path.join(store_dir, "null.csv"),
            lambda p: (float(p[0]), float(p[1]), int(p[2])),
        )
        ingest(
            os.path.join(store_dir, "circle.csv"),
            lambda p: ("circle", float(p[0]), int(p[1])),
        )
        arrays = {}
        for key, clouds in groups.items():
            cols = {}
            for hd, kd in STORE_KINDS:
                cols[(hd, kd)] = np.array(
                    [c.get((hd, kd), np.nan) for c in clouds], dtype=float
                )
            arrays[key] = cols
        return cls(arrays)

    def null_group_keys(self) -> list:
        return sorted(k for k in self.groups if k[0] != "circle")

    def circle_group_keys(self) -> list:
        return sorted((k for k in self.groups if k[0] == "circle"), key=str)

    def size(self, key) -> int:
        return len(next(iter(self.groups[key].values())))

    def draw(self, key, count: int, stream: np.random.Generator) -> dict:
        """count clouds with replacement; dict (hom_dim, kind) -> values."""
        cols = self.groups[key]
        idx = stream.integers(0, self.size(key), size=count)
        return {hk: cols[hk][idx] for hk in cols}


def _to_optional_list(arr) -> list:
    return [None if np.isnan(v) else float(v) for v in np.atleast_1d(arr)]


@dataclass(frozen=True)
class ExperimentConfig:
    n_trials: int = 200
    n_sims: int = 99
    k_min: int = 2
    k_max: int = 50
    alphas: tuple = DEFAULT_ALPHAS
    master_seed: int = 20260808
    fwer: str = "hochberg"


@dataclass
class RateTable:
    """Rejection counts per (method, alpha)."""

    alphas: tuple
    counts: dict = field(default_factory=dict)
    n_trials: int = 0

    def record(self, method: str, alpha: float, rejected: bool):
        key = (method, alpha)
        hits, total = self.counts.get(key, (0, 0))
        self.counts[key] = (hits + (1 if rejected else 0), total + 1)

    def rate(self, method: str, alpha: float) -> float:
        hits, total = self.counts[(method, alpha)]
        return hits / total if total else float("nan")

    def to_csv(self, scenario: str) -> str:
        lines = ["scenario,alpha," + ",".join(TABLE_METHODS)]
        for alpha in self.alphas:
            cells = [f"{self.rate(m, alpha):.4f}" for m in TABLE_METHODS]
            lines.append(f"{scenario},{alpha}," + ",".join(cells))
        return "\n".join(lines) + "\n"


def _run_trial_methods(
    rows: list,
    config: ExperimentConfig,
    table_out: RateTable,
):
    """rows: list of dicts with data/sims/batch2/batch3 per (row index, dim)."""
    inv_table = InvariantTable(kind=KIND_MAX_DIFF)
    quantile_ps = []
    normal_ps = []
    lognormal_ps = []
    for i, row in enumerate(rows):
        for hd in (0, 1):
            data_v = row["data"][hd]
            sims_v = row["sims"][hd]
            inv_table.add(
                InvariantRow(simplex=(i,), hom_dim=hd, data_value=data_v, sim_values=sims_v)
            )
            if data_v is None:
                continue
            try:
                normal_ps.append(normal_test(data_v, sims_v)["p"])
            except InputError:
                pass
            try:
                lognormal_ps.append(normal_test(data_v, sims_v, use_log=True)["p"])
            except InputError:
                pass
            try:
                res = quantile_t_test(data_v, sims_v, row["batch2"][hd], row["batch3"][hd])
                if res["p"] is not None:
                    quantile_ps.append(res["p"])
            except InputError:
                pass

    family = {
        METHOD_NORMAL: normal_ps,
        METHOD_LOG_NORMAL: lognormal_ps,
        METHOD_QUANTILE_T: quantile_ps,
    }
    for method, ps in family.items():
        adjusted = fwer_adjusted_pvalues(ps, config.fwer) if ps else []
        best = min(adjusted) if adjusted else 1.0
        for alpha in config.alphas:
            table_out.record(method, alpha, best <= alpha)
    for method, std_kind in GLOBAL_METHODS.items():
        try:
            result = global_test(inv_table, std_kind, min(config.alphas))
            p = result.p_value
        except InputError:
            p = 1.0
        for alpha in config.alphas:
            table_out.record(method, alpha, p <= alpha)


def _draw_row(store: InvariantStore, key, n_sims: int, stream, with_batches: bool) -> dict:
    data = store.draw(key, 1, stream)
    sims = store.draw(key, n_sims, stream)
    row = {
        "data": {hd: _to_optional_list(data[(hd, KIND_MAX_DIFF)])[0] for hd in (0, 1)},
        "sims": {hd: _to_optional_list(sims[(hd, KIND_MAX_DIFF)]) for hd in (0, 1)},
    }
    if with_batches:
        b2 = store.draw(key, n_sims + 1, stream)
        b3 = store.draw(key, n_sims + 1, stream)
        row["batch2"] = {hd: _to_optional_list(b2[(hd, KIND_MAX_DIFF)]) for hd in (0, 1)}
        row["batch3"] = {hd: _to_optional_list(b3[(hd, KIND_MAX_DIFF)]) for hd in (0, 1)}
    return row


def level_experiment(config: ExperimentConfig, store: InvariantStore) -> RateTable:
    """Null rejection rates per method and alpha over config.n_trials trials."""
    keys = store.null_group_keys()
    if not keys:
        raise InputError("store has no null groups")
    need = config.n_sims + 1
    for key in keys:
        if store.size(key) < need:
            raise InputError(
                f"store group {key} has {store.size(key)} clouds; need >= {need}"
            )
    rng = RngSpec(config.master_seed)
    table = RateTable(alphas=config.alphas)
    for trial in range(config.n_trials):
        stream = rng.labeled_stream(f"level:{trial}")
        k = int(stream.integers(config.k_min, config.k_max + 1))
        rows = []
        for _ in range(k):
            key = keys[int(stream.integers(0, len(keys)))]
            rows.append(_draw_row(store, key, config.n_sims, stream, True))
        _run_trial_methods(rows, config, table)
    table.n_trials = config.n_trials
    return table


def power_experiment(
    config: ExperimentConfig, store: InvariantStore, sigma: float
) -> RateTable:
    """One planted noisy-circle cloud among null clouds, per trial."""
    keys = store.null_group_keys()
    circle_keys = [k for k in store.circle_group_keys() if abs(k[1] - sigma) < 1e-12]
    if not circle_keys:
        raise InputError(f"store has no circle groups at sigma={sigma}")
    rng = RngSpec(config.master_seed)
    table = RateTable(alphas=config.alphas)
    for trial in range(config.n_trials):
        stream = rng.labeled_stream(f"power:{sigma}:{trial}")
        circle_key = circle_keys[int(stream.integers(0, len(circle_keys)))]
        n_match = circle_key[2]
        null_match = (1.0, 1.0, n_match)
        if null_match not in store.groups:
            raise InputError(f"store lacks the matched null group {null_match}")
        circle_data = store.draw(circle_key, 1, stream)
        sims = store.draw(null_match, config.n_sims, stream)
        row = {
            "data": {hd: _to_optional_list(circle_data[(hd, KIND_MAX_DIFF)])[0] for hd in (0, 1)},
            "sims": {hd: _to_optional_list(sims[(hd, KIND_MAX_DIFF)]) for hd in (0, 1)},
        }
        b2 = store.draw(null_match, config.n_sims + 1, stream)
        b3 = store.draw(null_match, config.n_sims + 1, stream)
        row["batch2"] = {hd: _to_optional_list(b2[(hd, KIND_MAX_DIFF)]) for hd in (0, 1)}
        row["batch3"] = {hd: _to_optional_list(b3[(hd, KIND_MAX_DIFF)]) for hd in (0, 1)}
        rows = [row]
        k_nulls = int(stream.integers(1, config.k_max))
        for _ in range(k_nulls):
            key = keys[int(stream.integers(0, len(keys)))]
            rows.append(_draw_row(store, key, config.n_sims, stream, True))
        _run_trial_methods(rows, config, table)
    table.n_trials = config.n_trials
    return table


def t1_validation(
    n_samples: int,
    store: InvariantStore,
    master_seed: int = 20260808,
    n_sims: int = 99,
) -> dict:
    """Draws of the quantile-ratio statistic on null data, dimensions 0 and 1.

    Returns per-dimension T samples plus QQ pairs (central 80%) for T and 2T
    against the Cauchy distribution, and mirrored draws with the two order-
    statistic batches swapped.
    """
    if n_samples < 100:
        raise InputError("n_samples must be >= 100")
    keys = store.null_group_keys()
    rng = RngSpec(master_seed)
    samples: dict = {0: [], 1: []}
    swapped: dict = {0: [], 1: []}
    draw = 0
    while len(samples[0]) < n_samples or len(samples[1]) < n_samples:
        stream = rng.labeled_stream(f"t1:{draw}")
        draw += 1
        key = keys[int(stream.integers(0, len(keys)))]
        row = _draw_row(store, key, n_sims, stream, True)
        for hd in (0, 1):
            if len(samples[hd]) >= n_samples:
                continue
            if row["data"][hd] is None:
                continue
            try:
                res = quantile_t_test(row["data"][hd], row["sims"][hd],
                                      row["batch2"][hd], row["batch3"][hd])
                res_swap = quantile_t_test(row["data"][hd], row["sims"][hd],
                                           row["batch3"][hd], row["batch2"][hd])
            except InputError:
                continue
            if res["p"] is None or res_swap["p"] is None:
                continue
            samples[hd].append(res["t"])
            swapped[hd].append(res_swap["t"])
        if draw > 50 * n_samples:
            raise InputError("store too sparse to collect the requested samples")

    def qq_pairs(values):
        vals = np.sort(np.asarray(values))
        n = len(vals)
        q = (np.arange(n) + 0.5) / n
        keep = (q >= 0.1) & (q <= 0.9)  # prune heavy tails for readability
        theo = np.tan(np.pi * (q[keep] - 0.5))
        return np.column_stack([theo, vals[keep]])

    out = {}
    for hd in (0, 1):
        t_vals = np.asarray(samples[hd])
        out[hd] = {
            "t": t_vals,
            "t_swapped": np.asarray(swapped[hd]),
            "qq_t": qq_pairs(t_vals),
            "qq_2t": qq_pairs(2.0 * t_vals),
        }
    return out
