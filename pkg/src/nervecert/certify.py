"""End-to-end certification: corollary check first, statistical fallback.

The separation certificate is preferred because it is quantified (an explicit
interleaving bound); when separation fails, the configured statistical method
decides, and a rejection is localized to the responsible nerve simplices.
Certificates embed the configuration, seed, and a dataset fingerprint so a
third party can re-run them bit for bit.
"""
from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from . import __version__
from .core import InputError, PointCloud, RngSpec, unbiased_bounding_box
from .invariants import KIND_MAX_DIFF, InvariantRow, InvariantTable, invariant_of
from .mapper import FilterSpec, FixedCutoff, HistogramGapCutoff, MapperStructure, build_mapper
from .nullmodel import sample_null, simplex_stream_label
from .persistence import DEFAULT_SIMPLEX_BUDGET, compute_persistence, full_cap
from .separation import SeparationReport, corollary_check
from .stattests import (
    GLOBAL_METHODS,
    METHOD_GLOBAL_LOGZ,
    METHOD_QUANTILE_T,
    PARAMETRIC_METHODS,
    TestResult,
    global_test,
    parametric_family_test,
)

ROUTE_AUTO = "auto"
ROUTE_COROLLARY = "corollary"
ROUTE_STATISTICAL = "statistical"


@dataclass(frozen=True)
class CertifyConfig:
    alpha: float = 0.05
    n_sims: int = 99  # simulations per simplex; N = n_sims + 1
    method: str = METHOD_GLOBAL_LOGZ
    max_dim: int = 1
    master_seed: int = 42
    invariant: str = KIND_MAX_DIFF
    fwer: str = "hochberg"
    route: str = ROUTE_AUTO
    cluster_epsilon: float | None = None  # None -> histogram-gap heuristic
    nerve_dim_cap: int | None = None
    simplex_budget: int = DEFAULT_SIMPLEX_BUDGET
    workers: int = 0  # 0 -> one per CPU
    double_t: bool = False

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise InputError("alpha must be in (0, 1)")
        if self.n_sims < 1:
            raise InputError("need at least 1 simulation")
        known = set(GLOBAL_METHODS) | set(PARAMETRIC_METHODS)
        if self.method not in known:
            raise InputError(f"unknown method {self.method!r}")
        if self.route not in (ROUTE_AUTO, ROUTE_COROLLARY, ROUTE_STATISTICAL):
            raise InputError(f"unknown route {self.route!r}")

    def clusterer(self):
        if self.cluster_epsilon is not None:
            return FixedCutoff(self.cluster_epsilon)
        return HistogramGapCutoff()

    def clusterer_metadata(self) -> dict:
        if self.cluster_epsilon is not None:
            return {"rule": "fixed", "epsilon": self.cluster_epsilon, "reconstructed_default": False}
        # heuristic reconstruction of the reference implementation's behaviour;
        # flagged so certificate readers know it was not pinned by the input
        return {"rule": "histogram_gap", "bins": 10, "reconstructed_default": True}


@dataclass(frozen=True)
class Certificate:
    fingerprint: str
    n_points: int
    ambient_dim: int
    mapper_params: dict
    config: dict
    mapper_summary: dict
    route: str
    separation: SeparationReport
    test: TestResult | None
    verdict: dict
    skipped_simplices: dict
    tool_version: str = __version__

    @property
    def status(self) -> str:
        return self.verdict["status"]

    def to_json_obj(self) -> dict:
        return {
            "tool": {"name": "nervecert", "version": self.tool_version},
            "dataset": {
                "fingerprint": self.fingerprint,
                "n_points": self.n_points,
                "ambient_dim": self.ambient_dim,
            },
            "mapper_params": self.mapper_params,
            "config": self.config,
            "mapper": self.mapper_summary,
            "route": self.route,
            "separation": self.separation.to_json_obj(),
            "test": None if self.test is None else self.test.to_json_obj(),
            "verdict": self.verdict,
            "skipped_simplices": [
                {"simplex": list(s), "reason": r} for s, r in sorted(self.skipped_simplices.items())
            ],
        }

    def to_json_bytes(self) -> bytes:
        return (
            json.dumps(self.to_json_obj(), sort_keys=True, indent=2, ensure_ascii=False) + "\n"
        ).encode("utf-8")


def dataset_fingerprint(cloud: PointCloud) -> str:
    canon = json.dumps([[repr(float(x)) for x in row] for row in cloud.points])
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _simplex_task(args):
    """Worker: invariants of the matched null draws for one nerve simplex."""
    (simplex, n_points, lower, upper, master_seed, n_sims, max_dim, kind, budget) = args
    from .core import Box

    rng = RngSpec(master_seed)
    box = Box(lower, upper)
    out = []
    for j in range(n_sims):
        stream = rng.labeled_stream(simplex_stream_label(simplex, j))
        sim_cloud = sample_null(box, n_points, stream)
        diagram = compute_persistence(sim_cloud, max_dim, full_cap(sim_cloud), budget)
        out.append(
            {k: invariant_of(diagram, k, kind).value for k in range(max_dim + 1)}
        )
    return simplex, out


def _quantile_batch_task(args):
    """Worker: the two extra order-statistic batches for the quantile test."""
    (simplex, n_points, lower, upper, master_seed, n_batch, max_dim, kind, budget) = args
    from .core import Box

    rng = RngSpec(master_seed)
    box = Box(lower, upper)
    batches = []
    for tag in ("null2", "null3"):
        vals = []
        for j in range(n_batch):
            label = f"{tag}:" + ",".join(map(str, simplex)) + f":{j}"
            sim_cloud = sample_null(box, n_points, rng.labeled_stream(label))
            diagram = compute_persistence(sim_cloud, max_dim, full_cap(sim_cloud), budget)
            vals.append({k: invariant_of(diagram, k, kind).value for k in range(max_dim + 1)})
        batches.append(vals)
    return simplex, batches


def _run_tasks(task_fn, tasks, workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [task_fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task_fn, tasks, chunksize=1))


def simplex_diagrams(cloud: PointCloud, mapper: MapperStructure, config: CertifyConfig) -> dict:
    """Per-simplex diagrams of member points at each set's own full radius cap."""
    diagrams = {}
    for simplex in mapper.nerve:
        sub = cloud.subset(mapper.member_points[simplex])
        diagrams[simplex] = compute_persistence(
            sub, config.max_dim, full_cap(sub), config.simplex_budget
        )
    return diagrams


def build_invariant_table(
    cloud: PointCloud,
    mapper: MapperStructure,
    diagrams: dict,
    config: CertifyConfig,
) -> tuple[InvariantTable, dict, dict]:
    """Data and simulated invariants per (simplex, dimension) row.

    Returns (table, skipped, quantile_batches); simplices with fewer than two
    member points cannot seed the box estimator and are skipped with reasons.
    """
    workers = config.workers if config.workers > 0 else (os.cpu_count() or 1)
    skipped: dict = {}
    tasks = []
    for simplex in mapper.nerve:
        members = mapper.member_points[simplex]
        if len(members) < 2:
            skipped[simplex] = "fewer than 2 points; box estimator undefined"
            continue
        box = unbiased_bounding_box(cloud.subset(members))
        tasks.append(
            (
                simplex,
                len(members),
                box.lower.tolist(),
                box.upper.tolist(),
                config.master_seed,
                config.n_sims,
                config.max_dim,
                config.invariant,
                config.simplex_budget,
            )
        )
    results = dict(_run_tasks(_simplex_task, tasks, workers))

    table = InvariantTable(kind=config.invariant)
    for simplex in mapper.nerve:
        if simplex not in results:
            continue
        sims = results[simplex]
        for k in range(config.max_dim + 1):
            if config.invariant == "max_ratio" and k == 0:
                continue
            data_val = invariant_of(diagrams[simplex], k, config.invariant).value
            table.add(
                InvariantRow(
                    simplex=simplex,
                    hom_dim=k,
                    data_value=data_val,
                    sim_values=[s[k] for s in sims],
                )
            )

    quantile_batches: dict = {}
    if config.method == METHOD_QUANTILE_T:
        qtasks = [
            (t[0], t[1], t[2], t[3], t[4], config.n_sims + 1, t[6], t[7], t[8]) for t in tasks
        ]
        qresults = dict(_run_tasks(_quantile_batch_task, qtasks, workers))
        for simplex, (batch2, batch3) in qresults.items():
            for k in range(config.max_dim + 1):
                quantile_batches[(simplex, k)] = (
                    [b[k] for b in batch2],
                    [b[k] for b in batch3],
                )
    return table, skipped, quantile_batches


def _run_test(table: InvariantTable, config: CertifyConfig, quantile_batches: dict) -> TestResult:
    if config.method in GLOBAL_METHODS:
        return global_test(table, GLOBAL_METHODS[config.method], config.alpha)
    return parametric_family_test(
        table,
        config.method,
        config.alpha,
        fwer_method=config.fwer,
        quantile_batches=quantile_batches,
        double_t=config.double_t,
    )


def localize_obstructions(test: TestResult) -> list:
    """Rows standing strictly above every simulated maximum; at least one."""
    if test.method in GLOBAL_METHODS:
        ceiling = max(test.sim_scores) if test.sim_scores else float("-inf")
        rows = [e for e in test.per_simplex if e["score_or_p"] > ceiling]
        if not rows:
            rows = [max(test.per_simplex, key=lambda e: e["score_or_p"])]
        return [
            {"simplex": list(e["simplex"]), "hom_dim": e["hom_dim"], "score": e["score_or_p"]}
            for e in rows
        ]
    rows = [e for e in test.per_simplex if e.get("adjusted_p", 1.0) <= test.alpha]
    if not rows:
        rows = [min(test.per_simplex, key=lambda e: e["score_or_p"])]
    return [
        {"simplex": list(e["simplex"]), "hom_dim": e["hom_dim"], "p": e["score_or_p"]}
        for e in rows
    ]


def certify(cloud: PointCloud, filter_spec: FilterSpec, config: CertifyConfig) -> Certificate:
    """Build the cover, try the separation certificate, fall back to testing."""
    mapper = build_mapper(
        cloud, filter_spec, cutoff_rule=config.clusterer(), nerve_dim_cap=config.nerve_dim_cap
    )
    diagrams = simplex_diagrams(cloud, mapper, config)
    separation = corollary_check(cloud, mapper, diagrams, mapper.nerve_dim_cap)

    mapper_params = {
        "filter": {
            "kind": filter_spec.kind,
            "coordinate": filter_spec.coordinate if filter_spec.kind == "coordinate" else None,
        },
        "num_intervals": filter_spec.num_intervals,
        "overlap": filter_spec.overlap,
        "clustering": config.clusterer_metadata(),
    }
    config_obj = {
        "alpha": config.alpha,
        "n_sims": config.n_sims,
        "method": config.method,
        "max_dim": config.max_dim,
        "master_seed": config.master_seed,
        "invariant": config.invariant,
        "fwer": config.fwer,
        "route": config.route,
        "nerve_dim_cap": mapper.nerve_dim_cap,
        "simplex_budget": config.simplex_budget,
        "double_t": config.double_t,
    }
    mapper_summary = {
        "n_cover_elements": len(mapper.cover_elements),
        "n_vertices": len(mapper.vertices()),
        "n_edges": len(mapper.edges()),
        "n_simplices": len(mapper.nerve),
        "nerve_dim": mapper.nerve_dim,
        "cover_element_sizes": [len(e) for e in mapper.cover_elements],
    }

    def build(route, test, verdict, skipped):
        return Certificate(
            fingerprint=dataset_fingerprint(cloud),
            n_points=len(cloud),
            ambient_dim=cloud.dim,
            mapper_params=mapper_params,
            config=config_obj,
            mapper_summary=mapper_summary,
            route=route,
            separation=separation,
            test=test,
            verdict=verdict,
            skipped_simplices=skipped,
        )

    corollary_ok = separation.applies
    if config.route == ROUTE_COROLLARY or (config.route == ROUTE_AUTO and corollary_ok):
        if corollary_ok:
            verdict = {
                "status": "certified",
                "basis": "interleaving",
                "interleaving_bound": separation.interleaving_bound,
                "epsilon_required": separation.epsilon_required,
            }
            return build(ROUTE_COROLLARY, None, verdict, {})
        verdict = {
            "status": "inconclusive",
            "reason": "separation conditions fail: " + ", ".join(separation.failure_reasons),
        }
        return build(ROUTE_COROLLARY, None, verdict, {})

    table, skipped, quantile_batches = build_invariant_table(cloud, mapper, diagrams, config)
    if not table.rows:
        verdict = {"status": "inconclusive", "reason": "insufficient points per simplex"}
        return build(ROUTE_STATISTICAL, None, verdict, skipped)
    try:
        test = _run_test(table, config, quantile_batches)
    except InputError as exc:
        verdict = {"status": "inconclusive", "reason": str(exc)}
        return build(ROUTE_STATISTICAL, None, verdict, skipped)

    if test.rejected:
        verdict = {
            "status": "obstructed",
            "p_value": test.p_value,
            "obstructions": localize_obstructions(test),
        }
    else:
        verdict = {"status": "certified", "basis": "statistical", "p_value": test.p_value}
    return build(ROUTE_STATISTICAL, test, verdict, skipped)
