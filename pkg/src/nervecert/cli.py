"""Command-line interface: certify, mapper, and the simulation study.

Exit codes for certify: 0 certified, 2 obstructed, 3 inconclusive, 1 error.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .certify import CertifyConfig, certify
from .core import InputError, PointCloud, ResourceError, load_points
from .experiments import (
    ExperimentConfig,
    InvariantStore,
    build_store,
    level_experiment,
    power_experiment,
    sample_tubes,
    t1_validation,
    tubes_box_report,
)
from .mapper import FilterSpec, build_mapper, mapper_to_json_obj, nerve_to_dot
from .plots import ecdf_plot_svg, qq_plot_svg, score_plot_svg
from .stattests import cauchy_cdf


def parse_filter(text: str, cloud: PointCloud, intervals: int, overlap: float) -> FilterSpec:
    if text.startswith("coord:"):
        return FilterSpec("coordinate", intervals, overlap, coordinate=int(text.split(":", 1)[1]))
    if text.startswith("file:"):
        path = text.split(":", 1)[1]
        values = np.loadtxt(path, dtype=float, ndmin=1)
        return FilterSpec("custom", intervals, overlap, values=values)
    raise InputError(f"cannot parse filter {text!r}; use coord:K or file:PATH")


def _write(path, data):
    mode = "wb" if isinstance(data, bytes) else "w"
    with open(path, mode) as fh:
        fh.write(data)


def _cmd_certify(args) -> int:
    cloud = load_points(args.input)
    filter_spec = parse_filter(args.filter, cloud, args.intervals, args.overlap)
    config = CertifyConfig(
        alpha=args.alpha,
        n_sims=args.sims,
        method=args.method.replace("-", "_"),
        max_dim=args.max_dim,
        master_seed=args.seed,
        route=args.route,
        cluster_epsilon=args.cluster_epsilon,
        simplex_budget=args.budget,
        workers=args.workers,
    )
    cert = certify(cloud, filter_spec, config)
    payload = cert.to_json_bytes()
    if args.out:
        _write(args.out, payload)
    else:
        sys.stdout.write(payload.decode("utf-8"))
    if args.dot:
        mapper = build_mapper(cloud, filter_spec, cutoff_rule=config.clusterer())
        _write(args.dot, nerve_to_dot(mapper))
    if args.score_plot and cert.test is not None and cert.test.sim_scores:
        data_score = max(e["score_or_p"] for e in cert.test.per_simplex)
        _write(args.score_plot, score_plot_svg(cert.test.sim_scores, data_score))
    status = cert.status
    print(f"verdict: {status}", file=sys.stderr)
    return {"certified": 0, "obstructed": 2, "inconclusive": 3}[status]


def _cmd_mapper(args) -> int:
    cloud = load_points(args.input)
    filter_spec = parse_filter(args.filter, cloud, args.intervals, args.overlap)
    mapper = build_mapper(cloud, filter_spec)
    if args.dot:
        _write(args.dot, nerve_to_dot(mapper))
    if args.json:
        _write(args.json, json.dumps(mapper_to_json_obj(mapper), indent=2) + "\n")
    print(
        f"cover elements: {len(mapper.cover_elements)}; "
        f"nerve: {len(mapper.vertices())} vertices, {len(mapper.edges())} edges"
    )
    return 0


def _cmd_simulate(args) -> int:
    if args.sim_command == "build-store":
        counts = build_store(
            args.out,
            count_per_group=args.count,
            master_seed=args.seed,
            workers=args.workers,
        )
        total = sum(counts.values())
        print(f"store written to {args.out}: {total} clouds in {len(counts)} groups")
        return 0

    store = InvariantStore.load(args.store)
    if args.sim_command == "level":
        config = ExperimentConfig(n_trials=args.trials, master_seed=args.seed)
        table = level_experiment(config, store)
        csv = table.to_csv("null")
    elif args.sim_command == "power":
        config = ExperimentConfig(n_trials=args.trials, master_seed=args.seed)
        table = power_experiment(config, store, sigma=args.sigma)
        csv = table.to_csv(f"sigma={args.sigma}")
    else:  # t1-validate
        result = t1_validation(args.samples, store, master_seed=args.seed)
        lines = ["hom_dim,statistic,theoretical_quantile,empirical_quantile"]
        for hd in (0, 1):
            for name in ("qq_t", "qq_2t"):
                stat = "T" if name == "qq_t" else "2T"
                for theo, emp in result[hd][name]:
                    lines.append(f"{hd},{stat},{theo!r},{emp!r}")
        csv = "\n".join(lines) + "\n"
        if args.plot_dir:
            import os

            os.makedirs(args.plot_dir, exist_ok=True)
            for hd in (0, 1):
                for name, stat in (("qq_t", "T"), ("qq_2t", "2T")):
                    _write(
                        os.path.join(args.plot_dir, f"qq_{stat}_dim{hd}.svg"),
                        qq_plot_svg(result[hd][name], f"{stat} vs T(1), dimension {hd}"),
                    )
                sample = result[hd]["t"] * 2.0
                _write(
                    os.path.join(args.plot_dir, f"ecdf_2T_dim{hd}.svg"),
                    ecdf_plot_svg(sample, cauchy_cdf, f"2T ECDF vs T(1), dimension {hd}",
                                  -8.0, 8.0),
                )
    if args.out:
        _write(args.out, csv)
    else:
        sys.stdout.write(csv)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nervecert", description=__doc__)
    parser.add_argument("--version", action="version", version=f"nervecert {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    cert = sub.add_parser("certify", help="emit a certificate or obstruction report")
    cert.add_argument("--input", required=True)
    cert.add_argument("--filter", default="coord:0", help="coord:K or file:PATH")
    cert.add_argument("--intervals", type=int, default=10)
    cert.add_argument("--overlap", type=float, default=0.5)
    cert.add_argument("--alpha", type=float, default=0.05)
    cert.add_argument("--sims", type=int, default=99)
    cert.add_argument("--method", default="global-logz")
    cert.add_argument("--max-dim", type=int, default=1)
    cert.add_argument("--seed", type=int, default=42)
    cert.add_argument("--route", default="auto", choices=["auto", "corollary", "statistical"])
    cert.add_argument("--cluster-epsilon", type=float, default=None)
    cert.add_argument("--budget", type=int, default=5_000_000)
    cert.add_argument("--workers", type=int, default=0)
    cert.add_argument("--out", default=None)
    cert.add_argument("--dot", default=None)
    cert.add_argument("--score-plot", default=None)
    cert.set_defaults(func=_cmd_certify)

    mp = sub.add_parser("mapper", help="build the cover and nerve only")
    mp.add_argument("--input", required=True)
    mp.add_argument("--filter", default="coord:0")
    mp.add_argument("--intervals", type=int, default=10)
    mp.add_argument("--overlap", type=float, default=0.5)
    mp.add_argument("--dot", default=None)
    mp.add_argument("--json", default=None)
    mp.set_defaults(func=_cmd_mapper)

    sim = sub.add_parser("simulate", help="level/power studies and validation")
    simsub = sim.add_subparsers(dest="sim_command", required=True)
    for name in ("level", "power"):
        p = simsub.add_parser(name)
        p.add_argument("--store", default="data/store")
        p.add_argument("--trials", type=int, default=200)
        p.add_argument("--seed", type=int, default=20260808)
        p.add_argument("--out", default=None)
        if name == "power":
            p.add_argument("--sigma", type=float, default=0.1, choices=None)
        p.set_defaults(func=_cmd_simulate)
    t1 = simsub.add_parser("t1-validate")
    t1.add_argument("--store", default="data/store")
    t1.add_argument("--samples", type=int, default=1000)
    t1.add_argument("--seed", type=int, default=20260808)
    t1.add_argument("--out", default=None)
    t1.add_argument("--plot-dir", default=None)
    t1.set_defaults(func=_cmd_simulate)
    bs = simsub.add_parser("build-store")
    bs.add_argument("--out", default="data/store")
    bs.add_argument("--count", type=int, default=400)
    bs.add_argument("--seed", type=int, default=20260808)
    bs.add_argument("--workers", type=int, default=0)
    bs.set_defaults(func=_cmd_simulate)

    tube = sub.add_parser("tubes", help="write a sample of the crossed-tubes dataset")
    tube.add_argument("--n", type=int, default=250)
    tube.add_argument("--seed", type=int, default=42)
    tube.add_argument("--out", required=True)
    tube.set_defaults(func=_cmd_tubes)
    return parser


def _cmd_tubes(args) -> int:
    from .core import RngSpec

    cloud = sample_tubes(args.n, RngSpec(args.seed).labeled_stream("tubes"))
    rows = "\n".join(",".join(repr(float(x)) for x in row) for row in cloud.points)
    _write(args.out, rows + "\n")
    report = tubes_box_report(cloud)
    print(json.dumps(report))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ResourceError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
