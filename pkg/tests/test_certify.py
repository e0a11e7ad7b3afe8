import json
import subprocess
import sys

import numpy as np
import pytest

from nervecert.certify import CertifyConfig, certify, dataset_fingerprint
from nervecert.core import PointCloud
from nervecert.mapper import FilterSpec


def two_blob_cloud(gap=10.0, seed=1):
    rng = np.random.default_rng(seed)
    blob1 = rng.uniform(0, 0.2, (8, 2))
    blob2 = rng.uniform(0, 0.2, (8, 2)) + [gap, 0.0]
    return PointCloud(np.vstack([blob1, blob2]))


def test_corollary_route_on_separated_blobs():
    cloud = two_blob_cloud()
    cert = certify(cloud, FilterSpec("coordinate", 2, 0.5), CertifyConfig(master_seed=3))
    assert cert.route == "corollary"
    assert cert.status == "certified"
    assert cert.verdict["interleaving_bound"] == pytest.approx(
        2 * (cert.separation.nerve_dim + 1) * cert.separation.epsilon_required
    )
    assert cert.test is None


def test_statistical_route_on_uniform_data():
    rng = np.random.default_rng(7)
    cloud = PointCloud(rng.uniform(0, 1, (60, 2)))
    cert = certify(cloud, FilterSpec("coordinate", 4, 0.5), CertifyConfig(master_seed=5, workers=1))
    assert cert.route == "statistical"
    assert cert.status in ("certified", "obstructed")
    assert cert.test is not None
    assert cert.test.method == "global_logz"


def test_forced_statistical_route_reports_separation():
    cloud = two_blob_cloud()
    cert = certify(
        cloud,
        FilterSpec("coordinate", 2, 0.5),
        CertifyConfig(master_seed=3, route="statistical", workers=1),
    )
    assert cert.route == "statistical"
    assert cert.separation.applies  # still reported even when bypassed
    assert cert.test is not None


def test_forced_corollary_route_inconclusive_when_separation_fails():
    rng = np.random.default_rng(8)
    cloud = PointCloud(rng.uniform(0, 1, (50, 2)))
    cert = certify(
        cloud, FilterSpec("coordinate", 4, 0.5), CertifyConfig(master_seed=2, route="corollary")
    )
    assert cert.status == "inconclusive"
    assert "separation" in cert.verdict["reason"]


def test_obstruction_localization_names_nerve_simplex():
    # a dataset with a hidden circle in every slice
    rng = np.random.default_rng(9)
    theta = rng.uniform(0, 2 * np.pi, 120)
    x = rng.uniform(0, 1, 120)
    cloud = PointCloud(np.column_stack([x, np.cos(theta), np.sin(theta)]))
    cert = certify(cloud, FilterSpec("coordinate", 4, 0.5), CertifyConfig(master_seed=4, workers=1))
    assert cert.status == "obstructed"
    from nervecert.mapper import build_mapper

    mapper = build_mapper(cloud, FilterSpec("coordinate", 4, 0.5))
    nerve = {tuple(s) for s in mapper.nerve}
    for obs in cert.verdict["obstructions"]:
        assert tuple(obs["simplex"]) in nerve
    # the top obstruction outscores every simulated maximum
    top = cert.verdict["obstructions"][0]
    assert top["score"] > max(cert.test.sim_scores)


def test_inconclusive_when_all_simplices_tiny():
    # points so spread out that each cover element is a singleton
    pts = np.array([[float(i), float(i % 3)] for i in range(6)])
    cloud = PointCloud(pts)
    cert = certify(
        cloud,
        FilterSpec("coordinate", 6, 0.1),
        CertifyConfig(master_seed=1, route="statistical", cluster_epsilon=0.01, workers=1),
    )
    assert cert.status == "inconclusive"


def test_certificate_embeds_config_and_seed():
    cloud = two_blob_cloud()
    cert = certify(cloud, FilterSpec("coordinate", 2, 0.5), CertifyConfig(master_seed=123))
    obj = cert.to_json_obj()
    assert obj["config"]["master_seed"] == 123
    assert obj["config"]["method"] == "global_logz"
    assert obj["mapper_params"]["clustering"]["reconstructed_default"] is True
    assert obj["dataset"]["fingerprint"] == dataset_fingerprint(cloud)
    assert obj["tool"]["name"] == "nervecert"


def test_reproducible_bytes():
    rng = np.random.default_rng(11)
    cloud = PointCloud(rng.uniform(0, 1, (40, 2)))
    cfg = CertifyConfig(master_seed=99, workers=2)
    a = certify(cloud, FilterSpec("coordinate", 3, 0.5), cfg)
    b = certify(cloud, FilterSpec("coordinate", 3, 0.5), cfg)
    assert a.to_json_bytes() == b.to_json_bytes()


@pytest.mark.parametrize("method", ["global_z", "global_histeq", "normal", "log_normal",
                                    "generic", "quantile_t"])
def test_all_methods_run_through_certify(method):
    rng = np.random.default_rng(23)
    cloud = PointCloud(rng.uniform(0, 1, (40, 2)))
    cert = certify(
        cloud,
        FilterSpec("coordinate", 3, 0.5),
        CertifyConfig(master_seed=6, method=method, n_sims=19, route="statistical", workers=1),
    )
    assert cert.test is not None and cert.test.method == method
    assert cert.status in ("certified", "obstructed")
    if cert.status == "obstructed":
        assert cert.verdict["obstructions"]


def test_parametric_rejection_localizes_by_adjusted_p():
    # hidden circle in every slice; the parametric normal family must reject
    # and name simplices whose adjusted p clears the level
    rng = np.random.default_rng(29)
    theta = rng.uniform(0, 2 * np.pi, 120)
    cloud = PointCloud(
        np.column_stack([rng.uniform(0, 1, 120), np.cos(theta), np.sin(theta)])
    )
    cert = certify(
        cloud,
        FilterSpec("coordinate", 4, 0.5),
        CertifyConfig(master_seed=8, method="normal", n_sims=19, workers=1),
    )
    assert cert.status == "obstructed"
    assert all("p" in obs for obs in cert.verdict["obstructions"])


def test_corollary_consistency_with_statistical_route():
    # when the interleaving certificate applies, the statistical route should
    # almost always agree (no obstruction) across seeds
    cloud = two_blob_cloud()
    agreements = 0
    for seed in range(40):
        cert = certify(
            cloud,
            FilterSpec("coordinate", 2, 0.5),
            CertifyConfig(master_seed=seed, route="statistical", n_sims=39, workers=1),
        )
        if cert.status == "certified":
            agreements += 1
    assert agreements >= 38


def run_cli(args):
    return subprocess.run(
        [sys.executable, "-m", "nervecert.cli", *args], capture_output=True, text=True
    )


def test_cli_certify_exit_codes_and_outputs(tmp_path):
    rng = np.random.default_rng(13)
    path = tmp_path / "pts.csv"
    np.savetxt(path, rng.uniform(0, 1, (40, 2)), delimiter=",")
    out = tmp_path / "cert.json"
    dot = tmp_path / "nerve.dot"
    svg = tmp_path / "scores.svg"
    proc = run_cli(
        [
            "certify", "--input", str(path), "--filter", "coord:0", "--intervals", "3",
            "--overlap", "0.5", "--sims", "19", "--seed", "7",
            "--out", str(out), "--dot", str(dot), "--score-plot", str(svg),
        ]
    )
    assert proc.returncode in (0, 2), proc.stderr
    payload = json.loads(out.read_text())
    assert payload["route"] in ("corollary", "statistical")
    assert dot.read_text().startswith("graph nerve")
    if payload["route"] == "statistical":
        assert svg.read_text().startswith("<svg")


def test_cli_certify_byte_identical_runs(tmp_path):
    rng = np.random.default_rng(17)
    path = tmp_path / "pts.csv"
    np.savetxt(path, rng.uniform(0, 1, (35, 2)), delimiter=",")
    outs = []
    for name in ("a.json", "b.json"):
        out = tmp_path / name
        proc = run_cli(
            ["certify", "--input", str(path), "--intervals", "3", "--sims", "19",
             "--seed", "21", "--out", str(out)]
        )
        assert proc.returncode in (0, 2, 3), proc.stderr
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_cli_mapper_smoke(tmp_path):
    rng = np.random.default_rng(19)
    path = tmp_path / "pts.csv"
    np.savetxt(path, rng.normal(0, 1, (50, 2)), delimiter=",")
    dot = tmp_path / "m.dot"
    js = tmp_path / "m.json"
    proc = run_cli(["mapper", "--input", str(path), "--intervals", "5",
                    "--dot", str(dot), "--json", str(js)])
    assert proc.returncode == 0, proc.stderr
    assert "cover elements" in proc.stdout
    assert json.loads(js.read_text())["cover_elements"]


def test_cli_error_exit_code(tmp_path):
    proc = run_cli(["certify", "--input", str(tmp_path / "missing.csv")])
    assert proc.returncode == 1
