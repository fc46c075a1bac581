"""End-to-end command line runs against small configs."""

import csv
import json
import math

import numpy as np
import pytest

from ier_spectra.cli import main
from ier_spectra.config import config_hash, load_config, make_ensemble
from ier_spectra.ensembles import sample_adjacency, scale_matrix, to_dense
from ier_spectra.kernels import Kernel, WeightModel
from ier_spectra.moments import limiting_moment
from ier_spectra.spectra import eigenvalues_symmetric
from ier_spectra.stieltjes import default_solver_config, stieltjes_sparse

HOMOGENEOUS = {
    "kernel": {"variant": "constant", "c": 1.0},
    "weights": {"variant": "discrete", "atoms": [1.0], "probs": [1.0]},
}


def write_config(tmp_path, payload, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def read_rows(path):
    with open(path, newline="") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln]
    assert lines[0].startswith("# config_sha256=")
    return lines[0], lines[1], list(csv.reader(lines[2:]))


def test_partitions_command(tmp_path):
    cfg_path = write_config(tmp_path, {"partitions": {"k": 4, "family": "all"}})
    out = tmp_path / "out"
    assert main(["partitions", "--config", cfg_path, "--out", str(out)]) == 0
    stamp, header, rows = read_rows(out / "partitions.csv")
    assert header == "index,blocks,n_blocks,is_special_symmetric,is_noncrossing_pairing"
    assert len(rows) == 15
    assert sum(int(r[3]) for r in rows) == 3
    assert sum(int(r[4]) for r in rows) == 2
    out2 = tmp_path / "out2"
    assert main(["partitions", "--config", cfg_path, "--out", str(out2)]) == 0
    assert (out / "partitions.csv").read_bytes() == (out2 / "partitions.csv").read_bytes()


def test_partitions_ss_family(tmp_path):
    cfg_path = write_config(tmp_path, {"partitions": {"k": 6, "family": "ss"}})
    out = tmp_path / "out"
    assert main(["partitions", "--config", cfg_path, "--out", str(out)]) == 0
    _, _, rows = read_rows(out / "partitions.csv")
    assert len(rows) == 12
    assert all(r[3] == "1" for r in rows)


def test_partitions_k_out_of_range(tmp_path):
    cfg_path = write_config(tmp_path, {"partitions": {"k": 13, "family": "all"}})
    assert main(["partitions", "--config", cfg_path, "--out", str(tmp_path)]) == 2


def test_partitions_unknown_family(tmp_path):
    cfg_path = write_config(tmp_path, {"partitions": {"k": 4, "family": "prime"}})
    assert main(["partitions", "--config", cfg_path, "--out", str(tmp_path)]) == 2


def test_moments_command(tmp_path):
    cfg_path = write_config(
        tmp_path, {**HOMOGENEOUS, "moments": {"k_max": 6, "lambda": 2.0}}
    )
    out = tmp_path / "out"
    assert main(["moments", "--config", cfg_path, "--out", str(out)]) == 0
    _, header, rows = read_rows(out / "moments.csv")
    assert header == "k,lambda,value,nc2_part,remainder"
    assert len(rows) == 7
    kernel = Kernel.constant(1.0)
    weights = WeightModel.discrete([1.0], [1.0])
    for row in rows:
        k = int(row[0])
        expected = limiting_moment(k, 2.0, kernel, weights).value
        assert float(row[2]) == pytest.approx(expected, abs=1e-12)
    by_k = {int(r[0]): r for r in rows}
    assert float(by_k[4][2]) == pytest.approx(2.5)
    assert float(by_k[4][3]) == pytest.approx(2.0)
    assert float(by_k[4][4]) == pytest.approx(0.5)


def test_moments_resource_limit(tmp_path):
    cfg_path = write_config(
        tmp_path, {**HOMOGENEOUS, "moments": {"k_max": 14, "lambda": 2.0}}
    )
    assert main(["moments", "--config", cfg_path, "--out", str(tmp_path)]) == 4


def test_sample_command(tmp_path):
    payload = {**HOMOGENEOUS, "ensemble": {"variant": "homogeneous", "n": 40,
                                           "lambda": 4.0}}
    cfg_path = write_config(tmp_path, payload)
    out = tmp_path / "out"
    assert main(["sample", "--config", cfg_path, "--out", str(out), "--seed", "5"]) == 0
    meta = json.loads((out / "sample.json").read_text())
    assert meta["n"] == 40
    assert meta["variant"] == "homogeneous"
    assert meta["eps"] == pytest.approx(0.1)
    assert meta["n_eps"] == pytest.approx(4.0)
    assert meta["seed"] == 5
    assert meta["config_sha256"] == config_hash(load_config(cfg_path))
    _, header, rows = read_rows(out / "edges.csv")
    assert header == "i,j"
    ens = make_ensemble(payload["ensemble"], Kernel.constant(1.0),
                        WeightModel.discrete([1.0], [1.0]), seed=5)
    adj = sample_adjacency(ens)
    expected = {tuple(e) for e in adj.edges} | {(i, i) for i in adj.loops}
    assert {(int(r[0]), int(r[1])) for r in rows} == expected
    assert len(rows) == meta["edge_count"] + meta["loop_count"]


def test_spectrum_command(tmp_path):
    payload = {
        **HOMOGENEOUS,
        "ensemble": {"variant": "homogeneous", "n": 60, "lambda": 5.0},
        "spectrum": {"scale": "sparse"},
    }
    cfg_path = write_config(tmp_path, payload)
    out = tmp_path / "out"
    assert main(["spectrum", "--config", cfg_path, "--out", str(out), "--seed", "2"]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["n"] == 60
    assert report["scale_mode"] == "sparse"
    assert report["scale"] == pytest.approx(math.sqrt(5.0))
    _, header, rows = read_rows(out / "eigenvalues.csv")
    got = np.array([float(r[0]) for r in rows])
    ens = make_ensemble(payload["ensemble"], Kernel.constant(1.0),
                        WeightModel.discrete([1.0], [1.0]), seed=2)
    expected = eigenvalues_symmetric(scale_matrix(sample_adjacency(ens), ens, "sparse"))
    assert got == pytest.approx(expected, abs=1e-12)
    assert report["eigenvalue_min"] == pytest.approx(expected[0])
    assert report["eigenvalue_max"] == pytest.approx(expected[-1])
    assert report["moments"]["2"] == pytest.approx(float(np.mean(expected**2)))
    _, _, hist_rows = read_rows(out / "histogram.csv")
    assert sum(int(r[2]) for r in hist_rows) == 60


def test_stieltjes_sparse_command(tmp_path):
    payload = {
        **HOMOGENEOUS,
        "stieltjes": {"route": "sparse", "z": [0.0, 2.0], "lambda": 10.0,
                      "n_u": 64},
    }
    cfg_path = write_config(tmp_path, payload)
    out = tmp_path / "out"
    assert main(["stieltjes", "--config", cfg_path, "--out", str(out)]) == 0
    data = json.loads((out / "stieltjes.json").read_text())
    assert data["route"] == "sparse"
    assert data["lambda"] == 10.0
    assert data["iterations"] > 0
    assert data["residual"] < 1e-10
    assert data["extrapolation_count"] == 0
    cfg = default_solver_config(2j, 10.0, n_u=64)
    direct = stieltjes_sparse(cfg, Kernel.constant(1.0),
                              WeightModel.discrete([1.0], [1.0]))
    assert complex(*data["value"]) == pytest.approx(direct, abs=1e-12)


def test_stieltjes_dense_command(tmp_path):
    payload = {**HOMOGENEOUS, "stieltjes": {"route": "dense", "z": [0.0, 2.0]}}
    cfg_path = write_config(tmp_path, payload)
    out = tmp_path / "out"
    assert main(["stieltjes", "--config", cfg_path, "--out", str(out)]) == 0
    data = json.loads((out / "stieltjes.json").read_text())
    assert data["value"][0] == pytest.approx(0.0, abs=1e-10)
    assert data["value"][1] == pytest.approx(math.sqrt(2.0) - 1.0, abs=1e-8)


def test_stieltjes_no_convergence_exit(tmp_path):
    payload = {
        **HOMOGENEOUS,
        "stieltjes": {"route": "sparse", "z": [0.0, 2.0], "lambda": 10.0,
                      "max_iter": 2, "tol": 1e-14},
    }
    cfg_path = write_config(tmp_path, payload)
    assert main(["stieltjes", "--config", cfg_path, "--out", str(tmp_path)]) == 3


def test_stieltjes_bad_z(tmp_path):
    payload = {**HOMOGENEOUS, "stieltjes": {"route": "dense", "z": [2.0]}}
    cfg_path = write_config(tmp_path, payload)
    assert main(["stieltjes", "--config", cfg_path, "--out", str(tmp_path)]) == 2


def test_density_command(tmp_path):
    payload = {
        **HOMOGENEOUS,
        "density": {"route": "dense", "eta": 0.05, "x_min": -3.0, "x_max": 3.0,
                    "n_x": 61},
    }
    cfg_path = write_config(tmp_path, payload)
    out = tmp_path / "out"
    assert main(["density", "--config", cfg_path, "--out", str(out)]) == 0
    meta = json.loads((out / "density.json").read_text())
    assert meta["route"] == "dense"
    assert meta["n_x"] == 61
    assert 0.9 < meta["mass"] < 1.05
    _, header, rows = read_rows(out / "density.csv")
    assert header == "x,density"
    assert len(rows) == 61
    assert float(rows[0][0]) == -3.0
    assert float(rows[-1][0]) == 3.0
    xs = np.array([float(r[0]) for r in rows])
    dens = np.array([float(r[1]) for r in rows])
    assert np.trapezoid(dens, xs) == pytest.approx(meta["mass"], abs=1e-12)
    mid = dens[np.argmin(np.abs(xs))]
    assert mid == pytest.approx(1.0 / math.pi, abs=5e-2)
    out2 = tmp_path / "out2"
    assert main(["density", "--config", cfg_path, "--out", str(out2)]) == 0
    assert (out / "density.csv").read_bytes() == (out2 / "density.csv").read_bytes()


def test_density_grid_validation(tmp_path):
    bad_grid = {**HOMOGENEOUS, "density": {"route": "dense", "n_x": 1}}
    assert main(["density", "--config", write_config(tmp_path, bad_grid, "a.json"),
                 "--out", str(tmp_path)]) == 2
    bad_route = {**HOMOGENEOUS, "density": {"route": "other"}}
    assert main(["density", "--config", write_config(tmp_path, bad_route, "b.json"),
                 "--out", str(tmp_path)]) == 2


def compare_config(n):
    return {
        "kernel": {"variant": "chung_lu", "support_max": 5.0},
        "weights": {"variant": "discrete", "atoms": [1.0], "probs": [1.0]},
        "ensemble": {"variant": "chung_lu", "n": n, "degrees": "default"},
        "ensemble_b": {"variant": "grg", "n": n, "degrees": "default"},
    }


def test_compare_identical_models(tmp_path):
    payload = compare_config(200)
    payload["ensemble_b"] = dict(payload["ensemble"])
    cfg_path = write_config(tmp_path, payload)
    out = tmp_path / "out"
    assert main(["compare", "--config", cfg_path, "--out", str(out),
                 "--seeds", "0,1"]) == 0
    data = json.loads((out / "compare.json").read_text())
    assert data["seeds"] == [0, 1]
    assert data["violations"] == 0
    for rec in data["per_seed"]:
        assert rec["levy"] == 0.0
        assert rec["hw_bound"] == 0.0
        assert rec["violation"] is False


def test_compare_chung_lu_vs_grg(tmp_path):
    # The expected number of disagreeing edges is N-free, so the averaged
    # bound scales like 1/N; a dozen seeds separate 300 from 900 cleanly.
    seeds = ",".join(str(s) for s in range(12))
    bounds = {}
    for n in (300, 900):
        cfg_path = write_config(tmp_path, compare_config(n), f"cmp{n}.json")
        out = tmp_path / f"out{n}"
        assert main(["compare", "--config", cfg_path, "--out", str(out),
                     "--seeds", seeds]) == 0
        data = json.loads((out / "compare.json").read_text())
        assert data["violations"] == 0
        assert data["mean_levy"] < 0.2
        bounds[n] = data["mean_hw_bound"]
    assert bounds[900] < bounds[300]


def test_compare_workers_agree(tmp_path, monkeypatch):
    cfg_path = write_config(tmp_path, compare_config(150))
    serial = tmp_path / "serial"
    threaded = tmp_path / "threaded"
    assert main(["compare", "--config", cfg_path, "--out", str(serial),
                 "--seeds", "0,1,2"]) == 0
    assert main(["compare", "--config", cfg_path, "--out", str(threaded),
                 "--seeds", "0,1,2", "--workers", "2"]) == 0
    assert (serial / "compare.json").read_bytes() == (
        threaded / "compare.json"
    ).read_bytes()
    monkeypatch.setenv("IER_SPECTRA_THREADS", "abc")
    assert main(["compare", "--config", cfg_path, "--out", str(tmp_path),
                 "--workers", "2"]) == 2


def test_compare_requires_matching_n(tmp_path):
    payload = compare_config(100)
    payload["ensemble_b"]["n"] = 120
    cfg_path = write_config(tmp_path, payload)
    assert main(["compare", "--config", cfg_path, "--out", str(tmp_path)]) == 2


def test_config_error_exits(tmp_path):
    bad_key = write_config(tmp_path, {"mystery": {}}, "bad_key.json")
    assert main(["partitions", "--config", bad_key, "--out", str(tmp_path)]) == 2
    bad_json = tmp_path / "broken.json"
    bad_json.write_text("{oops")
    assert main(["partitions", "--config", str(bad_json), "--out", str(tmp_path)]) == 2
    missing = str(tmp_path / "never.json")
    assert main(["partitions", "--config", missing, "--out", str(tmp_path)]) == 2


def test_unknown_figure_name(tmp_path):
    cfg_path = write_config(tmp_path, {"figure": {"name": "mystery"}})
    assert main(["figure", "--config", cfg_path, "--out", str(tmp_path)]) == 2


def run_figure_cli(tmp_path, name):
    cfg_path = write_config(tmp_path, {"figure": {"name": name}}, f"{name}.json")
    out = tmp_path / name
    assert main(["figure", "--config", cfg_path, "--out", str(out)]) == 0
    return out, json.loads((out / "figure.json").read_text())


def check_histogram(path, n):
    _, header, rows = read_rows(path)
    assert header == "bin_left,bin_right,count"
    assert sum(int(r[2]) for r in rows) == n


def check_overlay(path):
    _, header, rows = read_rows(path)
    assert header == "x,density"
    assert len(rows) == 129
    dens = np.array([float(r[1]) for r in rows])
    assert np.all(dens >= -1e-8)
    assert dens.max() > 0.1


@pytest.mark.slow
@pytest.mark.parametrize("name,lam,bound", [("errg_lam5", 5.0, 0.12),
                                            ("errg_lam10", 10.0, 0.10)])
def test_figure_errg(tmp_path, name, lam, bound):
    out, stats = run_figure_cli(tmp_path, name)
    assert stats["n"] == 10_000
    assert stats["lambda"] == lam
    assert stats["expected_k4"] == pytest.approx(2.0 + 1.0 / lam)
    # Bound frozen from a 16-seed spread measurement of the trace moment
    # at N = 10000 (bias plus four standard deviations).
    assert abs(stats["moment_k4"] - stats["expected_k4"]) < bound
    check_histogram(out / "histogram.csv", 10_000)
    check_overlay(out / "density_overlay.csv")


@pytest.mark.slow
@pytest.mark.parametrize("name", ["irg_lam5", "irg_lam10"])
def test_figure_irg(tmp_path, name):
    out, stats = run_figure_cli(tmp_path, name)
    assert stats["expected_k2"] == pytest.approx(0.344159, abs=1e-5)
    assert abs(stats["moment_k2"] - stats["expected_k2"]) < 0.025
    check_histogram(out / "histogram.csv", 10_000)
    check_overlay(out / "density_overlay.csv")


@pytest.mark.slow
def test_figure_cl_grg_nr(tmp_path):
    out, stats = run_figure_cli(tmp_path, "cl_grg_nr")
    for variant in ("chung_lu", "grg", "norros_riettu"):
        check_histogram(out / f"histogram_{variant}.csv", 10_000)
    assert set(stats["pairwise"]) == {
        "chung_lu_vs_grg", "chung_lu_vs_norros_riettu", "grg_vs_norros_riettu"
    }
    for rec in stats["pairwise"].values():
        assert rec["levy"] < 0.05
        assert rec["levy"] ** 3 <= rec["hw_bound"] + 1e-12
    check_overlay(out / "density_overlay.csv")
