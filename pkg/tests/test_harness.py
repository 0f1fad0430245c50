import csv
import json

import numpy as np
import pytest
from scipy.stats import norm

from locstat import (ConfigurationError, GaussianLevy, NIGLevy, StudyConfig,
                     mise, qq_export, qq_max_gap, run_study)
from locstat.cli import main

PAPER_NIG = NIGLevy(alpha=3.0, beta=1.0, delta_nig=2.0, mu=-2.0 / np.sqrt(8.0))


def tiny_lse_config(**over):
    base = dict(estimator="lse", noise=GaussianLevy(0.2), N_list=(1,),
                replications=2, T=200.0, n_points=3, sim_ratio=10,
                bandwidth_scale=30.0, seed=5)
    base.update(over)
    return StudyConfig(**base)


# --------------------------------------------------------------------------
# mise


def test_mise_constant_error():
    u = np.linspace(0.0, 10.0, 6)  # spacing 2
    est = np.full((4, 6), 1.5)
    truth = np.full(6, 1.0)
    assert mise(u, est, truth) == pytest.approx(0.25 * 2.0 * 6)


def test_mise_zero_error():
    u = np.linspace(0.0, 10.0, 5)
    truth = np.sin(u)
    assert mise(u, np.tile(truth, (3, 1)), truth) == 0.0


def test_mise_accepts_callable_truth():
    u = np.linspace(1.0, 2.0, 5)
    est = np.tile(u * 2.0, (2, 1))
    assert mise(u, est, lambda t: 2.0 * t) == 0.0


def test_mise_validation():
    with pytest.raises(ConfigurationError):
        mise(np.array([1.0]), np.array([[1.0]]), np.array([1.0]))
    with pytest.raises(ConfigurationError):
        mise(np.array([0.0, 1.0, 3.0]), np.zeros((2, 3)), np.zeros(3))


# --------------------------------------------------------------------------
# qq export


def test_qq_symmetric_input():
    x = np.concatenate([np.linspace(0.1, 2.0, 20),
                        -np.linspace(0.1, 2.0, 20)])
    pairs = qq_export(x)
    assert np.allclose(pairs[:, 1] + pairs[::-1, 1], 0.0, atol=1e-12)
    assert np.allclose(pairs[:, 0] + pairs[::-1, 0], 0.0, atol=1e-12)


def test_qq_constant_input():
    pairs = qq_export(np.full(25, 3.3))
    assert np.all(pairs[:, 1] == 3.3)


def test_qq_standard_normal_band():
    # the central-band gap stays below 0.3 for ~99.8% of seeds (checked
    # by simulating the gap distribution); a handful of seeds verify it
    for seed in (2718, 281, 828, 1828, 459):
        draws = np.random.default_rng(seed).standard_normal(400)
        assert qq_max_gap(draws) < 0.3


def test_qq_plotting_positions():
    pairs = qq_export(np.arange(10, dtype=float))
    assert pairs[0, 0] == pytest.approx(norm.ppf(0.05))
    assert pairs[-1, 0] == pytest.approx(norm.ppf(0.95))


def test_qq_needs_samples():
    with pytest.raises(ConfigurationError):
        qq_export(np.ones(5))


def test_qq_writes_csv(tmp_path):
    out = tmp_path / "qq.csv"
    qq_export(np.random.default_rng(1).standard_normal(50), out)
    rows = out.read_text().strip().split("\n")
    assert rows[0] == "theoretical,sample"
    assert len(rows) == 51


# --------------------------------------------------------------------------
# study config validation


def test_u_points_inside_central_band():
    cfg = tiny_lse_config()
    u = cfg.u_points()
    assert np.all(u >= 0.2 * cfg.T) and np.all(u <= 0.8 * cfg.T)


def test_explicit_u_outside_band_rejected():
    with pytest.raises(ConfigurationError, match="0.2"):
        tiny_lse_config(u_list=(10.0,))


def test_window_leaving_horizon_rejected():
    with pytest.raises(ConfigurationError, match="window"):
        tiny_lse_config(bandwidth_scale=150.0)


def test_replications_positive():
    with pytest.raises(ConfigurationError):
        tiny_lse_config(replications=0)


def test_unknown_estimator():
    with pytest.raises(ConfigurationError):
        tiny_lse_config(estimator="mle")


# --------------------------------------------------------------------------
# run_study


def test_single_cell_study():
    cfg = tiny_lse_config(replications=1, n_points=1, curve="a2")
    res = run_study(cfg)
    assert res.estimates.shape == (1, 1, 1, 1)
    assert np.isfinite(res.estimates).all()
    assert np.isnan(res.mise).all()  # a single point has no spacing
    assert res.std_errors is not None


def test_study_aggregates_shapes_and_failures():
    # an inadmissible parameter box makes every cell fail; the failures
    # are recorded and excluded from the aggregates
    cfg = tiny_lse_config(theta_box=(0.0, 5.0))
    res = run_study(cfg)
    assert len(res.failures) == 3 * 2
    assert np.isnan(res.estimates).all()
    assert np.isnan(res.mise).all()


def test_study_deterministic_outputs(tmp_path):
    cfg = tiny_lse_config()
    out1 = tmp_path / "run1"
    out2 = tmp_path / "run2"
    run_study(cfg).save(out1)
    run_study(tiny_lse_config()).save(out2)
    for name in ("estimates.csv", "mse.csv", "mise.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
    m1 = json.loads((out1 / "manifest.json").read_text())
    assert m1["seed"] == 5 and "config_hash" in m1


def test_estimates_roundtrip(tmp_path):
    cfg = tiny_lse_config()
    res = run_study(cfg)
    out = tmp_path / "study"
    res.save(out)
    with open(out / "estimates.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 1 * 3 * 2
    for row in rows:
        iu = list(res.u).index(float(row["u"]))
        rep = int(row["rep"])
        assert float(row["estimate"]) == res.estimates[0, iu, rep, 0]
        assert float(row["std_err"]) == res.std_errors[0, iu, rep]


def test_mise_decreases_in_tiny_qmle_study():
    # smoke coverage of the state-space branch of run_study
    cfg = StudyConfig(estimator="qmle", noise=GaussianLevy(0.2),
                      N_list=(1,), replications=1, T=200.0, n_points=1,
                      sim_ratio=10, bandwidth_scale=40.0, seed=2,
                      de_population=12, de_max_gens=25, de_tol=1e-6)
    res = run_study(cfg)
    assert res.estimates.shape == (1, 1, 1, 3)
    assert np.isfinite(res.estimates).all()
    fam_box_lo = np.array([-0.7, -3.5, 0.05])
    fam_box_hi = np.array([-0.3, -2.5, 1.0])
    assert np.all(res.estimates[0, 0, 0] >= fam_box_lo - 1e-9)
    assert np.all(res.estimates[0, 0, 0] <= fam_box_hi + 1e-9)


# --------------------------------------------------------------------------
# CLI


def test_cli_simulate_and_estimate_lse(tmp_path):
    out = tmp_path / "path.csv"
    code = main(["simulate", "--model", "ou", "--curve", "a2",
                 "--noise", "gauss", "--sigma2", "0.2", "--N", "1",
                 "--T", "50", "--sim-ratio", "5", "--seed", "3",
                 "--out", str(out)])
    assert code == 0
    with open(out) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "value"]
    assert len(rows) == 52

    est_out = tmp_path / "est.csv"
    code = main(["estimate-lse", "--curve", "a2", "--N", "1", "--points",
                 "3", "--noise", "gauss", "--sigma2", "0.2", "--T", "200",
                 "--sim-ratio", "10", "--bandwidth-scale", "30",
                 "--seed", "3", "--out", str(est_out)])
    assert code == 0
    with open(est_out) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["u", "a_true", "a_hat", "sigma_hat", "std_err"]
    assert len(rows) == 4


def test_cli_simulate_statespace(tmp_path):
    out = tmp_path / "ss.csv"
    code = main(["simulate", "--model", "statespace", "--noise", "gauss",
                 "--sigma2", "0.2", "--N", "1", "--T", "30",
                 "--sim-ratio", "4", "--seed", "1", "--out", str(out)])
    assert code == 0
    with open(out) as fh:
        header = next(csv.reader(fh))
    assert header == ["t", "value", "x1", "x2"]


def test_cli_estimate_qmle(tmp_path):
    out = tmp_path / "qmle.csv"
    code = main(["estimate-qmle", "--N", "1", "--points", "1", "--noise",
                 "gauss", "--sigma2", "0.2", "--T", "200", "--sim-ratio",
                 "10", "--bandwidth-scale", "40", "--seed", "2",
                 "--de-pop", "12", "--de-gens", "20", "--de-tol", "1e-5",
                 "--out", str(out)])
    assert code == 0
    with open(out) as fh:
        rows = list(csv.reader(fh))
    assert rows[0][:4] == ["u", "theta1_true", "theta2_true", "theta3_true"]
    assert len(rows) == 2


def test_cli_configuration_error_exit_code(tmp_path):
    # bandwidth 400 at N=1 does not fit inside [0, 200]
    code = main(["estimate-lse", "--curve", "a2", "--N", "1", "--points",
                 "3", "--T", "200", "--sim-ratio", "5", "--seed", "1",
                 "--out", str(tmp_path / "x.csv")])
    assert code == 2


def test_cli_montecarlo_with_config_file(tmp_path):
    cfg = {"estimator": "lse", "N_list": [1], "replications": 2,
           "T": 200.0, "n_points": 3, "sim_ratio": 10,
           "bandwidth_scale": 30.0, "seed": 5,
           "noise": {"kind": "gauss", "sigma2": 0.2}}
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    outdir = tmp_path / "study"
    code = main(["montecarlo", "--config", str(cfg_path),
                 "--outdir", str(outdir)])
    assert code == 0
    assert (outdir / "estimates.csv").exists()
    manifest = json.loads((outdir / "manifest.json").read_text())
    assert manifest["estimator"] == "lse"
    assert manifest["noise"]["kind"] == "gauss"

    # flag overrides beat the file
    outdir2 = tmp_path / "study2"
    code = main(["montecarlo", "--config", str(cfg_path), "--replications",
                 "1", "--outdir", str(outdir2)])
    assert code == 0
    manifest2 = json.loads((outdir2 / "manifest.json").read_text())
    assert manifest2["replications"] == 1


def test_cli_montecarlo_unknown_key_exit_2(tmp_path):
    cfg_path = tmp_path / "bad.json"
    cfg_path.write_text(json.dumps({"estimator": "lse", "bogus": 1}))
    code = main(["montecarlo", "--config", str(cfg_path),
                 "--outdir", str(tmp_path / "o")])
    assert code == 2
