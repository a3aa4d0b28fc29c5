"""End-to-end smoke tests for the Python bindings and packaged CLI."""

import math
import os
import subprocess

import numpy as np
import pytest

import blqr


def make_panel(seed=7, n=40, T=5):
    truth = blqr.TruthSpec()
    truth.beta_true = np.array([1.0, -0.5])
    truth.Sigma_true = blqr.SpdMatrix(np.eye(1) * 0.5)
    truth.h_true = 2.0
    truth.n = n
    truth.T = T
    return blqr.gen_mean_panel(truth, seed)


def short_config(seed=7, iterations=400, burn_in=100):
    cfg = blqr.RunConfig()
    cfg.iterations = iterations
    cfg.burn_in = burn_in
    cfg.seed = seed
    return cfg


def test_scalar_helpers():
    assert blqr.ihs(0.0) == 0.0
    assert math.isclose(blqr.ihs(10000.0), 9.903487555036127, rel_tol=1e-12)
    theta, tau = blqr.al_params(0.25)
    assert math.isclose(theta, (1 - 2 * 0.25) / (0.25 * 0.75), rel_tol=1e-12)
    assert math.isclose(tau, math.sqrt(2 / (0.25 * 0.75)), rel_tol=1e-12)
    assert math.isclose(blqr.check_loss(-2.0, 0.3), 1.4, rel_tol=1e-12)
    assert math.isclose(blqr.al_log_density(0.0, 0.0, 2.0, 0.5), math.log(0.5), rel_tol=1e-12)


def test_generated_panel_shapes():
    data = make_panel()
    assert (data.n, data.T, data.k, data.l) == (40, 5, 2, 1)
    assert data.X.shape == (200, 2)
    assert data.S.shape == (200, 1)
    assert data.y.shape == (200,)
    assert data.fixed_names == ["intercept", "x1"]
    assert data.random_names == ["intercept"]
    assert len(data.ids) == 40


def test_mean_chain_and_summary():
    data = make_panel()
    chain = blqr.run_mean_gibbs(data, blqr.PriorSpec.defaults(2, 1), short_config())
    assert chain.model == "mean"
    assert chain.draw_count() == 300
    assert chain.beta.shape == (300, 2)
    assert abs(chain.beta[:, 0].mean() - 1.0) < 0.5

    rows = blqr.summarize(chain)
    names = [r.name for r in rows]
    assert names == ["intercept", "x1", "h", "sqrt_sigma_11"]
    series = blqr.summary_series(chain, "h")
    assert series.shape == (300,)
    assert math.isclose(series.mean(), rows[2].mean, rel_tol=1e-12)


def test_quantile_chain_and_fit_report():
    data = make_panel()
    chain = blqr.run_quantile_gibbs(data, blqr.PriorSpec.defaults(2, 1), 0.5, short_config())
    assert chain.model == "quantile"
    assert chain.p == 0.5
    assert chain.nu.shape == (300, 200)
    assert (chain.nu > 0).all()

    report = blqr.fit_report(chain, data)
    assert report.df == 2 + 1 + 40 * 1 + 1
    assert math.isclose(report.caic, -2 * report.log_l + 2 * report.df, rel_tol=1e-12)
    assert math.isclose(
        report.cbic, -2 * report.log_l + math.log(200) * report.df, rel_tol=1e-12
    )


def test_grid_oracle_tuple():
    y = np.array([0.8, 1.3, -0.2, 0.5])
    X = np.array([[1.0], [0.4], [-0.9], [1.7]])
    data = blqr.PanelDataset(2, 2, y, X, np.empty((4, 0)), ["x"], [])
    mean, var = blqr.grid_posterior_oracle(data, blqr.PriorSpec.defaults(1, 0), "mean")
    assert math.isfinite(mean) and var > 0
    qmean, qvar = blqr.grid_posterior_oracle(
        data, blqr.PriorSpec.defaults(1, 0), "quantile", p=0.3
    )
    assert math.isfinite(qmean) and qvar > 0


def test_error_translation():
    y = np.array([0.8, float("nan"), -0.2, 0.5])
    X = np.ones((4, 1))
    with pytest.raises(ValueError):
        blqr.PanelDataset(2, 2, y, X, np.empty((4, 0)), ["x"], [])

    data = make_panel()
    bad = short_config()
    bad.iterations = -1
    with pytest.raises(ValueError):
        blqr.run_mean_gibbs(data, blqr.PriorSpec.defaults(2, 1), bad)

    with pytest.raises(ArithmeticError):
        blqr.grid_posterior_oracle(data, blqr.PriorSpec.defaults(2, 1), "mean")


def test_chain_roundtrip(tmp_path):
    data = make_panel()
    chain = blqr.run_mean_gibbs(data, blqr.PriorSpec.defaults(2, 1), short_config())
    path = tmp_path / "chain.bin"
    blqr.write_chain(str(path), chain)
    loaded, manifest_hash, echo = blqr.read_chain(str(path))
    assert manifest_hash == "0000000000000000"
    assert echo == ""
    assert np.array_equal(loaded.beta, chain.beta)
    assert np.array_equal(loaded.h, chain.h)
    assert loaded.fixed_names == chain.fixed_names


def test_cli_in_process_roundtrip(tmp_path):
    sim = tmp_path / "sim"
    code, out, err = blqr.run_cli(
        ["simulate", "--model", "mean", "--n", "8", "--T", "3", "--k", "2",
         "--l", "1", "--seed", "5", "--out", str(sim)]
    )
    assert code == 0, err
    assert (sim / "panel.csv").exists()
    with open(sim / "run.cfg", "a") as f:
        f.write("iterations = 400\nburn_in = 100\n")

    def fit(tag):
        out_dir = tmp_path / tag
        code, out, err = blqr.run_cli(
            ["fit", "--config", str(sim / "run.cfg"), "--out", str(out_dir)]
        )
        assert code == 0, err
        assert "panel: n=8 T=3 k=2 l=1" in out
        return (out_dir / "mean" / "chain.bin").read_bytes()

    first = fit("a")
    second = fit("b")
    assert first and first == second

    code, out, err = blqr.run_cli(["fit", "--config", str(tmp_path / "missing.cfg")])
    assert code == 1
    assert err.startswith("ERROR:config:")


def test_cli_binary_help():
    cli = os.environ.get("BLQR_CLI")
    if not cli:
        pytest.skip("BLQR_CLI not set")
    proc = subprocess.run([cli, "--help"], capture_output=True, timeout=60)
    assert proc.returncode == 0
    assert b"fit" in proc.stdout and b"simulate" in proc.stdout
