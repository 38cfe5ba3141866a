import math
import os
import tempfile

import numpy as np
import pytest

import faft


def test_sieve_rule():
    assert faft.q_n_rule(400) == 4
    assert faft.q_n_rule(800) == 5
    with pytest.raises(faft.ConfigError):
        faft.q_n_rule(10)


def test_true_functions():
    def phi(k, s):
        return 1.0 if k == 1 else math.sqrt(2) * math.cos((k - 1) * math.pi * s)

    want = sum((-1.0) ** k * k ** -1.5 * phi(k, 0.3) for k in range(1, 51))
    assert faft.true_beta(0.3) == pytest.approx(want, rel=1e-12)
    assert faft.true_loghazard("exponential", 0.4) == pytest.approx(0.4)
    with pytest.raises(faft.ConfigError):
        faft.true_loghazard("weibull", 0.0)


def test_simulate_is_deterministic():
    a = faft.simulate(n=200, seed=3)
    b = faft.simulate(n=200, seed=3)
    assert a["time"].shape == (200,)
    assert a["x"].shape == (200, 2)
    assert a["z"].shape == (200, 101)
    np.testing.assert_array_equal(a["time"], b["time"])
    np.testing.assert_array_equal(a["status"], b["status"])
    assert abs(a["achieved_censoring"] - 0.25) < 0.06
    assert set(np.unique(a["status"])) <= {0, 1}


def test_fit_recovers_alpha():
    sim = faft.simulate(n=400, seed=7)
    res = faft.fit(sim["time"], sim["status"], sim["x"], sim["z"], grid=sim["grid"])
    assert res["converged"]
    assert res["termination"] in ("gradient", "step")
    assert len(res["alpha"]) == 2
    for est, se in zip(res["alpha"], res["alpha_se"]):
        assert se > 0
        assert abs(est - 1.0) < 4 * se
    band = res["beta_band"]
    assert len(band["grid"]) == 101
    assert all(lo <= e <= hi for lo, e, hi in zip(band["lower"], band["estimate"], band["upper"]))
    lo, hi = res["support"]
    assert lo < hi


def test_fit_shape_errors():
    sim = faft.simulate(n=50, seed=1)
    with pytest.raises(faft.StructureError):
        faft.fit(sim["time"][:10], sim["status"], sim["x"], sim["z"])
    bad = sim["status"].copy()
    bad[0] = 2
    with pytest.raises(faft.DataError):
        faft.fit(sim["time"], bad, sim["x"], sim["z"])
    assert issubclass(faft.DataError, faft.FaftError)


def test_cli_wrapper():
    code, out, err = faft.run_cli(["--help"])
    assert code == 0
    code, _, err = faft.run_cli(["frobnicate"])
    assert code == 2
    with tempfile.TemporaryDirectory() as d:
        cfg = os.path.join(d, "sim.ini")
        with open(cfg, "w") as f:
            f.write("[simulate]\nn = 100\nlaw = exponential\ncensoring_rate = 0.25\n")
        code, _, err = faft.run_cli(["simulate", "--config", cfg, "--seed", "2", "--out", os.path.join(d, "s")])
        assert code == 0, err
        assert os.path.exists(os.path.join(d, "s", "dataset.csv"))
