import csv
import math

import numpy as np
import pytest

import sabandit


def test_soft_threshold_and_schedule():
    assert sabandit.soft_threshold(3.0, 1.0) == 2.0
    assert sabandit.soft_threshold(-0.5, 1.0) == 0.0
    assert sabandit.lambda_schedule(2.0, 1, 100) == pytest.approx(6.0697, abs=1e-4)
    with pytest.raises(ValueError):
        sabandit.soft_threshold(1.0, -1.0)


def test_fit_lasso_orthonormal():
    n = 4
    X = math.sqrt(n) * np.eye(n)
    y = np.array([2.0, -0.3, 0.05, -1.7])
    sol = sabandit.fit_lasso(X, y, 0.25)
    c = X.T @ y / n
    expected = np.sign(c) * np.maximum(np.abs(c) - 0.25, 0.0)
    assert sol["converged"]
    np.testing.assert_allclose(sol["beta"], expected, atol=1e-9)
    assert sol["objective"] == pytest.approx(sabandit.lasso_objective(X, y, 0.25, "linear", sol["beta"]))


def test_fit_lasso_logistic_and_errors():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(30, 3))
    y = (rng.uniform(size=30) < 0.5).astype(float)
    sol = sabandit.fit_lasso(X, y, 0.05, link="logistic", record_trace=True)
    trace = sol["objective_trace"]
    assert all(b <= a + 1e-14 for a, b in zip(trace, trace[1:]))
    y[0] = np.nan
    with pytest.raises(sabandit.NumericalError):
        sabandit.fit_lasso(X, y, 0.05)


def test_run_experiment_oracle_is_zero():
    result = sabandit.run_experiment(d=6, s0=2, horizon=40, runs=2, policies=["oracle", "sa_lasso", "random"])
    assert set(result["summary"]) == {"oracle", "sa_lasso", "random"}
    assert result["summary"]["oracle"]["mean"][-1] == 0.0
    for trace in result["traces"]:
        cum = trace["cum_regret"]
        assert len(cum) == 40
        assert all(b >= a for a, b in zip(cum, cum[1:]))


def test_simulate_writes_csv(tmp_path):
    out = tmp_path / "sim"
    sabandit.simulate(d=5, s0=2, horizon=20, runs=2, policies=["sa_lasso", "oracle"], out=str(out))
    with open(out / "summary.csv") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 2 * 20
    assert set(rows[0]) == {"policy", "t", "mean_cum_regret", "std_cum_regret"}


def test_invalid_config_raises():
    with pytest.raises(ValueError):
        sabandit.run_experiment(d=1)
    with pytest.raises(ValueError):
        sabandit.run_experiment(bogus=3)


def test_diagnostics():
    assert sabandit.compatibility_constant(np.eye(5), [0, 2]) == pytest.approx(1.0, abs=0.02)
    assert sabandit.restricted_eigenvalue(np.eye(5), [1]) == pytest.approx(1.0, abs=1e-9)
    report = sabandit.check_bernstein(d=3, trials=2000)
    assert report["pass"]
    assert sabandit.bernstein_tail_bound(200, 0.1) == pytest.approx(math.exp(-10.0))
    balanced = sabandit.balanced_covariance_constant(np.ones(4), arms=3, samples=20000)
    assert 0.0 < balanced["estimate"] <= 2.0 + 3 * balanced["standard_error"]
    conc = sabandit.check_matrix_concentration(trajectories=5, **{"mc-draws": 2000})
    assert "csv" in conc and conc["decay_ratio"] > 0.0
