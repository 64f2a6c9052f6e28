"""Python bindings for the sparsity-agnostic Lasso bandit simulator."""

import json

from . import _core
from ._core import (
    IoError,
    NumericalError,
    bernstein_tail_bound,
    bernstein_threshold,
    check_bernstein,
    compatibility_constant,
    fit_lasso,
    lambda_schedule,
    lasso_objective,
    link_mean,
    restricted_eigenvalue,
    soft_threshold,
    version,
)

__all__ = [
    "IoError",
    "NumericalError",
    "balanced_covariance_constant",
    "bernstein_tail_bound",
    "bernstein_threshold",
    "check_bernstein",
    "check_matrix_concentration",
    "check_oracle_inequality",
    "compatibility_constant",
    "default_config",
    "fit_lasso",
    "lambda_schedule",
    "lasso_objective",
    "link_mean",
    "restricted_eigenvalue",
    "run_experiment",
    "simulate",
    "soft_threshold",
    "version",
]


def default_config():
    """Default simulation settings as a dict with the CLI key names."""
    return json.loads(_core.default_config())


def _config(config=None, **overrides):
    merged = default_config()
    merged.update(config or {})
    merged.update(overrides)
    return json.dumps(merged)


def run_experiment(config=None, **overrides):
    """Runs a simulation and returns traces and per-policy summaries in memory."""
    return _core.run_experiment(_config(config, **overrides))


def simulate(config=None, **overrides):
    """Runs a simulation and writes regret.csv, summary.csv and manifest.json to `out`."""
    _core.simulate(_config(config, **overrides))


def check_oracle_inequality(**overrides):
    return _core.check_oracle_inequality(json.dumps(overrides))


def check_matrix_concentration(max_ratio=0.7, **overrides):
    return _core.check_matrix_concentration(json.dumps(overrides), max_ratio)


def balanced_covariance_constant(beta, arms=3, rho2=0.0, **kwargs):
    import numpy as np

    beta = np.asarray(beta, dtype=float)
    return _core.balanced_covariance_constant(beta.size, arms, rho2, beta, **kwargs)
