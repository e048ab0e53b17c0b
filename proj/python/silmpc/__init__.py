"""Python access to the building MPC software-in-the-loop core.

Configs are plain dicts with the same keys as the JSON study config; missing
keys take their defaults.
"""

import json

from . import _core
from ._core import DimensionError, ParameterError, ParseError, QpResult, solve_qp

__all__ = [
    "DimensionError",
    "ParameterError",
    "ParseError",
    "QpResult",
    "config_fingerprint",
    "discretize",
    "effective_config",
    "log_metrics",
    "run_study",
    "solve_qp",
]


def _dump(config):
    return json.dumps(config or {})


def effective_config(config=None):
    """Full config with every default filled in."""
    return json.loads(_core.effective_config(_dump(config)))


def config_fingerprint(config=None):
    return _core.config_fingerprint(_dump(config))


def discretize(config=None):
    """(A, B, S) of the zero-order-hold building model."""
    return _core.discretize(_dump(config))


def run_study(config=None, scenarios=("S0",), jobs=1):
    """Runs the scenarios plus their prerequisites.

    Returns {"S0": {...}, ...} with wmare, wmre, rmse, monthly, retrain_steps,
    failsafe_count and the step log as CSV text under "log_csv".
    """
    return _core.run_study(_dump(config), list(scenarios), jobs)


def log_metrics(log_csv, config=None):
    return _core.log_metrics(log_csv, _dump(config))
