"""Single-server retrial queue with event-dependent arrivals.

Models and problems are plain dicts in the same shape as the command-line
JSON files.
"""

import json

from . import _core
from ._core import ConfigError, NotAPgf, TruncationInsufficient, UnstableModel

__version__ = _core.__version__

__all__ = [
    "ConfigError",
    "NotAPgf",
    "TruncationInsufficient",
    "UnstableModel",
    "analyze",
    "departure_orbit_pmf",
    "evaluate",
    "optimize",
    "run_cli",
    "simulate",
    "stability_margin",
    "truncated_chain",
]


def _text(obj):
    return obj if isinstance(obj, str) else json.dumps(obj)


def stability_margin(model):
    return _core.stability_margin(_text(model))


def analyze(model, pmf_max=0):
    """Closed-form stationary report. Unstable models carry only the margin fields."""
    return json.loads(_core.analyze(_text(model), pmf_max))


def simulate(model, departures=100_000, warmup=None, reps=10, seed=1, threads=1, pmf_max=64):
    if warmup is None:
        warmup = departures // 10
    return json.loads(_core.simulate(_text(model), departures, warmup, reps, seed, threads, pmf_max))


def evaluate(problem, q):
    return _core.evaluate(_text(problem), list(q))


def optimize(problem, restarts=16, seed=1, threads=1):
    return json.loads(_core.optimize(_text(problem), restarts, seed, threads))


def departure_orbit_pmf(model, n_max):
    return _core.departure_orbit_pmf(_text(model), n_max)


def truncated_chain(model, max_orbit, tolerance=1e-10):
    return _core.truncated_chain(_text(model), max_orbit, tolerance)


def run_cli(*args):
    """Runs the command-line tool in-process and returns (exit_code, stdout, stderr)."""
    return _core.run_cli([str(a) for a in args])
