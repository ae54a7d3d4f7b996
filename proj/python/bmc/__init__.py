"""Bifurcating Markov chains: simulation, exact oracles, estimation and experiments."""

import json

import numpy as np

from . import _core
from ._core import (
    BmcError,
    asymmetry_test,
    asymptotic_covariance,
    ergodicity_constants,
    evaluate_bound,
    stationary_distribution,
    stationary_moments,
)

__all__ = [
    "BmcError",
    "ancestor_events",
    "asymmetry_test",
    "asymptotic_covariance",
    "brute_force_moment",
    "ergodicity_constants",
    "estimate",
    "evaluate_bound",
    "run_experiment",
    "second_moment_generation",
    "simulate_tree",
    "stationary_distribution",
    "stationary_moments",
]


def _text(spec):
    return spec if isinstance(spec, str) else json.dumps(spec)


def simulate_tree(model, depth, seed):
    """Values X_1..X_{2^{depth+1}-1} in heap order for a model dict."""
    return _core.simulate_tree(_text(model), depth, seed)


def estimate(values, r=None, level=0.05):
    """Estimator report for a complete tree given in heap order."""
    return json.loads(_core.estimate(np.asarray(values, dtype=float), r, level))


def second_moment_generation(kernel, f, r):
    return _core.second_moment_generation(_text(kernel), np.asarray(f, dtype=float), r)


def brute_force_moment(kernel, f, order, scope, index):
    return _core.brute_force_moment(_text(kernel), np.asarray(f, dtype=float), order, scope, index)


def ancestor_events(r, p):
    return json.loads(_core.ancestor_events(r, p))


def run_experiment(config, seed=None, workers=1):
    """Runs an experiment config dict; returns (summary dict, csv text)."""
    summary, csv = _core.run_experiment(_text(config), seed, workers)
    return json.loads(summary), csv
